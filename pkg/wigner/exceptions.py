from kinetics.exceptions import KineticsError


class WignerError(KineticsError):
    pass


class GridMismatch(WignerError):
    """A momentum pair (v + xi/2, v - xi/2) falls off the momentum grid."""


class NormUnbounded(WignerError):
    """The observable norm int sup_v |J^(xi, v)| dxi exceeds the configured cap."""


class PairingMismatch(WignerError):
    """<J, W> and Tr(gamma O) disagree beyond the grid tolerance."""


class InvalidDensityMatrix(WignerError):
    """The kernel is not Hermitian, not positive or not normalizable."""
