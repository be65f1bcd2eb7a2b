from kinetics.exceptions import KineticsError


class PhysicsError(KineticsError):
    pass


class ModelError(PhysicsError):
    """Inconsistent model parameters or unknown registry entry."""


class BathUnstable(PhysicsError):
    """beta * omega(k) - mu <= 0: the Gibbs state of the bath is not normalizable."""


class GridTooCoarse(PhysicsError):
    """Finite-difference stencils do not fit inside the sampling grid."""
