from kinetics.exceptions import KineticsError


class KernelError(KineticsError):
    pass


class QuadratureFail(KernelError):
    """Adaptive oscillatory quadrature stalled above its tolerance."""


class RouteMismatch(KernelError):
    """Direct and time-representation evaluations of the resolvent disagree."""


class NoOpenChannel(KernelError):
    """Both collision branches are closed at this momentum."""
