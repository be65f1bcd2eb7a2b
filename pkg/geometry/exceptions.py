from kinetics.exceptions import KineticsError


class GeometryError(KineticsError):
    pass


class DegenerateGradient(GeometryError):
    """The level set carries points where |grad psi| is below the configured floor."""


class NonConvergent(GeometryError):
    """Richardson extrapolation in the mollifier width did not settle."""


class InvalidProbe(GeometryError):
    """Probe parameters violate the preconditions of the volume bounds."""
