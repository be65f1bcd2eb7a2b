from kinetics.exceptions import KineticsError


class BoltzmannError(KineticsError):
    pass


class ShellViolation(BoltzmannError):
    """Consecutive chain momenta are off the collision shell."""
