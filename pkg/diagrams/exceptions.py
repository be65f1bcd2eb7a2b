from kinetics.exceptions import KineticsError


class DiagramError(KineticsError):
    pass


class ParityMismatch(DiagramError):
    """n and N differ in parity, or n > N."""


class TooLarge(DiagramError):
    """Exhaustive enumeration requested beyond the configured size."""


class InvalidPairing(DiagramError):
    """Not a permutation, not a perfect matching, or a marker outside its pattern class."""
