from kinetics.exceptions import KineticsError


class QuantumError(KineticsError):
    pass


class DimensionCap(QuantumError):
    """The truncated Fock space is larger than the configured cap."""


class StepRejected(QuantumError):
    """Krylov propagation did not meet its error budget."""
