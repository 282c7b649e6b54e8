"""Exception types shared across the package."""


class SpinPhaseError(Exception):
    """Base class for package errors."""


class DimensionError(SpinPhaseError, ValueError):
    """Operands live on different numbers of qubits or sites."""


class ValidationError(SpinPhaseError, ValueError):
    """An input violates a documented precondition."""


class UnsupportedRepresentationError(SpinPhaseError, ValueError):
    """Operation only defined for a particular s-index."""


class NumericalError(SpinPhaseError, RuntimeError):
    """Integration diverged, a CFL bound was violated, or a denominator vanished."""


class StepSizeError(NumericalError):
    pass


class CFLError(NumericalError):
    pass


class ImpossiblePrefixError(NumericalError):
    pass
