from typing import Optional


class LindbladFitError(Exception):
    """Base class for every error raised by lindblad-fit"""

    exit_code = 1

    def __init__(self, message: str, hint: Optional[str] = None):
        super().__init__(message)
        self.hint = hint

    def __str__(self) -> str:
        base = super().__str__()
        if self.hint:
            return f"{base} (hint: {self.hint})"
        return base


class InputError(LindbladFitError):
    """Malformed input: parse errors, bad shapes, unknown names, bad time grids"""

    exit_code = 2


class InvariantError(LindbladFitError):
    """A domain invariant does not hold (Hermiticity, trace preservation, positivity)"""

    exit_code = 3


class NotCompletelyPositiveError(InvariantError):
    """A Choi matrix or projected Choi matrix has a negative eigenvalue beyond tolerance"""

    def __init__(self, message: str, min_eigenvalue: float = 0.0, hint: Optional[str] = None):
        super().__init__(message, hint)
        self.min_eigenvalue = min_eigenvalue


class NumericalError(LindbladFitError):
    exit_code = 4


class BranchCutError(NumericalError):
    """Eigenvalue on the closed negative real axis; the principal logarithm is ambiguous"""


class SingularMatrixError(NumericalError):
    pass


class NonConvergenceError(NumericalError):
    """Iterative routine hit its cap or produced non-finite values"""

    def __init__(self, message: str, parameters=None, hint: Optional[str] = None):
        super().__init__(message, hint)
        self.parameters = parameters
