"""Exception hierarchy shared by every jsrkit module."""


class JSRError(Exception):
    """Base class for all jsrkit errors."""


class ComputationError(JSRError, ArithmeticError):
    """A dense kernel (eigen/singular value solver) failed to converge."""


class NotPositiveDefiniteError(JSRError, ValueError):
    def __init__(self, pivot, value):
        self.pivot = pivot
        self.value = value
        super().__init__(f"matrix is not positive definite: pivot {pivot} = {value!r}")


class InvariantViolation(JSRError):
    """An internal invariant of a domain object does not hold."""


class ProductOverflowError(JSRError, OverflowError):
    def __init__(self, what="matrix power"):
        super().__init__(f"{what} overflowed; rescale the input (e.g. divide by its norm) first")


class DegenerateInputError(JSRError, ValueError):
    pass


class DomainError(JSRError, ValueError):
    pass


class ShapeError(JSRError, ValueError):
    pass


class MalformedWordError(JSRError, ValueError):
    pass


class SingularTransformError(JSRError, ValueError):
    pass


class PreconditionError(JSRError, ValueError):
    pass


class StaleCertificateError(JSRError, ValueError):
    pass


class BudgetExceededError(JSRError):
    """Raised when an enumeration would exceed its multiplication budget.

    ``partial`` carries whatever was computed before the budget ran out
    (possibly ``None``).
    """

    def __init__(self, needed, budget, partial=None):
        self.needed = needed
        self.budget = budget
        self.partial = partial
        super().__init__(f"work budget exceeded: need {needed}, budget {budget}")


class FamilyFileError(JSRError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
