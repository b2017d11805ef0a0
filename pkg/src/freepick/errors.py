"""Exception types shared across the package."""


class FreePickError(Exception):
    """Base class for all package errors."""


class InputError(FreePickError, ValueError):
    """Malformed or inconsistent input data (bad shapes, specs, JSON)."""


class SpecMismatch(InputError):
    """An element or point does not live over the algebra an operation expects."""


class NotHermitian(InputError):
    """A matrix declared self-adjoint is too far from Hermitian to symmetrize."""


class DomainError(FreePickError, ValueError):
    """A point lies outside the region an operation is defined on."""


class SingularResolvent(FreePickError, ArithmeticError):
    """A resolvent-type inverse was requested of a numerically singular operator."""

    def __init__(self, message, smallest=None, largest=None):
        super().__init__(message)
        self.smallest = smallest
        self.largest = largest


class RangeNotPerpendicular(FreePickError):
    """The range of V meets ker(1 - L); the growth condition at infinity fails."""


class SingularCompression(FreePickError):
    """The compressed unitary still has an eigenvalue at 1 (internal inconsistency)."""


class IllConditionedFit(FreePickError, ArithmeticError):
    """A least-squares fit was too ill-conditioned to be trusted."""

    def __init__(self, message, condition_number):
        super().__init__(message)
        self.condition_number = condition_number
