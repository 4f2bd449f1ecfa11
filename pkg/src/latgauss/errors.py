"""Exception types shared across the package."""


class LatgaussError(Exception):
    """Base class for all package-specific errors."""


class NonSquare(LatgaussError):
    """Basis matrix is not square."""


class SingularBasis(LatgaussError):
    """Basis matrix is singular or numerically rank-deficient."""


class DimensionMismatch(LatgaussError):
    """Vector dimension does not match the lattice dimension."""


class UnknownName(LatgaussError):
    """Named lattice string could not be parsed."""


class InvalidParams(LatgaussError):
    """Parameter values violate a precondition."""


class NonPositive(InvalidParams):
    """A strictly positive quantity was given as zero or negative."""


class BudgetExceeded(LatgaussError):
    """Enumeration would exceed the configured point budget."""


class NotNested(LatgaussError):
    """Coarse lattice is not a sublattice of the fine lattice."""


class BracketFailure(LatgaussError):
    """Root bracketing failed: no sign change in the search interval."""


class ResolutionExceeded(LatgaussError):
    """Monte Carlo confidence interval cannot resolve the requested decision."""


class InternalMismatch(LatgaussError):
    """Two independent computations of the same quantity disagree beyond tolerance."""


class UsageError(LatgaussError):
    """Command line or config-file usage error."""
