"""Exception types shared across the package."""


class CnoptError(Exception):
    """Base class for every error raised by this package."""


class LiftInfeasible(CnoptError):
    """A lift map produced a point that violates the equality constraints."""


class MissingHessian(CnoptError):
    """An operation needs a Hessian-vector product the field does not provide."""


class NotExact(CnoptError):
    """Operation requires an exact lifted form."""


class NonExactNegativeScale(CnoptError):
    """Nonpositive scalar combined with a non-exact lifted form."""


class MonotonicityRefuted(CnoptError):
    """Sampling found the outer map of a composition to be decreasing."""


class LineSearchFailed(CnoptError):
    """Backtracking found no acceptable step (inconsistent gradient or
    objective unbounded below along the ray)."""


class NotPsd(CnoptError):
    """Curvature matrix handed to a direction subproblem is not PSD."""


class GradeMismatch(CnoptError):
    """Convexity grade of the form does not supply the data a check needs."""


class NoLift(CnoptError):
    """Operation needs lift branches the form does not supply."""


class NotDecomposable(CnoptError):
    """A constraint's support straddles more than one partition block."""


class BlockIndexOutOfRange(CnoptError):
    """Block index outside the partition."""


class InnerFailure(CnoptError):
    """Inner smooth minimiser failed on one block."""

    def __init__(self, block: int, message: str = ""):
        self.block = block
        super().__init__(message or f"inner solve failed on block {block}")


class BadSpec(CnoptError):
    """Invalid bundled-problem specification."""


class TooLarge(CnoptError):
    """Problem too large for an exhaustive operation."""
