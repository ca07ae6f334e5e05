"""Exception types shared across the package."""


class WindowTooSmall(ValueError):
    """A sampled function does not decay below tolerance at the window edge."""


class ShapeMismatch(ValueError):
    """Two grid functions do not share a window and sample layout."""


class InvalidExponents(ValueError):
    """Type-S exponents outside the admissible range."""


class OddLength(ValueError):
    """An exponent vector that should have even length does not."""


class QuadratureFailure(RuntimeError):
    """An adaptive quadrature failed to meet its error target."""


class ContourDivergence(RuntimeError):
    """A contour integral whose tail does not pass the decay test."""


class OnBranchCut(ValueError):
    """Argument within tolerance of a branch cut of the inverse twisting map."""


class TailDivergence(RuntimeError):
    """A tail estimate that fails to shrink under refinement."""
