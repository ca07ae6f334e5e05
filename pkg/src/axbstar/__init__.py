"""Star-product calculus on the ax+b group plane.

An exact rational engine for the formal Moyal calculus of the affine Lie
algebra, FFT/quadrature engines for the symplectic Fourier transform, twisted
convolution and the Weyl product, growth certificates for type-S function
spaces, a bilateral Laplace transform with vertical-contour inversion, the
sinh twisting maps, and the intertwined (left-invariant) twisted Weyl product
together with its exponential-growth "hat" presentation.
"""

from axbstar.errors import (
    ContourDivergence,
    InvalidExponents,
    OddLength,
    OnBranchCut,
    QuadratureFailure,
    ShapeMismatch,
    TailDivergence,
    WindowTooSmall,
)

__version__ = "0.1.0"

__all__ = [
    "ContourDivergence",
    "InvalidExponents",
    "OddLength",
    "OnBranchCut",
    "QuadratureFailure",
    "ShapeMismatch",
    "TailDivergence",
    "WindowTooSmall",
    "__version__",
]
