"""The intertwined (left-invariant) star product and its hat presentation.

The partial intertwiners act in the second variable only, slice by slice in
the first:

    tau[k, q] = id_{x1} (x) ( L^{-1} o (phi_{q, k pi/2}^{-1})^* o L )_{x2}
    T[k, q]   = id_{x1} (x) ( L^{-1} o (phi_{q, k pi/2})^*      o L )_{x2}

and the star product transports the Weyl product through them:

    star(u, v) = tau( T(u) weyl_product T(v) ).

Numerical domains (ledgered):

* k = 1 with abscissa c = 0 keeps every Laplace argument on the imaginary
  axis in both directions, so the full pipeline runs numerically on the
  closed-form corpus.
* k = 0 maps contours deep into the strip; the forward map T converges on
  plain Gaussians only for q c in (pi/4, pi/2), outside the default abscissa
  interval.  Observables for k = 0 are therefore built as tau images carrying
  their S-side preimage, and T returns the stored preimage -- T is only
  defined on the range of tau in the first place.  The backward map tau is
  stable on grids for every admissible c, which is what star needs.

The commutative product ``bullet`` conjugates the pointwise product by the
integral transform with kernel exp(gamma sinh(nu z) l / nu), and the "hat"
presentation evaluates the first variable on the imaginary axis, which is
where observables of exponential growth live.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from axbstar.carriers import AnalyticHandle, GridFunction2D, sample
from axbstar.errors import ContourDivergence, ShapeMismatch
from axbstar.laplace_twist import TwistParams, phi, phi_inv
from axbstar.transforms import weyl_product, weyl_product_direct

__all__ = [
    "TwistedObservable",
    "default_abscissa",
    "admissible_interval",
    "tau_partial",
    "T_partial",
    "make_observable",
    "star",
    "ZImage",
    "bullet",
    "check_bullet_derivation",
    "hat",
    "HatFunction",
    "hat_star",
]

DEFAULT_WINDOW = (-10.0, 10.0, -10.0, 10.0)
DEFAULT_N = 128
Q_DEGENERATE = 1e-12
_EXP_CAP = 650.0  # |Re(w) * l| beyond this would overflow exp


def default_abscissa(k: int, q: float) -> float:
    return 1.0 if k == 0 else 0.0


def admissible_interval(k: int, q: float) -> tuple[float, float]:
    if k == 0:
        return (0.5, 2.0)
    if abs(q) < Q_DEGENERATE:
        return (-np.inf, np.inf)
    return (-np.pi / (2 * abs(q)), np.pi / (2 * abs(q)))


def _validate_c(k: int, q: float, c: float) -> None:
    if k not in (0, 1):
        raise ValueError("k must be 0 or 1")
    if k == 0 and c <= 0:
        raise ValueError("k = 0 requires a positive contour abscissa")
    lo, hi = admissible_interval(k, q)
    if not (lo <= c <= hi) and k == 1:
        raise ValueError(f"abscissa {c} outside the admissible interval ({lo}, {hi})")


@dataclass
class TwistedObservable:
    """An element of the intertwined algebra.

    ``base`` carries the observable itself; ``s_preimage`` (when present) is
    the function whose tau image the base is, i.e. the value of T on the
    observable.  ``representation`` is "plain" or "hat".
    """

    base: AnalyticHandle | GridFunction2D
    k: int
    q: float
    representation: str = "plain"
    c: float | None = None
    s_preimage: AnalyticHandle | GridFunction2D | None = None

    def __post_init__(self):
        if self.k not in (0, 1):
            raise ValueError("k must be 0 or 1")
        if self.representation not in ("plain", "hat"):
            raise ValueError("representation must be 'plain' or 'hat'")
        if self.representation == "hat" and not isinstance(self.base, AnalyticHandle):
            raise ValueError("hat representation needs a complex-evaluable base")
        if self.c is None:
            self.c = default_abscissa(self.k, self.q)
        if abs(self.q) >= Q_DEGENERATE:
            _validate_c(self.k, self.q, self.c)


# ---------------------------------------------------------------------------
# slice transforms
# ---------------------------------------------------------------------------


class _HandleSlices:
    """x2-slices of a 2-variable handle at given (possibly complex) x1 values."""

    def __init__(self, f: AnalyticHandle, x1_values: np.ndarray):
        if f.dims != 2:
            raise ValueError("need a 2-variable handle")
        self.x1 = np.asarray(x1_values, complex)
        q2 = complex(f.quad[1, 1])
        cross = complex(f.quad[0, 1] + f.quad[1, 0])
        self._images = []
        for x1 in self.x1:
            coeffs = np.polynomial.polynomial.polyval(x1, f.poly)  # poly in x2
            coeffs = np.atleast_1d(coeffs)
            scale = f.scale * np.exp(-f.quad[0, 0] * x1 * x1 + f.shift[0] * x1)
            if abs(scale) == 0.0 or not np.any(coeffs):
                self._images.append(None)
                continue
            h1 = AnalyticHandle(
                1, coeffs, [[q2]], [complex(f.shift[1]) - cross * x1], scale
            )
            self._images.append(h1.fourier_closed_form())

        self.decay = q2.real

    def laplace_at(self, w: np.ndarray) -> np.ndarray:
        """L(slice)(w) for every slice; closed form, (nslices, nw)."""
        xi = 1j * np.asarray(w, complex)
        out = np.zeros((len(self._images), xi.size), complex)
        for i, fh in enumerate(self._images):
            if fh is None:
                continue
            p = np.polynomial.polynomial.polyval(xi, fh.poly)
            out[i] = fh.scale * p * np.exp(-fh.quad[0, 0] * xi * xi + fh.shift[0] * xi)
        return out

    def max_re_w(self, l_max: float) -> float:
        return _EXP_CAP  # closed form: no kernel overflow constraint


class _GridSlices:
    """Rows of a grid function, Laplace-transformed by trapezoid on its x2 grid."""

    def __init__(self, values: np.ndarray, x2_grid: np.ndarray, h2: float):
        self.values = np.asarray(values, complex)
        self.l = np.asarray(x2_grid, float)
        self.h = h2
        w = np.ones(self.l.size)
        w[0] = w[-1] = 0.5
        self._trap = w * h2
        self.decay = None

    def laplace_at(self, w: np.ndarray) -> np.ndarray:
        ww = np.asarray(w, complex)
        ker = np.exp(np.multiply.outer(-ww, self.l)) * self._trap[None, :]
        return self.values @ ker.T

    def max_re_w(self, l_max: float) -> float:
        return _EXP_CAP / max(np.abs(self.l).max(), 1.0)


def _pullback(k: int, q: float, c: float, ts: np.ndarray, direction: str) -> np.ndarray:
    p = TwistParams(q, k * np.pi / 2.0)
    z = c + 1j * np.asarray(ts, float)
    return phi(p, z) if direction == "T" else phi_inv(p, z)


def _choose_t_max(slices, k, q, c, direction, rel=1e-13, t_cap=2.0e5) -> float:
    """Grow the contour half-length until the integrand magnitude has decayed."""
    re_cap = slices.max_re_w(1.0)
    peak = 0.0
    t = 1.0
    grow_count = 0
    last = None
    while t <= t_cap:
        w = _pullback(k, q, c, np.array([-t, t]), direction)
        if np.abs(w.real).max() > re_cap:
            return t  # stop before the kernel overflows; beyond is inadmissible
        val = float(np.abs(slices.laplace_at(w)).max())
        peak = max(peak, val)
        if peak > 0 and val <= rel * peak:
            return 2.0 * t
        if last is not None and val > last * 1.5 and val > 1e3 * (peak + 1.0):
            grow_count += 1
            if grow_count >= 3:
                raise ContourDivergence(
                    f"transform integrand grows along the contour (k={k}, q={q}, c={c})"
                )
        last = val
        t *= 1.4
    raise ContourDivergence(f"no contour decay out to t = {t_cap}")


def _intertwine_rows(
    slices,
    x2_out: np.ndarray,
    k: int,
    q: float,
    c: float,
    direction: str,
    tol: float = 1e-9,
) -> np.ndarray:
    """Apply the partial transform to every slice; rows out over x2_out."""
    t_max = _choose_t_max(slices, k, q, c, direction)
    x_abs = float(np.abs(x2_out).max())
    n = max(512, int(np.ceil(2.0 * t_max * (x_abs + 4.0) / np.pi)) + 1)
    prev = None
    for _ in range(4):
        ts = np.linspace(-t_max, t_max, n)
        w = _pullback(k, q, c, ts, direction)
        g = slices.laplace_at(w)
        trap = np.full(n, ts[1] - ts[0])
        trap[0] = trap[-1] = 0.5 * (ts[1] - ts[0])
        p = np.exp(np.multiply.outer(x2_out, c + 1j * ts)) * trap[None, :]
        out = (g @ p.T) / (2.0 * np.pi)
        if prev is not None:
            scale = np.abs(out).max() + 1e-300
            if np.abs(out - prev).max() <= tol * scale:
                return out
        prev = out
        n = 2 * n - 1
    return prev


def _as_grid(u, window, n) -> GridFunction2D:
    if isinstance(u, GridFunction2D):
        return u
    if isinstance(u, AnalyticHandle):
        return sample(u, window, n, n)
    raise TypeError(f"cannot grid a {type(u).__name__}")


def _slices_of(u, window, n):
    """Slice view plus the output grid template for a handle or grid input."""
    if isinstance(u, AnalyticHandle):
        template = GridFunction2D(window, n, n, np.zeros((n, n), complex))
        return _HandleSlices(u, template.x1.astype(complex)), template
    if isinstance(u, GridFunction2D):
        return _GridSlices(u.values, u.x2, u.h2), u
    raise TypeError(f"cannot slice a {type(u).__name__}")


def tau_partial(
    k: int,
    q: float,
    u,
    c: float | None = None,
    window=DEFAULT_WINDOW,
    n: int = DEFAULT_N,
    tol: float = 1e-9,
) -> GridFunction2D:
    """tau[k, q] applied slice-wise; identity when q is degenerate."""
    if c is None:
        c = default_abscissa(k, q)
    if abs(q) < Q_DEGENERATE:
        return _as_grid(u, window, n)
    _validate_c(k, q, c)
    slices, template = _slices_of(u, window, n)
    vals = _intertwine_rows(slices, template.x2, k, q, c, "tau", tol)
    return template.like(vals)


def T_partial(
    k: int,
    q: float,
    u,
    c: float | None = None,
    window=DEFAULT_WINDOW,
    n: int = DEFAULT_N,
    tol: float = 1e-9,
) -> GridFunction2D:
    """T[k, q] applied slice-wise (the inverse direction of tau).

    On a TwistedObservable carrying its S-side preimage this returns the
    preimage directly -- that is what T means on the range of tau, and for
    k = 0 it is also the only numerically convergent route.
    """
    if isinstance(u, TwistedObservable):
        if u.s_preimage is not None:
            return _as_grid(u.s_preimage, window, n)
        u = u.base
    if c is None:
        c = default_abscissa(k, q)
    if abs(q) < Q_DEGENERATE:
        return _as_grid(u, window, n)
    _validate_c(k, q, c)
    slices, template = _slices_of(u, window, n)
    vals = _intertwine_rows(slices, template.x2, k, q, c, "T", tol)
    return template.like(vals)


def make_observable(
    k: int,
    q: float,
    f: AnalyticHandle,
    c: float | None = None,
    window=DEFAULT_WINDOW,
    n: int = DEFAULT_N,
) -> TwistedObservable:
    """Build the observable tau(f) from an S-side element, keeping f as the
    stored preimage."""
    base = tau_partial(k, q, f, c=c, window=window, n=n)
    return TwistedObservable(base=base, k=k, q=q, c=c, s_preimage=sample(f, window, n, n))


def star(
    k: int,
    q: float,
    u,
    v,
    weyl_q: float | None = None,
    c: float | None = None,
    window=DEFAULT_WINDOW,
    n: int = DEFAULT_N,
    method: str = "fft",
) -> TwistedObservable:
    """The twisted star product tau( T(u) weyl T(v) ).

    ``q`` drives the intertwiners; ``weyl_q`` (default: equal) drives the Weyl
    product, exposed separately since the conjugation is associative for any
    pair.  Handles and grids are accepted and treated as plain observables;
    at degenerate q the product reduces to the Weyl product.
    """
    if weyl_q is None:
        weyl_q = q
    if c is None:
        c = default_abscissa(k, q)
    ku = u.k if isinstance(u, TwistedObservable) else k
    kv = v.k if isinstance(v, TwistedObservable) else k
    if ku != k or kv != k:
        raise ValueError("operands carry a different k than requested")
    if abs(q) < Q_DEGENERATE:
        gu = _as_grid(u.base if isinstance(u, TwistedObservable) else u, window, n)
        gv = _as_grid(v.base if isinstance(v, TwistedObservable) else v, window, n)
        w = weyl_product(gu, gv, weyl_q, method=method)
        return TwistedObservable(base=w, k=k, q=q, c=c, s_preimage=w)
    tu = T_partial(k, q, u, c=c, window=window, n=n)
    tv = T_partial(k, q, v, c=c, window=window, n=n)
    w = weyl_product(tu, tv, weyl_q, method=method)
    out = tau_partial(k, q, w, c=c, window=window, n=n)
    return TwistedObservable(base=out, k=k, q=q, c=c, s_preimage=w)


# ---------------------------------------------------------------------------
# the commutative bullet product
# ---------------------------------------------------------------------------


def _z_forward_arg(nu: complex, gamma: complex, z):
    """Kernel argument of the transform: L is evaluated at -gamma sinh(nu z)/nu."""
    zz = np.asarray(z, complex)
    if abs(nu) < Q_DEGENERATE:
        return -gamma * zz
    return -gamma * np.sinh(nu * zz) / nu


def _z_inverse_contour(nu: complex, gamma: complex, ts: np.ndarray):
    """Preimages of the inversion contour i t under the kernel map."""
    if abs(nu) < Q_DEGENERATE:
        return -1j * np.asarray(ts, float) / gamma
    return np.arcsinh(-1j * nu * np.asarray(ts, float) / gamma) / nu


def _validate_bullet_params(nu: complex, gamma: complex):
    nu = complex(nu)
    gamma = complex(gamma)
    if abs(nu) >= Q_DEGENERATE and abs(nu.real) > 1e-12 * abs(nu):
        raise ValueError("nu must be purely imaginary")
    if abs(abs(gamma) - 1.0) > 1e-12:
        raise ValueError("gamma must lie on the unit circle")
    return nu, gamma


class ZImage:
    """A test function built as the transform image of a separable source:
    (a, z) -> profile(a) * L(source)(-gamma sinh(nu z)/nu)."""

    def __init__(self, nu, gamma, source: AnalyticHandle, profile=None):
        self.nu, self.gamma = _validate_bullet_params(nu, gamma)
        if source.dims != 1:
            raise ValueError("source must be a 1-variable handle")
        self.source = source
        self.profile = profile or (lambda a: np.ones_like(np.asarray(a, float)))
        self._image = source.fourier_closed_form()

    def _laplace(self, w):
        xi = 1j * np.asarray(w, complex)
        p = np.polynomial.polynomial.polyval(xi, self._image.poly)
        return (
            self._image.scale
            * p
            * np.exp(-self._image.quad[0, 0] * xi * xi + self._image.shift[0] * xi)
        )

    def __call__(self, a, z):
        a = np.asarray(a, float)
        vals = self._laplace(_z_forward_arg(self.nu, self.gamma, z))
        return np.multiply.outer(self.profile(a), vals)


def _bullet_inverse_rows(F, nu, gamma, a_grid, l_grid, t_max=40.0, tol=1e-10):
    """Recover the source rows u(a, l) of a transform image F(a, z)."""
    n = max(1024, int(np.ceil(2 * t_max * (np.abs(l_grid).max() + 4.0) / np.pi)) + 1)
    prev = None
    for _ in range(4):
        ts = np.linspace(-t_max, t_max, n)
        zs = _z_inverse_contour(nu, gamma, ts)
        fv = np.asarray(F(a_grid, zs), complex)  # (na, nt)
        trap = np.full(n, ts[1] - ts[0])
        trap[0] = trap[-1] = 0.5 * (ts[1] - ts[0])
        ker = np.exp(1j * np.multiply.outer(l_grid, ts)) * trap[None, :]
        rows = fv @ ker.T / (2.0 * np.pi)  # (na, nl)
        if prev is not None and np.abs(rows - prev).max() <= tol * (np.abs(rows).max() + 1e-300):
            return rows
        prev = rows
        n = 2 * n - 1
    return prev


def _bullet_forward_rows(rows, nu, gamma, l_grid, z_grid):
    """Transform source rows back to z-space by trapezoid."""
    h = l_grid[1] - l_grid[0]
    trap = np.full(l_grid.size, h)
    trap[0] = trap[-1] = 0.5 * h
    w = _z_forward_arg(nu, gamma, z_grid)
    ker = np.exp(np.multiply.outer(-w, l_grid)) * trap[None, :]
    return rows @ ker.T  # (na, nz)


def bullet(
    nu,
    gamma,
    F,
    G,
    z_grid: np.ndarray,
    a_grid: np.ndarray | None = None,
    l_half: float = 10.0,
    n_l: int = 513,
    t_max: float = 40.0,
) -> np.ndarray:
    """The commutative product: transform both factors back, multiply
    pointwise, transform again.  Returns values over (a_grid, z_grid)."""
    nu, gamma = _validate_bullet_params(nu, gamma)
    a_grid = np.asarray([0.0]) if a_grid is None else np.asarray(a_grid, float)
    l_grid = np.linspace(-l_half, l_half, n_l)
    uf = _bullet_inverse_rows(F, nu, gamma, a_grid, l_grid, t_max)
    ug = _bullet_inverse_rows(G, nu, gamma, a_grid, l_grid, t_max)
    return _bullet_forward_rows(uf * ug, nu, gamma, l_grid, np.asarray(z_grid, complex))


def check_bullet_derivation(
    x: str,
    nu,
    gamma,
    F,
    G,
    z_grid: np.ndarray,
    a_grid: np.ndarray,
    fd_step: float = 1e-3,
    **kw,
) -> float:
    """Relative L2 residual of the derivation identity for the generator
    actions: A acts by -d/da (central differences with a dedicated step),
    E by multiplication with -(exp(-2a)/nu) sinh(nu z)."""
    nu, gamma = _validate_bullet_params(nu, gamma)
    z_grid = np.asarray(z_grid, complex)
    a_grid = np.asarray(a_grid, float)

    def bullet_of(FF, GG, a=a_grid):
        return bullet(nu, gamma, FF, GG, z_grid, a, **kw)

    if x == "E":

        def mult(a, z):
            zz = np.asarray(z, complex)
            m = -np.exp(-2.0 * np.asarray(a, float)) / nu
            return np.multiply.outer(m, np.sinh(nu * zz))

        def mF(a, z):
            return mult(a, z) * F(a, z)

        def mG(a, z):
            return mult(a, z) * G(a, z)

        lhs = mult(a_grid, z_grid) * bullet_of(F, G)
        rhs = bullet_of(mF, G) + bullet_of(F, mG)
    elif x == "A":
        h = fd_step

        def d_a(H):
            def out(a, z):
                a = np.asarray(a, float)
                return -(H(a + h, z) - H(a - h, z)) / (2.0 * h)

            return out

        lhs_rows_p = bullet_of(F, G, a_grid + h)
        lhs_rows_m = bullet_of(F, G, a_grid - h)
        lhs = -(lhs_rows_p - lhs_rows_m) / (2.0 * h)
        rhs = bullet_of(d_a(F), G) + bullet_of(F, d_a(G))
    else:
        raise ValueError("generator must be 'A' or 'E'")
    denom = np.linalg.norm(lhs) + np.linalg.norm(rhs) + 1e-300
    return float(2.0 * np.linalg.norm(lhs - rhs) / denom)


# ---------------------------------------------------------------------------
# hat presentation
# ---------------------------------------------------------------------------


class HatFunction:
    """Evaluator (y1, x2) -> f(i y1, x2) of a 2-variable handle."""

    def __init__(self, base: AnalyticHandle):
        if base.dims != 2:
            raise ValueError("hat needs a 2-variable handle")
        self.base = base

    def __call__(self, y1, x2):
        y1 = np.asarray(y1, float)
        x2 = np.asarray(x2, float)
        return self.base.eval(1j * y1, x2 + 0j)

    def log_abs(self, y1, x2):
        return self.base.log_abs(1j * np.asarray(y1, float), np.asarray(x2, float) + 0j)


def hat(u: AnalyticHandle) -> HatFunction:
    """The partial imaginary-rotation evaluator f(i y1, x2)."""
    return HatFunction(u)


def hat_star(
    k: int,
    q: float,
    a: HatFunction,
    b: HatFunction,
    y1_grid: np.ndarray,
    weyl_q: float | None = None,
    c: float | None = None,
    window=DEFAULT_WINDOW,
    n: int = DEFAULT_N,
) -> np.ndarray:
    """The star product in the hat presentation, on the (y1, x2) grid.

    The intertwiners act in x2 and commute with the rotation of the first
    variable, so T runs on the hat slices directly (slice handles with the
    first variable fixed at i y1); the Weyl stage is the kernel-form product
    continued to the imaginary first axis.  Values over (y1_grid, x2 grid).
    """
    if weyl_q is None:
        weyl_q = q
    if c is None:
        c = default_abscissa(k, q)
    y1_grid = np.asarray(y1_grid, float)
    template = GridFunction2D(window, n, n, np.zeros((n, n), complex))
    x2 = template.x2

    # real-axis T images feed the Weyl kernel stage
    ta = T_partial(k, q, a.base, c=c, window=window, n=n)
    tb = T_partial(k, q, b.base, c=c, window=window, n=n)
    w_hat = weyl_product_direct(ta, tb, weyl_q, out_x1=1j * y1_grid)  # (ny1, nx2)

    if abs(q) < Q_DEGENERATE:
        return w_hat
    slices = _GridSlices(w_hat, x2, template.h2)
    return _intertwine_rows(slices, x2, k, q, c, "tau")
