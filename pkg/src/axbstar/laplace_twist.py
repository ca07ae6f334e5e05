"""Bilateral Laplace transform, vertical-contour inversion, and twisting maps.

Conventions (ledgered):

* ``laplace``:  L(f)(z) = \\int exp(-z l) f(l) dl, entire in z for the
  Gaussian-decay family.
* ``inverse_laplace``:  L^{-1}(F)(x) = (1/(2 pi)) \\int_R exp((c + i t) x)
  F(c + i t) dt.  The vertical-line integral is parametrized by dt and the
  1/(2 pi) makes the roundtrip the identity; the result is independent of the
  abscissa c wherever the integrand decays.
* ``phi``:  phi_{q,theta}(z) = (e^{i theta}/q) sinh(i q z), identity at q = 0.
  theta is restricted to multiples of pi/2 so that preimages of vertical lines
  stay contour-friendly.
* ``phi_inv``:  -(i/q) arcsinh(q e^{-i theta} w) with the principal arcsinh
  branch, whose standard cuts are exactly the slits +-i [1/q, inf) (rotated by
  theta); it maps onto the strip |Re z| < pi/(2q).
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from axbstar.carriers import AnalyticHandle, ContourSamples
from axbstar.errors import (
    ContourDivergence,
    OnBranchCut,
    QuadratureFailure,
    TailDivergence,
)

__all__ = [
    "laplace",
    "LaplaceImage",
    "inverse_laplace",
    "check_O_gamma",
    "TwistParams",
    "phi",
    "phi_inv",
    "jacobian",
    "estimate_IK",
]


# ---------------------------------------------------------------------------
# Laplace transform
# ---------------------------------------------------------------------------


def _gauss_params(f: AnalyticHandle):
    if f.dims != 1:
        raise ValueError("laplace needs a 1-variable handle")
    q = complex(f.quad[0, 0])
    s = complex(f.shift[0])
    if q.real <= 0:
        raise ValueError("need Gaussian decay, Re(quad) > 0")
    return q, s


def laplace(f: AnalyticHandle, z, tol: float = 1e-10):
    """L(f)(z) by trapezoid quadrature, refined until two grids agree to tol.

    The node window is centered on the integrand's magnitude peak and sized
    from the Gaussian decay; the step resolves the largest oscillation
    frequency over the requested z values.
    """
    q, s = _gauss_params(f)
    zs = np.atleast_1d(np.asarray(z, complex))
    w = s - zs  # integrand = poly * exp(-q l^2 + w l)
    qr = q.real
    centers = w.real / (2.0 * qr)
    lo = centers.min()
    hi = centers.max()
    halfwidth = np.sqrt((50.0 + np.log1p(float(np.abs(f.poly).sum()))) / qr)
    a = lo - halfwidth
    b = hi + halfwidth
    freq = np.abs(w.imag).max() + abs(q.imag) * max(abs(a), abs(b)) + 1.0
    n = int(np.ceil((b - a) * freq / np.pi)) * 2 + 32
    prev = None
    for _ in range(14):
        ls = np.linspace(a, b, n)
        vals = f.eval(ls)  # (n,)
        ker = np.exp(np.multiply.outer(-zs, ls))  # (nz, n)
        est = np.trapezoid(ker * vals[None, :], ls, axis=1)
        if prev is not None:
            err = np.abs(est - prev).max()
            if err <= tol * (1.0 + np.abs(est).max()):
                return est[0] if np.isscalar(z) or np.asarray(z).ndim == 0 else est
        prev = est
        n = 2 * n - 1
    raise QuadratureFailure("laplace quadrature did not converge")


class LaplaceImage:
    """The Laplace image of a Gaussian-family handle.

    Calling the object evaluates by quadrature (the operation's contract);
    the closed form, obtained from the Fourier image at rotated argument, is
    kept separately as an independent oracle for tests.
    """

    def __init__(self, source: AnalyticHandle, tol: float = 1e-10):
        self.source = source
        self.tol = tol
        _gauss_params(source)  # validate
        fh = source.fourier_closed_form()
        self._poly = fh.poly.copy()
        self._q = complex(fh.quad[0, 0])
        self._s = complex(fh.shift[0])
        self._scale = complex(fh.scale)
        self.contour: ContourSamples | None = None

    def __call__(self, z):
        return laplace(self.source, z, self.tol)

    def closed_form(self, z):
        """Exact image: the Fourier closed form evaluated at xi = i z."""
        zz = np.asarray(z, complex)
        xi = 1j * zz
        p = np.polynomial.polynomial.polyval(xi, self._poly)
        return self._scale * p * np.exp(-self._q * xi * xi + self._s * xi)

    def cache_contour(self, c: float, T: float, n: int = 1024) -> ContourSamples:
        ts = np.linspace(-T, T, n)
        self.contour = ContourSamples(c, ts, self.closed_form(c + 1j * ts))
        return self.contour


def inverse_laplace(F, c: float, x, tol: float = 1e-10, t_max_cap: float = 1e6):
    """Contour inversion (1/(2 pi)) \\int exp((c+it)x) F(c+it) dt.

    ``F`` is any callable on complex arrays.  The half-length T grows until the
    integrand magnitude falls below tolerance (ContourDivergence if it will
    not), then the step refines until two successive grids agree.
    """
    xs = np.atleast_1d(np.asarray(x, float))
    T = 8.0
    while True:
        edge = max(abs(complex(np.asarray(F(c + 1j * T)).ravel()[0]))
                   , abs(complex(np.asarray(F(c - 1j * T)).ravel()[0])))
        if edge < tol * 1e-2:
            break
        T *= 2.0
        if T > t_max_cap:
            raise ContourDivergence(f"no contour decay out to T = {t_max_cap}")
    n = max(256, int(np.ceil(2 * T * (np.abs(xs).max() + 1.0) / np.pi)) | 1)
    prev = None
    for _ in range(12):
        ts = np.linspace(-T, T, n)
        fv = np.asarray(F(c + 1j * ts), complex)
        ker = np.exp(np.multiply.outer(xs, c + 1j * ts))
        est = np.trapezoid(ker * fv[None, :], ts, axis=1) / (2.0 * np.pi)
        if prev is not None:
            err = np.abs(est - prev).max()
            if err <= tol * (1.0 + np.abs(est).max()):
                return est[0] if np.asarray(x).ndim == 0 else est
        prev = est
        n = 2 * n - 1
    raise QuadratureFailure("contour quadrature did not converge")


def check_O_gamma(F, K: tuple[float, float], poly_degree_cap: int = 8) -> dict:
    """Fit a polynomial-in-eta envelope for |F| on the strip K + i R.

    Samples on K x [-T, T] for doubling T and reports the smallest degree d
    with sup |F| / (1 + |eta|)^d stable under the last doubling, together
    with the envelope constant.  Failure (no degree within the cap) is an
    outcome, not an exception.
    """
    xis = np.linspace(K[0], K[1], 17)
    levels = []
    Ts = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0]
    for T in Ts:
        eta = np.linspace(-T, T, 513)
        zz = xis[:, None] + 1j * eta[None, :]
        mag = np.abs(np.asarray(F(zz.ravel()), complex)).reshape(zz.shape)
        levels.append((eta, mag))
    for d in range(poly_degree_cap + 1):
        sups = []
        for eta, mag in levels:
            env = (1.0 + np.abs(eta)) ** d
            sups.append(float((mag / env[None, :]).max()))
        if sups[-1] <= sups[-2] * 1.05 + 1e-300:
            return {
                "bounded": True,
                "degree": d,
                "constant": max(sups),
                "sup_by_T": dict(zip(Ts, sups)),
            }
    return {"bounded": False, "degree": None, "constant": None,
            "sup_by_T": None}


# ---------------------------------------------------------------------------
# Twisting maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwistParams:
    """Parameters of the twisting map; theta restricted to {0, pi/2}."""

    q: float
    theta: float = 0.0

    def __post_init__(self):
        if not (
            np.isclose(self.theta, 0.0) or np.isclose(self.theta, np.pi / 2.0)
        ):
            raise ValueError("theta must be 0 or pi/2")

    @property
    def k(self) -> int:
        return 0 if np.isclose(self.theta, 0.0) else 1

    @property
    def strip_halfwidth(self) -> float:
        """Half-width pi/(2|q|) of the strip the map is injective on."""
        if self.q == 0:
            return np.inf
        return np.pi / (2.0 * abs(self.q))


def phi(p: TwistParams, z):
    """The twisting map (e^{i theta}/q) sinh(i q z); identity for q = 0."""
    zz = np.asarray(z, complex)
    if p.q == 0:
        return zz + 0j
    out = (cmath.exp(1j * p.theta) / p.q) * np.sinh(1j * p.q * zz)
    return out


def _slit_distance(p: TwistParams, w):
    """Distance from w to the branch slits of phi_inv (the rotated +-i[1/q, inf))."""
    ww = np.asarray(w, complex) * cmath.exp(-1j * p.theta)
    x = np.abs(ww.real)
    y = np.abs(ww.imag)
    gap = np.maximum(0.0, 1.0 / abs(p.q) - y)
    return np.hypot(x, gap)


def phi_inv(p: TwistParams, w):
    """Inverse twisting map -(i/q) arcsinh(q e^{-i theta} w).

    Principal arcsinh; raises OnBranchCut within 1e-12 of the slits.  Values
    land in the open strip |Re z| < pi/(2 q).
    """
    ww = np.asarray(w, complex)
    if p.q == 0:
        return ww + 0j
    if np.any(_slit_distance(p, ww) < 1e-12):
        raise OnBranchCut("argument within 1e-12 of the slit set")
    return -(1j / p.q) * np.arcsinh(p.q * cmath.exp(-1j * p.theta) * ww)


def jacobian(p: TwistParams, w):
    """Jacobian determinant of the twisting map: cos^2(q x) + sinh^2(q y).

    Equals |d/dz phi(z)|^2 = |cosh(i q w)|^2; independent of theta.
    """
    ww = np.asarray(w, complex)
    if p.q == 0:
        return np.ones_like(ww.real)
    return np.cos(p.q * ww.real) ** 2 + np.sinh(p.q * ww.imag) ** 2


def estimate_IK(
    F,
    K: tuple[float, float],
    p: TwistParams | None = None,
    tol: float = 1e-8,
    eta_split: float = 8.0,
    n_xi: int = 33,
) -> dict:
    """Numeric estimate of \\int_{K+iR} |F(phi^{-1}(z))| |dz ^ dz~|.

    K must be a compact interval of positive numbers.  The eta integral is
    split at ``eta_split``; the far range uses the substitution eta = e^u,
    under which the pullback of a Laplace-image integrand is Gaussian-like in
    u, and U grows until the last slab contributes below tol.  Returns the
    estimate, the tail bound at the final truncation, and the effective
    truncation height.  Raises TailDivergence if slabs stop shrinking.
    """
    if K[0] <= 0 or K[1] <= K[0]:
        raise ValueError("K must be a positive interval [k0, k1], k0 > 0")
    p = p or TwistParams(1.0, 0.0)

    def run(n_xi_l: int, n_core: int, du: float):
        xis = np.linspace(K[0], K[1], n_xi_l)

        def integrand(eta_arr):
            total = np.zeros_like(eta_arr)
            for sgn in (1.0, -1.0):
                zz = xis[:, None] + 1j * sgn * eta_arr[None, :]
                vals = np.abs(
                    np.asarray(F(phi_inv(p, zz.ravel())), complex)
                ).reshape(zz.shape)
                total += np.trapezoid(vals, xis, axis=0)
            return total

        eta0 = np.linspace(0.0, eta_split, n_core)
        core = float(np.trapezoid(integrand(eta0), eta0))
        total_far = 0.0
        last = np.inf
        u = np.log(eta_split)
        tail = np.inf
        for _ in range(200):
            us = np.linspace(u, u + 0.5, int(0.5 / du) + 1)
            slab = float(np.trapezoid(integrand(np.exp(us)) * np.exp(us), us))
            total_far += slab
            if slab > last and slab > tol:
                raise TailDivergence("far-field slabs are growing")
            last = slab
            u += 0.5
            if slab < tol / 4.0:
                tail = slab
                break
        else:
            raise TailDivergence("tail did not drop below tolerance")
        return 2.0 * (core + total_far), tail, float(np.exp(u))

    n_core, du = 513, 1.0 / 64.0
    value, tail, eta_max = run(n_xi, n_core, du)
    delta = np.inf
    for _ in range(6):
        n_core = 2 * n_core - 1
        du /= 2.0
        refined, tail, eta_max = run(2 * n_xi - 1, n_core, du)
        delta = abs(refined - value)
        value = refined
        if delta <= max(tol, 1e-10 * abs(value)):
            break
    return {
        "value": value,
        "tail": tail,
        "eta_max": eta_max,
        "resolution_delta": delta,
    }
