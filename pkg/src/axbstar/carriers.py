"""Function carriers shared by the numeric modules.

Three representations:

* ``AnalyticHandle`` -- an entire function ``scale * poly(z) * exp(-z^T Q z + s.z)``
  in one or two complex variables with Re(Q) positive definite.  The family is
  closed under multiplication, partial differentiation, Fourier transform and
  (in one variable) bilateral Laplace transform, all in closed form, which is
  what makes it usable as an independent oracle for the quadrature/FFT paths.
* ``GridFunction2D`` -- complex samples on a uniform grid over a rectangular
  window symmetric about the origin; the carrier for FFT-based transforms.
* ``ContourSamples`` -- complex samples along a vertical line c + i t.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from axbstar.errors import ShapeMismatch, WindowTooSmall

__all__ = [
    "AnalyticHandle",
    "GridFunction2D",
    "ContourSamples",
    "sample",
    "eval_complex",
    "l2_distance",
]

EDGE_TOL = 1e-12


def _poly_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of dense coefficient arrays (1D or 2D)."""
    if a.ndim == 1:
        return np.convolve(a, b)
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1), complex)
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            if a[i, j] != 0:
                out[i : i + b.shape[0], j : j + b.shape[1]] += a[i, j] * b
    return out


def _poly_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim == 1:
        out = np.zeros(max(a.size, b.size), complex)
        out[: a.size] += a
        out[: b.size] += b
        return out
    out = np.zeros((max(a.shape[0], b.shape[0]), max(a.shape[1], b.shape[1])), complex)
    out[: a.shape[0], : a.shape[1]] += a
    out[: b.shape[0], : b.shape[1]] += b
    return out


def _poly_trim(c: np.ndarray) -> np.ndarray:
    """Drop trailing all-zero rows/columns (keep at least the constant term)."""
    c = np.atleast_1d(np.asarray(c, complex))
    if c.ndim == 1:
        nz = np.nonzero(c)[0]
        return c[: nz[-1] + 1] if nz.size else c[:1]
    rows = np.nonzero(c.any(axis=1))[0]
    cols = np.nonzero(c.any(axis=0))[0]
    if rows.size == 0:
        return c[:1, :1]
    return c[: rows[-1] + 1, : cols[-1] + 1]


def _poly_eval(c: np.ndarray, zs: tuple[np.ndarray, ...]) -> np.ndarray:
    if c.ndim == 1:
        return np.polynomial.polynomial.polyval(zs[0], c)
    return np.polynomial.polynomial.polyval2d(zs[0], zs[1], c)


@dataclass(frozen=True)
class AnalyticHandle:
    """scale * poly(z) * exp(-z^T Q z + s.z) in ``dims`` complex variables."""

    dims: int
    poly: np.ndarray
    quad: np.ndarray
    shift: np.ndarray
    scale: complex = 1.0 + 0j

    def __post_init__(self):
        poly = _poly_trim(np.asarray(self.poly, complex))
        quad = np.atleast_2d(np.asarray(self.quad, complex))
        shift = np.atleast_1d(np.asarray(self.shift, complex))
        if self.dims not in (1, 2):
            raise ValueError("dims must be 1 or 2")
        if quad.shape != (self.dims, self.dims):
            raise ValueError("quad must be (dims, dims)")
        if not np.allclose(quad, quad.T):
            raise ValueError("quad must be symmetric")
        if shift.shape != (self.dims,):
            raise ValueError("shift must have length dims")
        w = np.linalg.eigvalsh(quad.real)
        if w.min() <= 0:
            raise ValueError("Re(quad) must be positive definite")
        if poly.ndim != self.dims:
            raise ValueError("poly rank must equal dims")
        object.__setattr__(self, "poly", poly)
        object.__setattr__(self, "quad", quad)
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "scale", complex(self.scale))

    # -- constructors --------------------------------------------------

    @staticmethod
    def gaussian(width, center=None, dims: int | None = None, scale=1.0) -> "AnalyticHandle":
        """exp(-sum_j width_j (z_j - center_j)^2), widths > 0 allowed complex."""
        w = np.atleast_1d(np.asarray(width, complex))
        d = dims or w.size
        if w.size == 1 and d == 2:
            w = np.array([w[0], w[0]])
        c = np.zeros(d) if center is None else np.atleast_1d(np.asarray(center, complex))
        quad = np.diag(w)
        shift = 2.0 * w * c
        amp = complex(scale) * np.exp(-np.sum(w * c * c))
        poly = np.zeros((1,) * d, complex)
        poly[(0,) * d] = 1.0
        return AnalyticHandle(d, poly, quad, shift, amp)

    def with_poly(self, poly) -> "AnalyticHandle":
        return AnalyticHandle(self.dims, poly, self.quad, self.shift, self.scale)

    # -- evaluation ------------------------------------------------------

    def eval(self, *zs) -> np.ndarray:
        """Evaluate at complex points; accepts one array per variable."""
        if len(zs) != self.dims:
            raise ValueError(f"expected {self.dims} coordinate arrays")
        zs = tuple(np.asarray(z, complex) for z in zs)
        expo = np.zeros(np.broadcast_shapes(*(z.shape for z in zs)), complex)
        for i in range(self.dims):
            expo += self.shift[i] * zs[i]
            for j in range(self.dims):
                expo -= self.quad[i, j] * zs[i] * zs[j]
        return self.scale * _poly_eval(self.poly, zs) * np.exp(expo)

    def log_abs(self, *zs) -> np.ndarray:
        """log |f(z)| with the exponent contribution computed from real parts,
        avoiding overflow for large quadratic growth."""
        zs = tuple(np.asarray(z, complex) for z in zs)
        expo = np.zeros(np.broadcast_shapes(*(z.shape for z in zs)), complex)
        for i in range(self.dims):
            expo += self.shift[i] * zs[i]
            for j in range(self.dims):
                expo -= self.quad[i, j] * zs[i] * zs[j]
        p = _poly_eval(self.poly, zs)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(p)) + np.log(abs(self.scale)) + expo.real

    # -- algebra -----------------------------------------------------------

    def __mul__(self, other):
        if isinstance(other, AnalyticHandle):
            if other.dims != self.dims:
                raise ValueError("dimension mismatch")
            return AnalyticHandle(
                self.dims,
                _poly_mul(self.poly, other.poly),
                self.quad + other.quad,
                self.shift + other.shift,
                self.scale * other.scale,
            )
        return AnalyticHandle(self.dims, self.poly, self.quad, self.shift, self.scale * other)

    __rmul__ = __mul__

    def partial(self, axis: int = 0) -> "AnalyticHandle":
        """Partial derivative; stays in the family."""
        c = self.poly
        if self.dims == 1:
            dp = np.polynomial.polynomial.polyder(c) if c.size > 1 else np.zeros(1, complex)
            lin = np.zeros(2, complex)
            lin[0] = self.shift[0]
            lin[1] = -2.0 * self.quad[0, 0]
            newp = np.zeros(max(dp.size, c.size + 1), complex)
            newp[: dp.size] += dp
            newp[: c.size + 1] += np.convolve(c, lin)[: c.size + 1]
            return self.with_poly(newp)
        dp = np.zeros_like(c)
        if c.shape[axis] > 1:
            sl = [slice(None)] * 2
            sl[axis] = slice(1, None)
            ks = np.arange(1, c.shape[axis])
            shape = [1, 1]
            shape[axis] = ks.size
            dpart = c[tuple(sl)] * ks.reshape(shape)
            sl2 = [slice(None)] * 2
            sl2[axis] = slice(0, c.shape[axis] - 1)
            dp[tuple(sl2)] = dpart
        lin = np.zeros((2, 2), complex)
        lin[0, 0] = self.shift[axis]
        lin[1, 0] = -2.0 * self.quad[axis, 0]
        lin[0, 1] = -2.0 * self.quad[axis, 1]
        return self.with_poly(_poly_mul(c, lin) + np.pad(dp, ((0, 1), (0, 1))))

    # -- closed-form transforms (the oracle side) ---------------------------

    def fourier_closed_form(self) -> "AnalyticHandle":
        """Exact Fourier image with kernel exp(+i xi . x); stays in the family.

        Writes poly(x) exp(s.x) = poly(d/ds) exp(s.x) and differentiates the
        Gaussian integral under the parameter.
        """
        d = self.dims
        qinv = np.linalg.inv(self.quad)
        det = np.linalg.det(self.quad)
        c0 = self.scale * np.pi ** (d / 2.0) / np.sqrt(det)

        # polynomial in w = s + i xi produced by applying poly(d/ds)
        def d_op(r: np.ndarray, axis: int) -> np.ndarray:
            # r -> dr/dw_axis + (1/2)(Qinv w)_axis * r
            if d == 1:
                dr = np.polynomial.polynomial.polyder(r) if r.size > 1 else np.zeros(1, complex)
                lin = np.array([0.0, 0.5 * qinv[0, 0]], complex)
                out = np.zeros(r.size + 1, complex)
                out[: dr.size] += dr
                out += np.convolve(r, lin)[: r.size + 1]
                return out
            lin = np.zeros((2, 2), complex)
            lin[1, 0] = 0.5 * qinv[axis, 0]
            lin[0, 1] = 0.5 * qinv[axis, 1]
            prod = _poly_mul(r, lin)
            dr = np.zeros_like(prod)
            if r.shape[axis] > 1:
                ks = np.arange(1, r.shape[axis])
                shape = [1, 1]
                shape[axis] = ks.size
                sl = [slice(None)] * 2
                sl[axis] = slice(1, None)
                val = r[tuple(sl)] * ks.reshape(shape)
                sl2 = [slice(None), slice(None)]
                sl2[axis] = slice(0, r.shape[axis] - 1)
                tgt = np.zeros_like(prod)
                tgt[tuple(sl2)][: val.shape[0], : val.shape[1]] += val
                dr = tgt
            return prod + dr

        if d == 1:
            acc = np.zeros(1, complex)
            for g, coeff in enumerate(self.poly):
                if coeff != 0:
                    r = np.ones(1, complex)
                    for _ in range(g):
                        r = d_op(r, 0)
                    acc = _poly_add(acc, coeff * r)
            poly_w = _poly_trim(acc)
            # substitute w = s + i xi -> polynomial in xi
            s0 = self.shift[0]
            deg = poly_w.size - 1
            out = np.zeros(deg + 1, complex)
            from math import comb
            for k, ck in enumerate(poly_w):
                for j in range(k + 1):
                    out[j] += ck * comb(k, j) * s0 ** (k - j) * (1j) ** j
            quad_f = qinv / 4.0
            shift_f = 1j * (qinv @ self.shift) / 2.0
            scale_f = c0 * np.exp(0.25 * self.shift @ qinv @ self.shift)
            return AnalyticHandle(1, _poly_trim(out), quad_f, shift_f, scale_f)

        # d == 2
        acc = np.zeros((1, 1), complex)
        for g1 in range(self.poly.shape[0]):
            for g2 in range(self.poly.shape[1]):
                coeff = self.poly[g1, g2]
                if coeff == 0:
                    continue
                r = np.ones((1, 1), complex)
                for _ in range(g1):
                    r = d_op(r, 0)
                for _ in range(g2):
                    r = d_op(r, 1)
                acc = _poly_add(acc, coeff * r)
        poly_w = _poly_trim(acc)
        from math import comb
        # substitute w_i = s_i + i xi_i, one axis at a time
        s = self.shift
        a1, a2 = poly_w.shape
        mid = np.zeros_like(poly_w)
        for k in range(a1):
            for j in range(k + 1):
                mid[j] += poly_w[k] * comb(k, j) * s[0] ** (k - j) * (1j) ** j
        out2 = np.zeros_like(mid)
        for k in range(a2):
            for j in range(k + 1):
                out2[:, j] += mid[:, k] * comb(k, j) * s[1] ** (k - j) * (1j) ** j
        quad_f = qinv / 4.0
        shift_f = 1j * (qinv @ self.shift) / 2.0
        scale_f = c0 * np.exp(0.25 * self.shift @ qinv @ self.shift)
        return AnalyticHandle(2, _poly_trim(out2), quad_f, shift_f, scale_f)

    def pullback_J(self) -> "AnalyticHandle":
        """g(y) = f(J y) with J(y1, y2) = (y2, -y1); two variables only."""
        if self.dims != 2:
            raise ValueError("pullback_J needs a 2-variable handle")
        jmat = np.array([[0.0, 1.0], [-1.0, 0.0]])
        quad_new = jmat.T @ self.quad @ jmat
        shift_new = jmat.T @ self.shift
        d1, d2 = self.poly.shape
        poly_new = np.zeros((d2, d1), complex)
        for i in range(d1):
            for j in range(d2):
                # z1^i z2^j at (y2, -y1) = y2^i (-y1)^j -> (-1)^j y1^j y2^i
                poly_new[j, i] += self.poly[i, j] * (-1.0) ** j
        return AnalyticHandle(2, poly_new, quad_new, shift_new, self.scale)

    # -- serialization -------------------------------------------------------

    def to_obj(self) -> dict:
        def cplx(x):
            x = complex(x)
            return [x.real, x.imag]

        return {
            "dims": self.dims,
            "poly": np.stack([self.poly.real, self.poly.imag], axis=-1).tolist(),
            "quad": np.stack([self.quad.real, self.quad.imag], axis=-1).tolist(),
            "shift": np.stack([self.shift.real, self.shift.imag], axis=-1).tolist(),
            "scale": cplx(self.scale),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "AnalyticHandle":
        def decode(lst):
            arr = np.asarray(lst, float)
            return arr[..., 0] + 1j * arr[..., 1]

        return cls(
            obj["dims"],
            decode(obj["poly"]),
            decode(obj["quad"]),
            decode(obj["shift"]),
            complex(obj["scale"][0], obj["scale"][1]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_obj())

    @classmethod
    def loads(cls, s: str) -> "AnalyticHandle":
        return cls.from_obj(json.loads(s))


def eval_complex(f: AnalyticHandle, z) -> np.ndarray:
    """Closed-form evaluation at complex argument(s).

    ``z`` is a scalar/array for one variable or a pair of arrays for two.
    """
    if f.dims == 1:
        return f.eval(np.asarray(z, complex))
    z1, z2 = z
    return f.eval(np.asarray(z1, complex), np.asarray(z2, complex))


@dataclass
class GridFunction2D:
    """Complex samples on a uniform grid over a window symmetric about 0.

    Grid convention per axis: x_j = xmin + j*h, j = 0..n-1, h = (xmax-xmin)/n,
    so the right endpoint is excluded and x_{n/2} = 0.
    """

    window: tuple[float, float, float, float]
    n1: int
    n2: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n1 < 8 or self.n2 < 8 or (self.n1 & (self.n1 - 1)) or (self.n2 & (self.n2 - 1)):
            raise ValueError("sample counts must be powers of two, at least 8")
        x1min, x1max, x2min, x2max = self.window
        if not (np.isclose(-x1min, x1max) and np.isclose(-x2min, x2max)):
            raise ValueError("window must be symmetric about the origin")
        vals = np.asarray(self.values, complex)
        if vals.shape != (self.n1, self.n2):
            raise ShapeMismatch(f"values shape {vals.shape} != ({self.n1}, {self.n2})")
        if not (np.all(np.isfinite(vals.real)) and np.all(np.isfinite(vals.imag))):
            raise ValueError("grid values must be finite")
        self.values = vals

    @property
    def h1(self) -> float:
        return (self.window[1] - self.window[0]) / self.n1

    @property
    def h2(self) -> float:
        return (self.window[3] - self.window[2]) / self.n2

    @property
    def x1(self) -> np.ndarray:
        return self.window[0] + self.h1 * np.arange(self.n1)

    @property
    def x2(self) -> np.ndarray:
        return self.window[2] + self.h2 * np.arange(self.n2)

    def like(self, values: np.ndarray) -> "GridFunction2D":
        return GridFunction2D(self.window, self.n1, self.n2, values)

    def edge_ratio(self) -> float:
        """Largest boundary magnitude relative to the peak magnitude."""
        mags = np.abs(self.values)
        peak = mags.max()
        if peak == 0:
            return 0.0
        edge = max(mags[0, :].max(), mags[-1, :].max(), mags[:, 0].max(), mags[:, -1].max())
        return float(edge / peak)

    # -- metrics ---------------------------------------------------------

    def _trap_weights(self) -> np.ndarray:
        w1 = np.ones(self.n1)
        w1[0] = w1[-1] = 0.5
        w2 = np.ones(self.n2)
        w2[0] = w2[-1] = 0.5
        return w1[:, None] * w2[None, :]

    def l2_norm(self) -> float:
        w = self._trap_weights()
        return float(np.sqrt(self.h1 * self.h2 * np.sum(w * np.abs(self.values) ** 2)))

    # -- serialization -----------------------------------------------------

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(struct.pack("<4d", *self.window))
        buf.write(struct.pack("<2I", self.n1, self.n2))
        inter = np.empty((self.n1, self.n2, 2), "<f8")
        inter[..., 0] = self.values.real
        inter[..., 1] = self.values.imag
        buf.write(inter.tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "GridFunction2D":
        window = struct.unpack_from("<4d", data, 0)
        n1, n2 = struct.unpack_from("<2I", data, 32)
        arr = np.frombuffer(data, "<f8", count=2 * n1 * n2, offset=40).reshape(n1, n2, 2)
        return cls(window, n1, n2, arr[..., 0] + 1j * arr[..., 1])

    def to_csv(self) -> str:
        out = ["x1,x2,re,im"]
        x1, x2 = self.x1, self.x2
        for i in range(self.n1):
            for j in range(self.n2):
                v = self.values[i, j]
                out.append(f"{x1[i]:.17g},{x2[j]:.17g},{v.real:.17g},{v.imag:.17g}")
        return "\n".join(out) + "\n"


@dataclass
class ContourSamples:
    """Samples of a function along the vertical line c + i t, t in [-T, T]."""

    c: float
    ts: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.ts, float)
        vals = np.asarray(self.values, complex)
        if ts.size < 16:
            raise ValueError("need at least 16 contour samples")
        if ts[-1] <= 0:
            raise ValueError("contour half-length must be positive")
        if ts.shape != vals.shape:
            raise ShapeMismatch("t grid and values differ in shape")
        if not (np.all(np.isfinite(vals.real)) and np.all(np.isfinite(vals.imag))):
            raise ValueError("contour values must be finite")
        self.ts, self.values = ts, vals

    def to_csv(self) -> str:
        out = ["t,re,im"]
        for t, v in zip(self.ts, self.values):
            out.append(f"{t:.17g},{v.real:.17g},{v.imag:.17g}")
        return "\n".join(out) + "\n"


def sample(f: AnalyticHandle, window, n1: int, n2: int) -> GridFunction2D:
    """Pointwise evaluation on the grid; rejects windows the function does not
    decay inside (largest edge magnitude above EDGE_TOL relative to the peak)."""
    if f.dims != 2:
        raise ValueError("sample needs a 2-variable handle")
    g = GridFunction2D(tuple(window), n1, n2, np.zeros((n1, n2), complex))
    xx1, xx2 = np.meshgrid(g.x1, g.x2, indexing="ij")
    vals = f.eval(xx1, xx2)
    out = g.like(vals)
    r = out.edge_ratio()
    if r > EDGE_TOL:
        raise WindowTooSmall(f"edge/interior magnitude ratio {r:.3e} exceeds {EDGE_TOL}")
    return out


def l2_distance(u: GridFunction2D, v: GridFunction2D) -> float:
    """Trapezoid-weighted discrete L2 norm of u - v."""
    if u.window != v.window or u.n1 != v.n1 or u.n2 != v.n2:
        raise ShapeMismatch("grids differ in window or sampling")
    return u.like(u.values - v.values).l2_norm()
