"""Exact rational calculus on the affine-group phase plane.

Everything in this module lives in the algebra spanned by monomials
``nu^p * l^m * exp(-2*n*a)`` with nonnegative integer exponents and rational
coefficients.  The l-derivative is nilpotent on polynomials and the
a-derivative acts diagonally on ``exp(-2*n*a)``, so the bidifferential series
defining the star product terminates and every identity below is checked with
exact arithmetic.  No floats, no tolerances.

Conventions (see also the convention ledger emitted by the CLI):

* ``moyal_product`` is ``u exp(nu (<d_a d_l> - <d_l d_a>)) v`` with the full
  exponent, i.e. first order ``u*v + nu*{u, v}``.  On single exponentials it
  sums in closed form to ``f1(l + 2*n2*nu) * f2(l - 2*n1*nu) * exp(-2*(n1+n2)*a)``.
* ``rho`` is the rescaled star-commutator ``rho(X) = (1/(4 nu)) [lambda_X, .]``,
  which evaluates to ``rho(A) = -d_a`` and
  ``rho(E) = -(exp(-2a)/(2 nu)) sinh(2 nu d_l)``.  Being a multiple of an inner
  derivation it is exactly a derivation of the product, and the bracket scale
  makes it a Lie-algebra homomorphism; both facts are verified exactly by the
  check functions below.
"""

from __future__ import annotations

import json
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import comb

Key = tuple[int, int, int]  # (nu power p, l degree m, exp(-2a) degree n)

RationalLike = int | Fraction

__all__ = [
    "LieGen",
    "SymElem",
    "lambda_map",
    "moyal_product",
    "poisson_bracket",
    "commutator",
    "rho",
    "check_homomorphism",
    "check_derivation",
]


class LieGen(Enum):
    """Generators of the affine Lie algebra; bracket table [A, E] = 2E."""

    A = "A"
    E = "E"


#: structure constant in [A, E] = BRACKET_AE * E
BRACKET_AE = 2


class SymElem:
    """Finite rational combination of ``nu^p l^m exp(-2 n a)`` monomials.

    Immutable by convention: all operations return fresh elements.  Terms with
    zero coefficient are never stored, which makes equality structural.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict[Key, RationalLike] | None = None):
        data: dict[Key, Fraction] = {}
        if terms:
            for key, coeff in terms.items():
                p, m, n = key
                if p < 0 or m < 0 or n < 0:
                    raise ValueError(f"negative exponent in term key {key}")
                c = coeff if isinstance(coeff, Fraction) else Fraction(coeff)
                if c:
                    acc = data.get(key)
                    c = c if acc is None else acc + c
                    if c:
                        data[key] = c
                    else:
                        data.pop(key, None)
        self.terms = data

    @classmethod
    def _raw(cls, data: dict[Key, Fraction]) -> "SymElem":
        out = object.__new__(cls)
        out.terms = data
        return out

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls) -> "SymElem":
        return cls._raw({})

    @classmethod
    def one(cls) -> "SymElem":
        return cls({(0, 0, 0): 1})

    @classmethod
    def nu(cls) -> "SymElem":
        return cls({(1, 0, 0): 1})

    @classmethod
    def l_sym(cls) -> "SymElem":
        return cls({(0, 1, 0): 1})

    @classmethod
    def e2a(cls) -> "SymElem":
        """The monomial exp(-2a)."""
        return cls({(0, 0, 1): 1})

    @classmethod
    def monomial(cls, coeff: RationalLike, p: int = 0, m: int = 0, n: int = 0) -> "SymElem":
        return cls({(p, m, n): coeff})

    # -- ring structure ----------------------------------------------------

    def __add__(self, other: "SymElem") -> "SymElem":
        data = dict(self.terms)
        for key, c in other.terms.items():
            acc = data.get(key)
            s = c if acc is None else acc + c
            if s:
                data[key] = s
            else:
                data.pop(key, None)
        return SymElem._raw(data)

    def __neg__(self) -> "SymElem":
        return SymElem._raw({k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "SymElem") -> "SymElem":
        return self + (-other)

    def __mul__(self, other):
        """Pointwise (commutative) product, or scalar multiple."""
        if isinstance(other, SymElem):
            data: dict[Key, Fraction] = {}
            for (p1, m1, n1), c1 in self.terms.items():
                for (p2, m2, n2), c2 in other.terms.items():
                    key = (p1 + p2, m1 + m2, n1 + n2)
                    acc = data.get(key)
                    s = c1 * c2 if acc is None else acc + c1 * c2
                    if s:
                        data[key] = s
                    else:
                        data.pop(key, None)
            return SymElem._raw(data)
        if isinstance(other, (int, Fraction)):
            c0 = Fraction(other)
            if not c0:
                return SymElem.zero()
            return SymElem._raw({k: c * c0 for k, c in self.terms.items()})
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, SymElem) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # -- calculus ----------------------------------------------------------

    def d_l(self) -> "SymElem":
        data = {}
        for (p, m, n), c in self.terms.items():
            if m:
                data[(p, m - 1, n)] = c * m
        return SymElem._raw(data)

    def d_a(self) -> "SymElem":
        """d/da acts diagonally: exp(-2 n a) -> -2n exp(-2 n a)."""
        return SymElem._raw(
            {(p, m, n): c * (-2 * n) for (p, m, n), c in self.terms.items() if n}
        )

    def times_nu(self, k: int) -> "SymElem":
        """Multiply by nu^k via exponent shift; k may be negative if every
        stored power allows it."""
        data = {}
        for (p, m, n), c in self.terms.items():
            if p + k < 0:
                raise ValueError("nu exponent would become negative")
            data[(p + k, m, n)] = c
        return SymElem._raw(data)

    def nu_coefficient(self, p0: int) -> "SymElem":
        """The coefficient of nu^p0, as an element with no nu dependence."""
        return SymElem._raw(
            {(0, m, n): c for (p, m, n), c in self.terms.items() if p == p0}
        )

    def at_nu_zero(self) -> "SymElem":
        return self.nu_coefficient(0)

    @property
    def max_nu_power(self) -> int:
        return max((p for (p, _, _) in self.terms), default=0)

    @property
    def min_nu_power(self) -> int:
        return min((p for (p, _, _) in self.terms), default=0)

    def eval(self, nu: complex, a: float, l: float) -> complex:
        """Numeric evaluation of sum coeff * nu^p * l^m * exp(-2 n a)."""
        import cmath

        total = 0j
        for (p, m, n), c in self.terms.items():
            total += complex(c) * nu**p * l**m * cmath.exp(-2.0 * n * a)
        return total

    # -- serialization -----------------------------------------------------

    def to_obj(self) -> dict:
        return {
            "terms": [
                {"p": p, "m": m, "n": n, "num": c.numerator, "den": c.denominator}
                for (p, m, n), c in sorted(self.terms.items())
            ]
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "SymElem":
        return cls(
            {
                (t["p"], t["m"], t["n"]): Fraction(t["num"], t["den"])
                for t in obj["terms"]
            }
        )

    def dumps(self) -> str:
        return json.dumps(self.to_obj(), separators=(",", ":"))

    @classmethod
    def loads(cls, s: str) -> "SymElem":
        return cls.from_obj(json.loads(s))

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (p, m, n), c in sorted(self.terms.items()):
            factors = [] if c == 1 and (p or m or n) else [str(c)]
            if p:
                factors.append("nu" + (f"^{p}" if p > 1 else ""))
            if m:
                factors.append("l" + (f"^{m}" if m > 1 else ""))
            if n:
                factors.append(f"exp(-{2 * n}a)")
            parts.append("*".join(factors))
        return " + ".join(parts)


def lambda_map(x: LieGen) -> SymElem:
    """Generator symbols on the plane: A -> 2l, E -> exp(-2a)."""
    if x is LieGen.A:
        return SymElem.monomial(2, m=1)
    return SymElem.e2a()


@lru_cache(maxsize=None)
def _shift_coeffs(m: int, delta: int) -> tuple[int, ...]:
    """Coefficients of l^m expanded at l + delta*nu: C(m,i)*delta^i for nu^i l^(m-i)."""
    if delta == 0:
        return (1,)
    return tuple(comb(m, i) * delta**i for i in range(m + 1))


def moyal_product(u: SymElem, v: SymElem) -> SymElem:
    """Star product of two elements; exact, the series terminates.

    Computed termwise through the closed shifted-polynomial form: for
    ``u = f1(l) exp(-2 n1 a)`` and ``v = f2(l) exp(-2 n2 a)``,

        u * v = f1(l + 2 n2 nu) f2(l - 2 n1 nu) exp(-2 (n1+n2) a),

    which resums the full bidifferential exponential.
    """
    ints = all(c.denominator == 1 for c in u.terms.values()) and all(
        c.denominator == 1 for c in v.terms.values()
    )
    if ints:
        acc: dict[Key, int] = {}
        for (p1, m1, n1), c1 in u.terms.items():
            b1 = c1.numerator
            for (p2, m2, n2), c2 in v.terms.items():
                base = b1 * c2.numerator
                left = _shift_coeffs(m1, 2 * n2)
                right = _shift_coeffs(m2, -2 * n1)
                p0, m0, n0 = p1 + p2, m1 + m2, n1 + n2
                for i, ai in enumerate(left):
                    ci = base * ai
                    for j, bj in enumerate(right):
                        key = (p0 + i + j, m0 - i - j, n0)
                        acc[key] = acc.get(key, 0) + ci * bj
        return SymElem._raw({k: Fraction(c) for k, c in acc.items() if c})

    accf: dict[Key, Fraction] = {}
    for (p1, m1, n1), c1 in u.terms.items():
        for (p2, m2, n2), c2 in v.terms.items():
            base = c1 * c2
            left = _shift_coeffs(m1, 2 * n2)
            right = _shift_coeffs(m2, -2 * n1)
            p0, m0, n0 = p1 + p2, m1 + m2, n1 + n2
            for i, ai in enumerate(left):
                ci = base * ai
                for j, bj in enumerate(right):
                    key = (p0 + i + j, m0 - i - j, n0)
                    s = accf.get(key, _ZERO) + ci * bj
                    if s:
                        accf[key] = s
                    else:
                        accf.pop(key, None)
    return SymElem._raw(accf)


_ZERO = Fraction(0)


def poisson_bracket(u: SymElem, v: SymElem) -> SymElem:
    """{u, v} = d_a u * d_l v - d_l u * d_a v, exactly."""
    return u.d_a() * v.d_l() - u.d_l() * v.d_a()


def commutator(u: SymElem, v: SymElem) -> SymElem:
    """Star commutator [u, v] = u*v - v*u."""
    return moyal_product(u, v) - moyal_product(v, u)


def rho(x: LieGen, u: SymElem, nu_power_budget: int | None = None) -> SymElem:
    """Infinitesimal action of a generator, rho(X) = (1/(4 nu)) [lambda_X, .].

    Closed forms: rho(A) = -d_a and
    rho(E) = -(exp(-2a)/(2 nu)) sinh(2 nu d_l), expanded as the finite odd
    l-derivative sum on each monomial.  The 1/nu prefactor is an exponent
    shift, so the result is exact and keeps nonnegative nu powers.

    ``nu_power_budget`` optionally caps the nu power of the expansion; exceeding
    it raises ValueError (the expansion on l^m needs powers up to m - 1).
    """
    if x is LieGen.A:
        return -u.d_a()
    data: dict[Key, Fraction] = {}
    for (p, m, n), c in u.terms.items():
        for j in range(1, m + 1, 2):
            if nu_power_budget is not None and p + j - 1 > nu_power_budget:
                raise ValueError(
                    f"nu power {p + j - 1} exceeds budget {nu_power_budget}"
                )
            key = (p + j - 1, m - j, n + 1)
            inc = c * (comb(m, j) * (1 << (j - 1)))
            s = data.get(key, _ZERO) - inc
            if s:
                data[key] = s
            else:
                data.pop(key, None)
    return SymElem._raw(data)


def check_derivation(x: LieGen, u: SymElem, v: SymElem) -> SymElem:
    """Residual rho(X)(u*v) - rho(X)u * v - u * rho(X)v; must be exactly zero."""
    return (
        rho(x, moyal_product(u, v))
        - moyal_product(rho(x, u), v)
        - moyal_product(u, rho(x, v))
    )


def check_homomorphism(
    test_elements: list[SymElem] | None = None,
) -> tuple[SymElem, list[SymElem]]:
    """Exact residuals of the two structural identities.

    Returns ``(commutator_residual, rho_residuals)`` where the first is
    ``[lambda_A, lambda_E] - 2 nu {lambda_A, lambda_E}`` and each entry of the
    second is ``rho([A, E]) u - (rho(A) rho(E) - rho(E) rho(A)) u`` over the
    supplied test elements.  All residuals must be exactly zero.
    """
    lam_a, lam_e = lambda_map(LieGen.A), lambda_map(LieGen.E)
    comm_res = commutator(lam_a, lam_e) - 2 * poisson_bracket(lam_a, lam_e).times_nu(1)
    if test_elements is None:
        test_elements = [
            SymElem.one(),
            SymElem.l_sym(),
            SymElem.monomial(1, m=2),
            SymElem.l_sym() * SymElem.e2a(),
        ]
    rho_residuals = []
    for u in test_elements:
        lhs = BRACKET_AE * rho(LieGen.E, u)
        rhs = rho(LieGen.A, rho(LieGen.E, u)) - rho(LieGen.E, rho(LieGen.A, u))
        rho_residuals.append(lhs - rhs)
    return comm_res, rho_residuals
