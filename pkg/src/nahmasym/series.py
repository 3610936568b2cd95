"""Truncated series in eps^(1/2), polynomials in x with such coefficients,
and formal Gaussian integration.

Exponents of eps are stored in half units: key j stands for eps^(j/2).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

import mpmath

from .errors import DomainError, NotPositiveDefiniteError


def _half_units(e) -> int:
    e2 = Fraction(e) * 2
    if e2.denominator != 1:
        raise DomainError(f"exponent {e} is not a multiple of 1/2")
    return int(e2)


class EpsSeries:
    """Power series in eps^(1/2) with complex coefficients, truncated at eps^K."""

    __slots__ = ("coeffs", "top")

    def __init__(self, coeffs: Mapping[int, object] | None = None, top: int = 0):
        # top is 2K; coefficients above it are dropped.
        self.top = int(top)
        self.coeffs = {}
        for j, c in (coeffs or {}).items():
            if j < 0:
                raise DomainError("EpsSeries holds nonnegative powers only")
            if j <= self.top and c != 0:
                self.coeffs[j] = mpmath.mpmathify(c)

    @classmethod
    def from_exponents(cls, coeffs: Mapping, order) -> "EpsSeries":
        return cls({_half_units(e): c for e, c in coeffs.items()}, _half_units(order))

    @classmethod
    def constant(cls, c, order) -> "EpsSeries":
        return cls({0: c}, _half_units(order))

    @property
    def order(self) -> Fraction:
        return Fraction(self.top, 2)

    def valuation(self) -> Fraction | None:
        return Fraction(min(self.coeffs), 2) if self.coeffs else None

    def __getitem__(self, exponent):
        return self.coeffs.get(_half_units(exponent), mpmath.mpc(0))

    def items(self):
        """(exponent, coefficient) pairs in increasing exponent order."""
        return [(Fraction(j, 2), self.coeffs[j]) for j in sorted(self.coeffs)]

    def integer_coefficients(self) -> list:
        return [self.coeffs.get(2 * i, mpmath.mpc(0)) for i in range(self.top // 2 + 1)]

    def max_half_integer_coefficient(self):
        vals = [abs(c) for j, c in self.coeffs.items() if j % 2]
        return max(vals) if vals else mpmath.mpf(0)

    def truncate(self, order) -> "EpsSeries":
        return EpsSeries(self.coeffs, min(self.top, _half_units(order)))

    def __add__(self, other):
        if not isinstance(other, EpsSeries):
            other = EpsSeries({0: other}, self.top)
        top = min(self.top, other.top)
        out = dict(self.coeffs)
        for j, c in other.coeffs.items():
            out[j] = out.get(j, 0) + c
        return EpsSeries(out, top)

    __radd__ = __add__

    def __neg__(self):
        return EpsSeries({j: -c for j, c in self.coeffs.items()}, self.top)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, EpsSeries):
            return EpsSeries({j: c * other for j, c in self.coeffs.items()}, self.top)
        top = min(self.top, other.top)
        out: dict[int, object] = {}
        for j1, c1 in self.coeffs.items():
            for j2, c2 in other.coeffs.items():
                j = j1 + j2
                if j <= top:
                    out[j] = out.get(j, 0) + c1 * c2
        return EpsSeries(out, top)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1 / mpmath.mpmathify(scalar))

    def reciprocal(self) -> "EpsSeries":
        c0 = self.coeffs.get(0, 0)
        if c0 == 0:
            raise DomainError("reciprocal needs a nonzero constant term")
        rest = (self - c0) * (-1 / c0)
        # 1/(c0 (1 - u)) = sum u^k / c0
        out = EpsSeries({0: 1}, self.top)
        power = EpsSeries({0: 1}, self.top)
        while True:
            power = power * rest
            if not power.coeffs:
                break
            out = out + power
        return out * (1 / c0)

    def __call__(self, eps):
        eps = mpmath.mpmathify(eps)
        root = mpmath.sqrt(eps)
        return mpmath.fsum(c * root**j for j, c in sorted(self.coeffs.items()))

    def __repr__(self):
        terms = ", ".join(f"{Fraction(j, 2)}: {mpmath.nstr(c, 8)}" for j, c in sorted(self.coeffs.items()))
        return f"EpsSeries({{{terms}}}, order={self.order})"

    def to_records(self, digits: int | None = None) -> list:
        prec = mpmath.mp.prec
        digits = digits or mpmath.libmp.prec_to_dps(prec)
        out = []
        for j in sorted(self.coeffs):
            c = mpmath.mpc(self.coeffs[j])
            out.append([f"{j}/2", mpmath.nstr(c.real, digits), mpmath.nstr(c.imag, digits), prec])
        return out


class XPolySeries:
    """Polynomial in x_1..x_N whose coefficients are EpsSeries."""

    __slots__ = ("terms", "nvars", "top")

    def __init__(self, terms: Mapping[tuple, EpsSeries], nvars: int, top: int):
        self.nvars = nvars
        self.top = int(top)
        self.terms = {}
        for idx, s in terms.items():
            if len(idx) != nvars:
                raise DomainError(f"multi-index {idx} does not have {nvars} entries")
            if s.top != self.top:
                s = EpsSeries(s.coeffs, min(s.top, self.top))
            if s.coeffs:
                self.terms[tuple(idx)] = s

    @classmethod
    def one(cls, nvars: int, top: int) -> "XPolySeries":
        return cls({(0,) * nvars: EpsSeries({0: 1}, top)}, nvars, top)

    def __add__(self, other: "XPolySeries") -> "XPolySeries":
        out = dict(self.terms)
        for idx, s in other.terms.items():
            out[idx] = out[idx] + s if idx in out else s
        return XPolySeries(out, self.nvars, min(self.top, other.top))

    def __mul__(self, other):
        if not isinstance(other, XPolySeries):
            return XPolySeries({i: s * other for i, s in self.terms.items()}, self.nvars, self.top)
        top = min(self.top, other.top)
        out: dict[tuple, EpsSeries] = {}
        for i1, s1 in self.terms.items():
            v1 = min(s1.coeffs)
            for i2, s2 in other.terms.items():
                if v1 + min(s2.coeffs) > top:
                    continue
                idx = tuple(a + b for a, b in zip(i1, i2))
                prod = s1 * s2
                out[idx] = out[idx] + prod if idx in out else prod
        return XPolySeries(out, self.nvars, top)

    __rmul__ = __mul__

    def embed(self, nvars: int, slot: int) -> "XPolySeries":
        """Univariate series placed in coordinate `slot` of an nvars-variable ring."""
        if self.nvars != 1:
            raise DomainError("embed expects a univariate series")
        terms = {}
        for (e,), s in self.terms.items():
            idx = [0] * nvars
            idx[slot] = e
            terms[tuple(idx)] = s
        return XPolySeries(terms, nvars, self.top)

    def degree(self) -> int:
        return max((sum(i) for i in self.terms), default=0)


def series_exp(f):
    """exp(f) for an EpsSeries or XPolySeries with no eps^0 part."""
    if isinstance(f, EpsSeries):
        if f.coeffs.get(0, 0) != 0:
            raise DomainError("series_exp needs a vanishing constant term")
        one = EpsSeries({0: 1}, f.top)
    else:
        if any(0 in s.coeffs for s in f.terms.values()):
            raise DomainError("series_exp needs positive eps-valuation in every term")
        one = XPolySeries.one(f.nvars, f.top)
    out, term, n = one, one, 0
    while True:
        n += 1
        term = term * f * (mpmath.mpf(1) / n)
        empty = not term.coeffs if isinstance(term, EpsSeries) else not term.terms
        if empty:
            return out
        out = out + term


def ldl_inverse(M, prec: int | None = None):
    """Inverse of a symmetric positive definite matrix via LDL^t.

    Raises NotPositiveDefiniteError when a pivot is not above 2^(-prec/2).
    """
    prec = prec or mpmath.mp.prec
    n = len(M)
    M = [[mpmath.mpmathify(M[i][j]) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i):
            if abs(M[i][j] - M[j][i]) > mpmath.mpf(2) ** (-prec // 2) * (1 + abs(M[i][j])):
                raise NotPositiveDefiniteError("matrix is not symmetric")
    tol = mpmath.mpf(2) ** (-(prec // 2))
    L = [[mpmath.mpf(0)] * n for _ in range(n)]
    d = [mpmath.mpf(0)] * n
    for j in range(n):
        s = M[j][j] - mpmath.fsum(L[j][k] ** 2 * d[k] for k in range(j))
        if mpmath.im(s) != 0 and abs(mpmath.im(s)) > tol:
            raise NotPositiveDefiniteError("complex pivot")
        s = mpmath.re(s)
        if not s > tol:
            raise NotPositiveDefiniteError(f"pivot {mpmath.nstr(s, 5)} at position {j}")
        d[j] = s
        L[j][j] = mpmath.mpf(1)
        for i in range(j + 1, n):
            L[i][j] = (M[i][j] - mpmath.fsum(L[i][k] * L[j][k] * d[k] for k in range(j))) / s
    # Solve L D L^t X = I column by column.
    inv = [[None] * n for _ in range(n)]
    for c in range(n):
        y = [mpmath.mpf(0)] * n
        for i in range(n):
            y[i] = (1 if i == c else 0) - mpmath.fsum(L[i][k] * y[k] for k in range(i))
        y = [y[i] / d[i] for i in range(n)]
        x = [mpmath.mpf(0)] * n
        for i in reversed(range(n)):
            x[i] = y[i] - mpmath.fsum(L[k][i] * x[k] for k in range(i + 1, n))
        for i in range(n):
            inv[i][c] = x[i]
    return inv, d


class GaussianMoments:
    """Moments of the centred Gaussian with density prop. to exp(-x^t M x / 2).

    Uses the recursive form of Wick's theorem:
    E[x_i x^b] = sum_j cov_ij b_j E[x^(b - e_j)].
    """

    def __init__(self, M, prec: int | None = None):
        self.cov, self.pivots = ldl_inverse(M, prec)
        self.N = len(self.cov)
        self._cache: dict[tuple, object] = {(0,) * self.N: mpmath.mpf(1)}

    def __call__(self, alpha) -> object:
        alpha = tuple(alpha)
        if sum(alpha) % 2:
            return mpmath.mpf(0)
        hit = self._cache.get(alpha)
        if hit is not None:
            return hit
        i = next(k for k, a in enumerate(alpha) if a)
        beta = list(alpha)
        beta[i] -= 1
        total = mpmath.mpf(0)
        for j, bj in enumerate(beta):
            if bj and self.cov[i][j] != 0:
                gamma = list(beta)
                gamma[j] -= 1
                total += self.cov[i][j] * bj * self(gamma)
        self._cache[alpha] = total
        return total


def gaussian_moment(M, alpha, prec: int = 256):
    with mpmath.workprec(prec):
        return GaussianMoments(M, prec)(alpha)


def formal_gaussian_integrate(M, f: XPolySeries, prec: int | None = None) -> EpsSeries:
    """I_M[f]: the Gaussian-normalised integral, applied monomial by monomial."""
    moments = GaussianMoments(M, prec)
    if moments.N != f.nvars:
        raise DomainError(f"matrix size {moments.N} does not match {f.nvars} variables")
    out = EpsSeries({}, f.top)
    for idx in sorted(f.terms):
        mu = moments(idx)
        if mu != 0:
            out = out + f.terms[idx] * mu
    return out
