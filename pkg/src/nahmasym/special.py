"""Bernoulli polynomials, polylogarithms of order <= 2, the Rogers dilogarithm,
Pochhammer symbols and the cyclic quantum dilogarithm.

All numeric routines work at the ambient mpmath precision unless `prec` is given.
"""

from __future__ import annotations

import contextlib
import threading
from fractions import Fraction
from math import comb

import mpmath

from .errors import DomainError
from .exact import RootOfUnityPhase


def precision(prec: int | None):
    return mpmath.workprec(prec) if prec else contextlib.nullcontext()


class BernoulliCache:
    """Coefficient lists (ascending powers, exact) of B_r(x), grown on demand."""

    def __init__(self):
        self._polys: list[list[Fraction]] = [[Fraction(1)]]
        self._lock = threading.Lock()

    def __getitem__(self, r: int) -> list[Fraction]:
        if r < 0:
            raise DomainError("Bernoulli polynomial degree must be >= 0")
        if r >= len(self._polys):
            with self._lock:
                while len(self._polys) <= r:
                    self._extend()
        return self._polys[r]

    def _extend(self):
        # sum_{j<=r} binom(r+1, j) B_j(x) = (r+1) x^r, solved for B_r.
        r = len(self._polys)
        acc = [Fraction(0)] * (r + 1)
        acc[r] = Fraction(r + 1)
        for j, poly in enumerate(self._polys):
            c = comb(r + 1, j)
            for i, a in enumerate(poly):
                acc[i] -= c * a
        self._polys.append([a / (r + 1) for a in acc])


BERNOULLI = BernoulliCache()


def bernoulli_poly(r: int, x):
    """B_r(x); exact when x is a Fraction or int, numeric otherwise."""
    coeffs = BERNOULLI[r]
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        out = Fraction(0)
    else:
        x = mpmath.mpmathify(x)
        coeffs = [mpmath.mpf(c.numerator) / c.denominator for c in coeffs]
        out = mpmath.mpf(0)
    for c in reversed(coeffs):
        out = out * x + c
    return out


def bernoulli_poly_affine(r: int, a: Fraction, b: Fraction) -> list[Fraction]:
    """Exact coefficients in nu of B_r(a + b*nu), ascending powers."""
    out = [Fraction(0)] * (r + 1)
    for i, c in enumerate(BERNOULLI[r]):
        if not c:
            continue
        # (a + b nu)^i
        for n in range(i + 1):
            out[n] += c * comb(i, n) * a ** (i - n) * b**n
    return out


class _NegativePolylogCache:
    """Li_{-n}(w) = P_n(w) / (1-w)^(n+1) with integer P_n, via w d/dw."""

    def __init__(self):
        self._polys = [[0, 1]]
        self._lock = threading.Lock()

    def __getitem__(self, n: int) -> list[int]:
        if n >= len(self._polys):
            with self._lock:
                while len(self._polys) <= n:
                    k = len(self._polys) - 1
                    P = self._polys[k]
                    # P_{k+1} = w * (P_k' (1 - w) + (k + 1) P_k)
                    dP = [i * c for i, c in enumerate(P)][1:] + [0]
                    inner = [0] * (len(P) + 1)
                    for i, c in enumerate(dP):
                        inner[i] += c
                        inner[i + 1] -= c
                    for i, c in enumerate(P):
                        inner[i] += (k + 1) * c
                    while len(inner) > 1 and inner[-1] == 0:
                        inner.pop()
                    self._polys.append([0] + inner)
        return self._polys[n]


NEGATIVE_POLYLOG = _NegativePolylogCache()


def li2(w):
    """Principal-branch dilogarithm."""
    w = mpmath.mpmathify(w)
    if w == 0:
        return mpmath.mpf(0)
    if w == 1:
        return mpmath.pi**2 / 6
    aw = abs(w)
    if aw > 2:
        # inversion: Li2(w) = -pi^2/6 - log(-w)^2/2 - Li2(1/w)
        return -(mpmath.pi**2) / 6 - mpmath.log(-w) ** 2 / 2 - li2(1 / w)
    if aw <= 0.5:
        return _li2_series(w)
    if abs(1 - w) <= 0.5:
        return mpmath.pi**2 / 6 - mpmath.log(w) * mpmath.log(1 - w) - _li2_series(1 - w)
    # Bernoulli series sum B_n u^(n+1)/(n+1)! in u = -log(1-w); |u| < 3.4 < 2 pi
    # in the remaining annulus, and |B_n| <= 4 n!/(2 pi)^n bounds the tail
    u = -mpmath.log(1 - w)
    au = abs(u)
    rho = au / (2 * mpmath.pi)
    tol = mpmath.mpf(2) ** (-mpmath.mp.prec - 10)
    total = mpmath.mpf(0)
    upow = u
    fact = mpmath.mpf(1)
    n = 0
    while True:
        total += mpmath.bernoulli(n) * upow / fact
        n += 1
        upow *= u
        fact *= n + 1
        if n > 3 and 4 * au * rho**n / ((n + 1) * (1 - rho)) < tol:
            return total


def _li2_series(w):
    aw = abs(w)
    tol = mpmath.mpf(2) ** (-mpmath.mp.prec - 10)
    total = mpmath.mpf(0)
    p = w
    k = 1
    while True:
        total += p / (k * k)
        k += 1
        p *= w
        if aw ** k / (k * k * (1 - aw)) < tol:
            return total


def polylog(r: int, w, prec: int | None = None):
    """Li_r(w) for integer r <= 2."""
    if r > 2:
        raise DomainError("polylog is implemented for orders <= 2 only")
    with precision(prec):
        w = mpmath.mpmathify(w)
        if r == 2:
            return li2(w)
        if w == 1:
            raise DomainError(f"Li_{r} has a pole at w = 1")
        if r == 1:
            return -mpmath.log(1 - w)
        n = -r
        P = NEGATIVE_POLYLOG[n]
        num = mpmath.polyval(list(reversed(P)), w)
        return num / (1 - w) ** (n + 1)


def rogers_L(z, prec: int | None = None):
    """Rogers dilogarithm normalised so that L(1) = 0."""
    with precision(prec):
        z = mpmath.mpmathify(z)
        if mpmath.im(z) != 0 or not 0 < mpmath.re(z) < 1:
            raise DomainError("rogers_L needs a real argument in (0, 1)")
        z = mpmath.re(z)
        return li2(z) + mpmath.log(z) * mpmath.log(1 - z) / 2 - mpmath.pi**2 / 6


def lambda_invariant(z, prec: int | None = None):
    with precision(prec):
        return -mpmath.fsum(rogers_L(zi) for zi in z)


def pochhammer_finite(x, q, k: int):
    """(x; q)_k, with (x; q)_k = 1 / (q^k x; q)_{-k} for k < 0."""
    x, q = mpmath.mpmathify(x), mpmath.mpmathify(q)
    if k >= 0:
        out = mpmath.mpf(1)
        qj = mpmath.mpf(1)
        for _ in range(k):
            out *= 1 - qj * x
            qj *= q
        return out
    den = pochhammer_finite(q**k * x, q, -k)
    if den == 0:
        raise DomainError(f"(x; q)_{k} has a vanishing factor")
    return 1 / den


def pochhammer_shifted(x, q, k: int):
    """(q x; q)_k = prod_{j=1}^k (1 - q^j x)."""
    return pochhammer_finite(mpmath.mpmathify(q) * x, q, k)


def _check_q(q):
    if not abs(q) < 1:
        raise DomainError("infinite Pochhammer symbol needs |q| < 1")


def pochhammer_infinite(x, q, prec: int | None = None, return_bound: bool = False):
    """(q x; q)_oo = prod_{i>=1} (1 - q^i x).

    With return_bound=True also returns a bound on |log(tail)| of the dropped factors.
    """
    with precision(prec):
        x, q = mpmath.mpmathify(x), mpmath.mpmathify(q)
        _check_q(q)
        tol = mpmath.mpf(2) ** (-mpmath.mp.prec - 16)
        aq = abs(q)
        out = mpmath.mpf(1)
        term = q * x
        while True:
            if abs(term) <= tol * (1 - aq):
                break
            out *= 1 - term
            term *= q
        if return_bound:
            return out, 2 * abs(term) / (1 - aq)
        return out


def log_pochhammer_infinite(x, q, prec: int | None = None):
    """sum_{i>=1} Log(1 - q^i x) with principal logs, summed term by term."""
    with precision(prec):
        x, q = mpmath.mpmathify(x), mpmath.mpmathify(q)
        _check_q(q)
        tol = mpmath.mpf(2) ** (-mpmath.mp.prec - 16)
        aq = abs(q)
        terms = []
        term = q * x
        while abs(term) > tol * (1 - aq):
            terms.append(mpmath.log(1 - term))
            term *= q
        return mpmath.fsum(terms)


def eta_log_asym(eps, prec: int | None = None):
    """log(1/(q;q)_oo) at q = e^{-eps}, up to an O(eps^K) error for every K."""
    with precision(prec):
        eps = mpmath.mpmathify(eps)
        return mpmath.pi**2 / (6 * eps) - mpmath.log(2 * mpmath.pi / eps) / 2 - eps / 24


def cyclic_quantum_dilog(phase: RootOfUnityPhase, x, prec: int | None = None):
    """D_zeta(x) = prod_{t=1}^{m-1} (1 - zeta^t x)^t."""
    with precision(prec):
        x = mpmath.mpmathify(x)
        out = mpmath.mpf(1)
        for t in range(1, phase.m):
            out *= (1 - phase.zeta_power(t) * x) ** t
        return out


def log_cyclic_quantum_dilog(phase: RootOfUnityPhase, x, prec: int | None = None):
    """sum_t t Log(1 - zeta^t x), the branch used for D_zeta(x)^(1/m)."""
    with precision(prec):
        x = mpmath.mpmathify(x)
        return mpmath.fsum(t * mpmath.log(1 - phase.zeta_power(t) * x) for t in range(1, phase.m))


def cyclic_quantum_dilog_root(phase: RootOfUnityPhase, x, prec: int | None = None):
    with precision(prec):
        x = mpmath.mpmathify(x)
        if not abs(x) < 1:
            raise DomainError("the principal m-th root of D_zeta(x) is defined for |x| < 1")
        if phase.m == 1:
            return mpmath.mpc(1)
        return mpmath.exp(log_cyclic_quantum_dilog(phase, x) / phase.m)
