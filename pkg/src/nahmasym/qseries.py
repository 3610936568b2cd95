"""Nahm sums as q-series: exact Puiseux expansion, direct radial evaluation,
and the transfer between radial and coefficient asymptotics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import mpmath

from .errors import DomainError, ResourceError, ValidationError
from .exact import QuadraticFunction, RootOfUnityPhase, denominator, expi
from .nahm import NahmSolution, _mpf, build_solution, lattice_points_below


@dataclass
class PuiseuxSeries:
    """sum_j coeffs[j] q^(j/d), known exactly for j/d <= M."""

    d: int
    coeffs: dict
    M: Fraction

    def __getitem__(self, exponent) -> int:
        j = Fraction(exponent) * self.d
        if j.denominator != 1:
            return 0
        if j > self.M * self.d:
            raise IndexError(f"exponent {exponent} is beyond the truncation order {self.M}")
        return self.coeffs.get(int(j), 0)

    def integer_coefficients(self) -> list[int]:
        """Coefficients of q^0..q^floor(M) when d == 1."""
        if self.d != 1:
            raise ValueError("series has fractional exponents")
        return [self.coeffs.get(j, 0) for j in range(0, math.floor(self.M) + 1)]

    def evaluate(self, q):
        """Numeric value of the truncated series, with q^(j/d) = exp((j/d) log q)."""
        q = mpmath.mpmathify(q)
        lq = mpmath.log(q)
        return mpmath.fsum(c * mpmath.exp(lq * j / self.d) for j, c in sorted(self.coeffs.items()))

    def to_text(self) -> str:
        lines = [f"{self.d} {self.M.numerator}/{self.M.denominator}"]
        lines += [f"{j} {c}" for j, c in sorted(self.coeffs.items())]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PuiseuxSeries":
        rows = [ln.split() for ln in text.strip().splitlines()]
        d, M = int(rows[0][0]), Fraction(rows[0][1])
        return cls(d, {int(j): int(c) for j, c in rows[1:]}, M)


def _inverse_qfactorials(kmax: int, length: int) -> list[list[int]]:
    """1/(q)_k truncated to q^0..q^(length-1), for k = 0..kmax."""
    cur = [0] * length
    if length:
        cur[0] = 1
    out = [cur[:]]
    for k in range(1, kmax + 1):
        # divide by (1 - q^k): c[i] += c[i-k]
        for i in range(k, length):
            cur[i] += cur[i - k]
        out.append(cur[:])
    return out


def _mul_trunc(a: list[int], b: list[int], length: int) -> list[int]:
    out = [0] * length
    for i, x in enumerate(a[:length]):
        if x:
            for j, y in enumerate(b[: length - i]):
                if y:
                    out[i + j] += x * y
    return out


def expand_fq(Q: QuadraticFunction, M) -> PuiseuxSeries:
    """Exact coefficients of F_Q(q) = sum_n q^Q(n) / prod (q)_{n_i} through q^M."""
    M = Fraction(M)
    d = denominator(Q)
    pts = lattice_points_below(Q, M)
    coeffs: dict[int, int] = {}
    if not pts:
        return PuiseuxSeries(d, coeffs, M)
    vmin = min(Q(n) for n in pts)
    span = math.floor(M - vmin) + 1
    kmax = max(max(n) for n in pts)
    inv = _inverse_qfactorials(kmax, span)
    top = math.floor(M * d)
    for n in pts:
        qn = Q(n)
        length = math.floor(M - qn) + 1
        poly = inv[n[0]][:length]
        for ni in n[1:]:
            poly = _mul_trunc(poly, inv[ni], length)
        base = int(qn * d)
        for e, c in enumerate(poly):
            if c:
                j = base + d * e
                if j <= top:
                    coeffs[j] = coeffs.get(j, 0) + c
    return PuiseuxSeries(d, {j: c for j, c in coeffs.items() if c}, M)


def rogers_ramanujan_product(M: int, residues=(1, 4)) -> list[int]:
    """prod_{n = +-1 mod 5} 1/(1 - q^n) through q^M."""
    c = [0] * (M + 1)
    c[0] = 1
    for n in range(1, M + 1):
        if n % 5 in residues:
            for i in range(n, M + 1):
                c[i] += c[i - n]
    return c


def _shells(N: int, s: int):
    """Points of Z_{>=0}^N with max-norm exactly s, lexicographic."""
    if s == 0:
        yield (0,) * N
        return
    for n in product(range(s + 1), repeat=N):
        if max(n) == s:
            yield n


def shell_sum(N: int, term, prec: int, stall: int = 8, max_shells: int = 20000):
    """Sum term(n) over Z_{>=0}^N shell by shell.

    Stops once `stall` consecutive shells each carry less than 2^(-prec-16)
    of the absolute mass accumulated so far.
    """
    tol = mpmath.mpf(2) ** (-prec - 16)
    total = mpmath.mpc(0)
    mass = mpmath.mpf(0)
    quiet = 0
    for s in range(max_shells):
        shell = [term(n) for n in _shells(N, s)]
        shell_mass = mpmath.fsum(abs(t) for t in shell)
        total += mpmath.fsum(shell)
        mass += shell_mass
        if mass > 0 and shell_mass <= tol * mass:
            quiet += 1
            if quiet >= stall:
                return total, s
        else:
            quiet = 0
    raise ResourceError(f"shell budget {max_shells} exhausted; eps too small for the requested precision")


class _PochTable:
    """Cached (q)_k = (q; q)_k."""

    def __init__(self, q):
        self.q = q
        self.vals = [mpmath.mpc(1)]
        self.qk = mpmath.mpc(1)

    def __getitem__(self, k):
        while len(self.vals) <= k:
            self.qk *= self.q
            self.vals.append(self.vals[-1] * (1 - self.qk))
        return self.vals[k]


def eval_radial(Q: QuadraticFunction, phase: RootOfUnityPhase, eps, prec: int = 256, max_shells: int = 20000):
    """f_Q(alpha + i eps/(2 pi m)) summed directly at q = zeta e^{-eps/m}."""
    with mpmath.workprec(prec + 32):
        eps = mpmath.mpmathify(eps)
        if not eps > 0:
            raise ValidationError("eps must be positive")
        m = phase.m
        q = phase.zeta() * mpmath.exp(-eps / m)
        table = _PochTable(q)
        alpha = phase.alpha

        def term(n):
            val = Q(n)
            t = expi(alpha * val) * mpmath.exp(-eps * _mpf(val) / m)
            for ni in n:
                t /= table[ni]
            return t

        total, _ = shell_sum(Q.N, term, prec, max_shells=max_shells)
        return +total


def twisted_nahm_eval(datum, q, prec: int = 256, max_shells: int = 20000):
    """sum_n e(B.n) q^Q(n) / prod (q)_{n_i}, with q^lam = exp(lam log q)."""
    Q = datum.quadratic() if hasattr(datum, "quadratic") else datum
    with mpmath.workprec(prec + 32):
        q = mpmath.mpmathify(q)
        if not abs(q) < 1:
            raise DomainError("twisted Nahm sum needs |q| < 1")
        lq = mpmath.log(q)
        table = _PochTable(q)

        def term(n):
            twist = sum(b * x for b, x in zip(Q.B, n))
            t = expi(twist) * mpmath.exp(lq * _mpf(Q(n)))
            for ni in n:
                t /= table[ni]
            return t

        total, _ = shell_sum(Q.N, term, prec, max_shells=max_shells)
        return +total


def nahm_eval(Q: QuadraticFunction, q, prec: int = 256, max_shells: int = 20000):
    """Untwisted F_Q(q) at a numeric q (principal branch for fractional powers)."""
    with mpmath.workprec(prec + 32):
        q = mpmath.mpmathify(q)
        if not abs(q) < 1:
            raise DomainError("Nahm sum needs |q| < 1")
        lq = mpmath.log(q)
        table = _PochTable(q)

        def term(n):
            t = mpmath.exp(lq * _mpf(Q(n)))
            for ni in n:
                t /= table[ni]
            return t

        total, _ = shell_sum(Q.N, term, prec, max_shells=max_shells)
        return +total


@dataclass
class RadialGrowthDatum:
    """G(e^{-z}) ~ exp(C^2/(4z)) sum_alpha A_alpha z^alpha."""

    C_growth: object
    alpha_exponents: list
    A_coeffs: list

    def __post_init__(self):
        if not self.C_growth > 0:
            raise ValidationError("growth constant must be positive")
        if any(b <= a for a, b in zip(self.alpha_exponents, self.alpha_exponents[1:])):
            raise ValidationError("alpha exponents must be strictly increasing")


def _gbinom(x, k: int):
    """Generalised binomial coefficient binom(x, k) for integer k >= 0."""
    out = mpmath.mpf(1)
    for i in range(k):
        out *= (x - i) / (i + 1)
    return out


def _dfact(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def k_alpha_n(alpha, n, L: int, C):
    """Saddle-point expansion of K(alpha, n) = (2 pi i)^-1 int exp(C^2/(4z) + n z) z^alpha dz.

    The ell-th correction is the Bessel coefficient of order alpha + 1,
    (2l-1)!! binom(alpha + l + 1/2, 2l) (-1)^l (C sqrt n)^(-l).
    """
    alpha, n, C = mpmath.mpmathify(alpha), mpmath.mpmathify(n), mpmath.mpmathify(C)
    lead = C ** (alpha + mpmath.mpf(1) / 2) / (2 ** (alpha + mpmath.mpf(3) / 2) * mpmath.sqrt(mpmath.pi))
    total = mpmath.mpf(0)
    for ell in range(L + 1):
        total += (
            (-1) ** ell
            * C ** (-ell)
            * _dfact(2 * ell - 1)
            * _gbinom(alpha + ell + mpmath.mpf(1) / 2, 2 * ell)
            * n ** (-mpmath.mpf(3) / 4 - mpmath.mpf(ell) / 2 - alpha / 2)
        )
    return lead * mpmath.exp(C * mpmath.sqrt(n)) * total


def k_alpha_n_quadrature(alpha, n, C):
    """K(alpha, n) by integrating along Re z = C/(2 sqrt n), Im z in [-pi, pi]."""
    alpha, n, C = mpmath.mpmathify(alpha), mpmath.mpmathify(n), mpmath.mpmathify(C)
    h = C / (2 * mpmath.sqrt(n))
    peak = C * mpmath.sqrt(n)

    def f(y):
        z = mpmath.mpc(h, y)
        return mpmath.exp(C**2 / (4 * z) + n * z - peak) * z**alpha

    # Gaussian width of the saddle is about h / n^(1/4); split the range there.
    w = h / n ** mpmath.mpf(0.25)
    pts = [-mpmath.pi] + [k * w for k in range(-40, 41, 4)] + [mpmath.pi]
    val = mpmath.quad(f, pts) / (2 * mpmath.pi)
    return mpmath.re(val) * mpmath.exp(peak)


def coeff_asym_predict(g: RadialGrowthDatum, n, L: int):
    """c(n) ~ sum_alpha A_alpha K(alpha, n)."""
    if n < 1 or L < 0:
        raise ValidationError("need n >= 1 and L >= 0")
    return mpmath.fsum(A * k_alpha_n(a, n, L, g.C_growth) for a, A in zip(g.alpha_exponents, g.A_coeffs))


def extract_growth_datum(Q: QuadraticFunction, K: int, prec: int = 256, sol: NahmSolution | None = None):
    """Radial datum at q -> 1: C = 2 sqrt(Lambda), A_alpha = c(Q) s_alpha for alpha = 0..K."""
    from .asymptotics import prediction

    phase = RootOfUnityPhase(0, 1)
    sol = sol or build_solution(Q.A, 1, prec)
    if sol.m != 1:
        raise DomainError("growth datum is defined at q -> 1 only (m = 1)")
    pred = prediction(Q, phase, K, prec, sol)
    with mpmath.workprec(prec):
        coeffs = [mpmath.re(pred.constant * c) for c in pred.s_series.integer_coefficients()]
        return RadialGrowthDatum(2 * mpmath.sqrt(sol.lam), list(range(K + 1)), coeffs)
