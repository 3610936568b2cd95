"""Exact rational core: quadratic functions, denominators, residues and Gauss sums."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

import mpmath

from .errors import DomainError, ValidationError


def to_fraction(value) -> Fraction:
    """Parse an int, Fraction or "p/q" string into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"not a rational: {value!r}") from exc
    raise ValidationError(f"not a rational: {value!r}")


def fraction_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _lcm(values) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def leading_minors(A: Sequence[Sequence[Fraction]]) -> list[Fraction]:
    """Leading principal minors of a rational matrix, computed exactly."""
    n = len(A)
    M = [[Fraction(x) for x in row] for row in A]
    minors = []
    det = Fraction(1)
    # Gaussian elimination without pivoting: pivot k is minor_k / minor_{k-1}.
    for k in range(n):
        piv = M[k][k]
        det *= piv
        minors.append(det)
        if piv == 0:
            minors.extend([Fraction(0)] * (n - k - 1))
            break
        for i in range(k + 1, n):
            f = M[i][k] / piv
            if f:
                for j in range(k, n):
                    M[i][j] -= f * M[k][j]
    return minors


def is_positive_definite(A: Sequence[Sequence[Fraction]]) -> bool:
    n = len(A)
    if any(A[i][j] != A[j][i] for i in range(n) for j in range(n)):
        return False
    return all(m > 0 for m in leading_minors(A))


def solve_rational(M, b):
    """Solve M x = b exactly over Q (Gauss-Jordan with row pivoting)."""
    n = len(M)
    aug = [[Fraction(x) for x in row] + [Fraction(b[i])] for i, row in enumerate(M)]
    for c in range(n):
        p = next((r for r in range(c, n) if aug[r][c] != 0), None)
        if p is None:
            raise DomainError("singular matrix")
        aug[c], aug[p] = aug[p], aug[c]
        pv = aug[c][c]
        aug[c] = [x / pv for x in aug[c]]
        for r in range(n):
            if r != c and aug[r][c] != 0:
                f = aug[r][c]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[c])]
    return [aug[i][n] for i in range(n)]


def inverse_rational(M):
    n = len(M)
    cols = [solve_rational(M, [int(i == j) for i in range(n)]) for j in range(n)]
    return [[cols[j][i] for j in range(n)] for i in range(n)]


@dataclass(frozen=True)
class QuadraticFunction:
    """Q(n) = n^t A n / 2 + B n + C with exact rational data.

    A must be symmetric positive definite; this is checked on construction.
    """

    A: tuple
    B: tuple
    C: Fraction = Fraction(0)

    def __post_init__(self):
        A = tuple(tuple(to_fraction(x) for x in row) for row in self.A)
        N = len(A)
        if N == 0 or any(len(row) != N for row in A):
            raise ValidationError("A must be a non-empty square matrix")
        B = tuple(to_fraction(x) for x in self.B)
        if len(B) != N:
            raise ValidationError(f"B has length {len(B)}, expected {N}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", to_fraction(self.C))
        if any(A[i][j] != A[j][i] for i in range(N) for j in range(N)):
            raise ValidationError("A is not symmetric")
        if not all(m > 0 for m in leading_minors(A)):
            raise ValidationError("A is not positive definite")

    @classmethod
    def from_strings(cls, A, B=None, C="0"):
        N = len(A)
        return cls(A, B if B is not None else [0] * N, C)

    @property
    def N(self) -> int:
        return len(self.A)

    def __call__(self, n: Sequence[int]) -> Fraction:
        N = self.N
        quad = sum(self.A[i][j] * n[i] * n[j] for i in range(N) for j in range(N))
        return quad / 2 + sum(b * x for b, x in zip(self.B, n)) + self.C

    def Ak(self, k: Sequence[int]) -> list[Fraction]:
        return [sum(self.A[i][j] * k[j] for j in range(self.N)) for i in range(self.N)]

    def with_C(self, C) -> "QuadraticFunction":
        return QuadraticFunction(self.A, self.B, C)

    def to_dict(self) -> dict:
        return {
            "A": [[fraction_str(x) for x in row] for row in self.A],
            "B": [fraction_str(x) for x in self.B],
            "C": fraction_str(self.C),
        }


@dataclass(frozen=True)
class RootOfUnityPhase:
    """alpha = a/m in lowest terms with 0 <= a < m; zeta = e(alpha)."""

    a: int
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValidationError(f"modulus must be positive, got {self.m}")
        if not 0 <= self.a < self.m:
            raise ValidationError(f"need 0 <= a < m, got a={self.a}, m={self.m}")
        if math.gcd(self.a, self.m) != 1:
            raise ValidationError(f"gcd(a, m) != 1 for a={self.a}, m={self.m}")

    @classmethod
    def parse(cls, text) -> "RootOfUnityPhase":
        x = to_fraction(text) % 1
        return cls(x.numerator, x.denominator)

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.a, self.m)

    def zeta(self):
        return expi(Fraction(self.a, self.m))

    def zeta_power(self, t: int):
        return expi(Fraction(self.a * t, self.m))

    def __str__(self):
        return f"{self.a}/{self.m}"


@dataclass(frozen=True)
class ResidueVector:
    k: tuple
    m: int

    def __post_init__(self):
        k = tuple(int(x) for x in self.k)
        if any(not 0 <= x < self.m for x in k):
            raise ValidationError(f"residues must lie in [0, {self.m}): {k}")
        object.__setattr__(self, "k", k)

    @classmethod
    def reduce(cls, k, m) -> "ResidueVector":
        return cls(tuple(int(x) % m for x in k), m)


def all_residues(N: int, m: int):
    for k in product(range(m), repeat=N):
        yield ResidueVector(k, m)


def expi(angle: Fraction):
    """e(angle) = exp(2 pi i angle) for an exact rational angle, reduced mod 1."""
    frac = Fraction(angle) % 1
    if frac == 0:
        return mpmath.mpc(1)
    if frac == Fraction(1, 2):
        return mpmath.mpc(-1)
    return mpmath.expjpi(2 * mpmath.mpf(frac.numerator) / frac.denominator)


def denominator(Q: QuadraticFunction) -> int:
    """Least d >= 1 with d*Q(Z^N) in Z.

    In the binomial basis Q is integer valued iff the coefficients
    A_ij (i<j), A_ii, A_ii/2 + B_i and C are integers.
    """
    N = Q.N
    parts = [Q.C]
    for i in range(N):
        parts.append(Q.A[i][i])
        parts.append(Q.A[i][i] / 2 + Q.B[i])
        for j in range(i + 1, N):
            parts.append(Q.A[i][j])
    return _lcm(p.denominator for p in parts)


def _is_strong(Q: QuadraticFunction, D: int) -> bool:
    # Q(k + D e_i) - Q(k) = D (Ak)_i + D^2 A_ii / 2 + D B_i is linear in k.
    N = Q.N
    for i in range(N):
        if any((D * Q.A[i][j]).denominator != 1 for j in range(N)):
            return False
        if (D * D * Q.A[i][i] / 2 + D * Q.B[i]).denominator != 1:
            return False
    return True


def strong_denominator(Q: QuadraticFunction) -> int:
    """Least D such that Q(k) mod 1 depends only on k mod D."""
    bound = 2 * denominator(Q)
    for D in range(1, bound + 1):
        if _is_strong(Q, D):
            return D
    raise AssertionError("2d is always a strong denominator")


def is_strong_denominator(Q: QuadraticFunction, D: int) -> bool:
    return D >= 1 and _is_strong(Q, D)


def zeta_power_of_Q(Q: QuadraticFunction, k: Sequence[int], phase: RootOfUnityPhase) -> Fraction:
    """Exact angle of zeta^{Q(k) mod m}, as a fraction of a full turn in [0, 1)."""
    m = phase.m
    if m == 1:
        return Fraction(0)
    val = Q(k)
    s = val.denominator
    if math.gcd(s, m) != 1:
        raise DomainError(f"denominator {s} of Q({tuple(k)}) is not coprime to m={m}")
    qbar = val.numerator * pow(s, -1, m) % m
    return Fraction(phase.a * qbar % m, m)


def reduced_alpha(Q: QuadraticFunction, phase: RootOfUnityPhase, D: int | None = None) -> tuple[int, int]:
    """Integer representative of alpha = a/m modulo lcm(D, d), and that modulus."""
    D = strong_denominator(Q) if D is None else D
    if not is_strong_denominator(Q, D):
        raise DomainError(f"{D} is not a strong denominator of Q")
    L = _lcm([D, denominator(Q)])
    if math.gcd(phase.m, L) != 1:
        raise DomainError(f"m={phase.m} is not coprime to the denominators of Q (D={D}, d={denominator(Q)})")
    if L == 1:
        return 0, 1
    return phase.a * pow(phase.m, -1, L) % L, L


def gauss_sum(Q: QuadraticFunction, phase: RootOfUnityPhase, prec: int = 256, D: int | None = None):
    """G(Q, alpha) = D^{-N} sum_{k mod D} e(abar Q(k))."""
    D = strong_denominator(Q) if D is None else D
    abar, _ = reduced_alpha(Q, phase, D)
    with mpmath.workprec(prec):
        total = mpmath.mpc(0)
        for k in product(range(D), repeat=Q.N):
            total += expi(abar * Q(k))
        return total / mpmath.mpf(D) ** Q.N
