"""Nahm's equation 1 - z_i = prod_j z_j^{A_ij} and the quantities derived from it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import mpmath
import numpy as np

from .errors import SolverError, ValidationError
from .exact import QuadraticFunction, is_positive_definite, leading_minors, to_fraction
from .series import ldl_inverse
from .special import lambda_invariant

START_PREC = 128
CLAMP = mpmath.mpf(2) ** -20


def as_matrix(A) -> tuple:
    if isinstance(A, QuadraticFunction):
        return A.A
    M = tuple(tuple(to_fraction(x) for x in row) for row in A)
    if not is_positive_definite(M):
        raise ValidationError("A must be symmetric positive definite")
    return M


@dataclass(frozen=True)
class NahmSolution:
    A: tuple
    m: int
    prec: int
    z: tuple
    theta: tuple
    lam: object
    a_tilde: tuple
    residual_bound: object

    @property
    def N(self) -> int:
        return len(self.z)

    def direct_residual(self):
        """max_i |(1 - z_i) - prod_j z_j^{A_ij}|."""
        with mpmath.workprec(self.prec + 16):
            return max(
                abs((1 - zi) - mpmath.fprod(zj ** _mpf(a) for zj, a in zip(self.z, row)))
                for zi, row in zip(self.z, self.A)
            )


def _mpf(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


def _residual(A, u):
    # g_i(u) = log(1 - z_i) - sum_j A_ij u_j with z = exp(u)
    return [
        mpmath.log(-mpmath.expm1(u[i])) - mpmath.fsum(_mpf(A[i][j]) * u[j] for j in range(len(u)))
        for i in range(len(u))
    ]


def _norm(v):
    return max(abs(x) for x in v)


def solve_nahm_log(A, prec: int = 256, start=None, max_iter: int = 400):
    """Damped Newton in log coordinates; returns (u, residual)."""
    A = as_matrix(A)
    N = len(A)
    lo, hi = mpmath.log(CLAMP), mpmath.log(1 - CLAMP)
    work = min(START_PREC, prec)
    with mpmath.workprec(work + 32):
        u = [mpmath.log(mpmath.mpf(s)) for s in start] if start is not None else [mpmath.log(mpmath.mpf(0.5))] * N
    it = 0
    while True:
        with mpmath.workprec(work + 32):
            u = [mpmath.mpf(x) for x in u]
            target = mpmath.mpf(2) ** (-work + 4)
            g = _residual(A, u)
            while _norm(g) > target:
                it += 1
                if it > max_iter:
                    raise SolverError(f"Nahm solver did not converge; last residual {mpmath.nstr(_norm(g), 5)}")
                z = [mpmath.exp(x) for x in u]
                at = [[_mpf(A[i][j]) + (z[i] / (1 - z[i]) if i == j else 0) for j in range(N)] for i in range(N)]
                inv, _ = ldl_inverse(at, work)
                step = [mpmath.fsum(inv[i][j] * g[j] for j in range(N)) for i in range(N)]
                t = mpmath.mpf(1)
                current = _norm(g)
                while True:
                    cand = [min(max(ui + t * si, lo), hi) for ui, si in zip(u, step)]
                    gc = _residual(A, cand)
                    if _norm(gc) < current or t < mpmath.mpf(2) ** -60:
                        break
                    t /= 2
                if _norm(gc) >= current:
                    raise SolverError(f"Nahm solver stalled at residual {mpmath.nstr(current, 5)}")
                u, g = cand, gc
        if work >= prec:
            return u, _norm(g)
        work = min(2 * work, prec)


def build_solution(A, m: int = 1, prec: int = 256, start=None) -> NahmSolution:
    """Solve Nahm's equation and attach theta = z^(1/m), Lambda and A-tilde."""
    if m < 1:
        raise ValidationError("m must be >= 1")
    A = as_matrix(A)
    u, res = solve_nahm_log(A, prec, start)
    N = len(A)
    with mpmath.workprec(prec + 16):
        z = tuple(mpmath.exp(x) for x in u)
        theta = tuple(mpmath.exp(x / m) for x in u)
        lam = lambda_invariant(z)
        at = tuple(tuple(_mpf(A[i][j]) + (z[i] / (1 - z[i]) if i == j else 0) for j in range(N)) for i in range(N))
    return NahmSolution(A=A, m=m, prec=prec, z=z, theta=theta, lam=lam, a_tilde=at, residual_bound=res)


def solve_nahm(A, prec: int = 256, start=None) -> NahmSolution:
    return build_solution(A, 1, prec, start)


def c_of_Q(Q: QuadraticFunction, sol: NahmSolution):
    """det(A~)^(-1/2) prod_i theta_i^{B_i} (1 - z_i)^(1/2 - 1/m)."""
    if Q.A != sol.A:
        raise ValidationError("solution was built for a different matrix")
    with mpmath.workprec(sol.prec + 16):
        det = mpmath.det(mpmath.matrix([list(r) for r in sol.a_tilde]))
        expo = mpmath.mpf(1) / 2 - mpmath.mpf(1) / sol.m
        out = 1 / mpmath.sqrt(det)
        for th, zi, b in zip(sol.theta, sol.z, Q.B):
            out *= th ** _mpf(b) * (1 - zi) ** expo
        return out


def c0_invariant(A, prec: int = 256):
    """C_0(A) = sum_i L(z_i) / (2 pi)^2, i.e. -Lambda / (4 pi^2)."""
    sol = solve_nahm(A, prec)
    with mpmath.workprec(prec):
        return -sol.lam / (4 * mpmath.pi**2)


def _min_eigen_lower_bound(A) -> Fraction:
    """A rational lam > 0 with A - lam*I positive definite, certified exactly."""
    N = len(A)
    est = float(np.linalg.eigvalsh(np.array([[float(x) for x in row] for row in A])).min())
    lam = Fraction(est * (1 - 1e-6)).limit_denominator(10**12) if est > 0 else Fraction(1, 2**20)
    for _ in range(200):
        shifted = [[A[i][j] - (lam if i == j else 0) for j in range(N)] for i in range(N)]
        if lam > 0 and all(x > 0 for x in leading_minors(shifted)):
            return lam
        lam /= 2
    raise SolverError("could not certify a positive eigenvalue bound")


def lattice_points_below(Q: QuadraticFunction, bound: Fraction):
    """All n in Z_{>=0}^N with Q(n) <= bound, in lexicographic order."""
    bound = Fraction(bound)
    lam = _min_eigen_lower_bound(Q.A)
    bnorm = math.sqrt(float(sum(b * b for b in Q.B))) + 1e-9
    slack = float(bound - Q.C)
    if slack < 0 and Q.N >= 1:
        # Q(0) = C > bound can still leave other points below the bound
        pass
    lamf = float(lam)
    disc = bnorm**2 + 2 * lamf * max(slack, 0.0)
    radius = int(math.floor((bnorm + math.sqrt(disc)) / lamf)) + 1
    out = []
    for n in product(range(radius + 1), repeat=Q.N):
        if sum(x * x for x in n) > radius * radius:
            continue
        if Q(n) <= bound:
            out.append(n)
    return out


def v_infinity(Q: QuadraticFunction) -> tuple[Fraction, tuple]:
    """Exact min of Q over Z_{>=0}^N and a minimiser."""
    pts = lattice_points_below(Q, Q.C)
    best = min(pts, key=lambda n: (Q(n), n))
    return Q(best), best


def modularity_bound_check(Q: QuadraticFunction, prec: int = 256) -> dict:
    v, arg = v_infinity(Q)
    c0 = c0_invariant(Q.A, prec)
    with mpmath.workprec(prec):
        gap = _mpf(v) - c0
        tol = mpmath.mpf(2) ** (-prec // 2)
        return {"v_inf": v, "argmin": arg, "c0": c0, "gap": gap, "satisfied": bool(gap >= -tol)}
