"""Numerical checks of the Kashaev-Mangazeev-Stroganov identity, Ramanujan's
1psi1 summation and the leading asymptotics of (x; q)_oo near a root of unity."""

from __future__ import annotations

import random
from dataclasses import dataclass

import mpmath

from .errors import DomainError, ValidationError
from .exact import RootOfUnityPhase
from .special import cyclic_quantum_dilog, li2, pochhammer_finite, pochhammer_infinite


@dataclass(frozen=True)
class KmsSample:
    """Point on the curve Z (1 - Y) = 1 - X together with m-th roots x, y, z."""

    X: object
    Y: object
    Z: object
    x: object
    y: object
    z: object
    phase: RootOfUnityPhase
    prec: int

    @classmethod
    def build(cls, X, Y, phase: RootOfUnityPhase, prec: int = 192, shifts=(0, 0, 0)) -> "KmsSample":
        """Principal m-th roots, each optionally multiplied by zeta^shift."""
        with mpmath.workprec(prec + 16):
            X, Y = mpmath.mpmathify(X), mpmath.mpmathify(Y)
            if X == 1 or Y == 1:
                raise DomainError("X and Y must differ from 1")
            Z = (1 - X) / (1 - Y)
            m = phase.m
            roots = [mpmath.root(V, m) * phase.zeta_power(s) for V, s in zip((X, Y, Z), shifts)]
            return cls(X, Y, Z, *roots, phase=phase, prec=prec)

    def max_root_error(self):
        m = self.phase.m
        with mpmath.workprec(self.prec + 16):
            return max(abs(r**m - V) for r, V in ((self.x, self.X), (self.y, self.Y), (self.z, self.Z)))


def sample_kms(phase: RootOfUnityPhase, count: int, seed: int = 0, prec: int = 192, radius=0.7, gap=0.1):
    """X, Y uniform in the disk |.| < radius with |1 - X|, |1 - Y| > gap."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        pts = []
        while len(pts) < 2:
            u, v = rng.uniform(-radius, radius), rng.uniform(-radius, radius)
            if u * u + v * v < radius * radius and abs(complex(1 - u, -v)) > gap:
                pts.append(mpmath.mpc(u, v))
        out.append(KmsSample.build(pts[0], pts[1], phase, prec))
    return out


def f_cyclic(s: KmsSample, ks=None):
    """f(x, y | z) = sum_{k mod m} (zeta y; zeta)_k / (zeta x; zeta)_k z^k."""
    ph = s.phase
    with mpmath.workprec(s.prec + 16):
        zeta = ph.zeta()
        total = mpmath.mpc(0)
        for k in ks if ks is not None else range(ph.m):
            den = pochhammer_finite(zeta * s.x, zeta, k)
            if abs(den) < mpmath.mpf(2) ** (-s.prec // 2):
                raise DomainError(f"(zeta x; zeta)_{k} vanishes for this sample")
            total += pochhammer_finite(zeta * s.y, zeta, k) / den * s.z**k
        return total


def kms_sides(s: KmsSample):
    ph = s.phase
    m = ph.m
    with mpmath.workprec(s.prec + 16):
        zeta = ph.zeta()
        x, y, z = s.x, s.y, s.z

        def D(v):
            return cyclic_quantum_dilog(ph, v)

        num = D(1) * D(y * zeta / x) * D(x / (y * z))
        den = D(1 / x) * D(y * zeta) * D(zeta / z)
        if abs(den) < mpmath.mpf(2) ** (-s.prec // 2):
            raise DomainError("degenerate sample: a D_zeta factor in the denominator vanishes")
        lhs = num / den
        # m(1-m)/2 is an integer, so the power is unambiguous
        rhs = (zeta * y) ** (m * (1 - m) // 2) * f_cyclic(s) ** m
        return lhs, rhs


def kms_check(s: KmsSample) -> dict:
    """Both sides of the KMS identity and |lhs/rhs - 1|.

    root_of_unity_order is set when lhs/rhs is close to a nontrivial root of
    unity of order dividing 24; it is reported, never corrected.
    """
    lhs, rhs = kms_sides(s)
    with mpmath.workprec(s.prec + 16):
        ratio = lhs / rhs
        residual = abs(ratio - 1)
        order = None
        tol = mpmath.mpf(2) ** (-s.prec // 2)
        if residual > tol:
            for j in (2, 3, 4, 6, 8, 12, 24):
                if abs(ratio**j - 1) < tol:
                    order = j
                    break
        return {"lhs": lhs, "rhs": rhs, "residual": residual, "root_of_unity_order": order}


def _bilateral_terms(x, y, z, q, tol, max_terms):
    """Partial sums of sum_k (qy;q)_k/(qx;q)_k z^k in each direction.

    Returns (sum, tail_bound); the tail bound uses the geometric ratio of the
    last two terms once that ratio has settled below 1.
    """
    total = mpmath.mpc(1)
    bound = mpmath.mpf(0)
    # k >= 0: A_{k+1}/A_k = (1 - q^{k+1} y)/(1 - q^{k+1} x) z
    term = mpmath.mpc(1)
    qk = mpmath.mpc(1)
    for _ in range(max_terms):
        qk *= q
        ratio = (1 - qk * y) / (1 - qk * x) * z
        term *= ratio
        total += term
        if abs(term) < tol * abs(total) and abs(ratio) < 1:
            bound += abs(term) * abs(ratio) / (1 - abs(ratio))
            break
    else:
        raise DomainError("positive half of the bilateral series did not converge")
    # k < 0: A_{k-1}/A_k = (1 - q^k x)/(1 - q^k y) / z
    term = mpmath.mpc(1)
    qk = mpmath.mpc(1)
    for _ in range(max_terms):
        ratio = (1 - qk * x) / (1 - qk * y) / z
        qk /= q
        term *= ratio
        total += term
        if abs(term) < tol * abs(total) and abs(ratio) < 1:
            bound += abs(term) * abs(ratio) / (1 - abs(ratio))
            break
    else:
        raise DomainError("negative half of the bilateral series did not converge")
    return total, bound


def ramanujan_1psi1_sides(x, y, z, q, prec: int = 192, max_terms: int = 100000):
    with mpmath.workprec(prec + 16):
        x, y, z, q = (mpmath.mpmathify(v) for v in (x, y, z, q))
        if not abs(q) < 1:
            raise DomainError("need |q| < 1")
        if not abs(x / y) < abs(z) < 1:
            raise DomainError("1psi1 needs |x/y| < |z| < 1")
        tol = mpmath.mpf(2) ** (-prec - 16)
        lhs, bound = _bilateral_terms(x, y, z, q, tol, max_terms)

        def P(v):
            # (v; q)_oo = (1 - v)(qv; q)_oo
            return (1 - v) * pochhammer_infinite(v, q)

        rhs = (P(q) * P(q * y * z) * P(1 / (y * z)) * P(x / y)) / (
            P(q * x) * P(1 / y) * P(z) * P(x / (y * z))
        )
        return lhs, rhs, bound


def ramanujan_1psi1_check(x, y, z, q, prec: int = 192, max_terms: int = 100000) -> dict:
    lhs, rhs, bound = ramanujan_1psi1_sides(x, y, z, q, prec, max_terms)
    with mpmath.workprec(prec + 16):
        return {"lhs": lhs, "rhs": rhs, "tail_bound": bound, "residual": abs(lhs / rhs - 1)}


def sample_1psi1(count: int, seed: int = 0, qabs=0.5):
    """Random (x, y, z, q) with |x/y| < |z| < 1."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        x = mpmath.mpc(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6))
        y = mpmath.mpc(rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9))
        z = mpmath.mpc(rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9))
        q = qabs * mpmath.expjpi(rng.uniform(-1, 1)) * rng.uniform(0.2, 1)
        if abs(y) < 0.2 or not (abs(x / y) + 0.1 < abs(z) < 0.9):
            continue
        out.append((x, y, z, q))
    return out


def tag1_ratio(x, phase: RootOfUnityPhase, eps, prec: int = 192):
    """(x; q)_oo^{-m} divided by D_zeta(x) (1 - x^m)^{-m/2} e^{Li2(x^m)/eps}, q = zeta e^{-eps/m}."""
    with mpmath.workprec(prec + 16):
        x, eps = mpmath.mpmathify(x), mpmath.mpmathify(eps)
        m = phase.m
        X = x**m
        if mpmath.im(X) == 0 and mpmath.re(X) >= 1:
            raise DomainError("x^m must avoid [1, oo)")
        q = phase.zeta() * mpmath.exp(-eps / m)
        lhs = ((1 - x) * pochhammer_infinite(x, q)) ** (-m)
        rhs = cyclic_quantum_dilog(phase, x) * mpmath.exp(-m * mpmath.log(1 - X) / 2 + li2(X) / eps)
        return lhs / rhs


def tag1_asymptotic_check(x, phase: RootOfUnityPhase, eps_list, prec: int = 192) -> dict:
    """Errors |ratio - 1| over eps_list and the empirical orders between consecutive eps."""
    if len(eps_list) < 2:
        raise ValidationError("need at least two eps values")
    errs = [abs(tag1_ratio(x, phase, e, prec) - 1) for e in eps_list]
    orders = [
        mpmath.log(errs[i] / errs[i + 1]) / mpmath.log(mpmath.mpf(eps_list[i]) / eps_list[i + 1])
        for i in range(len(errs) - 1)
    ]
    return {"errors": errs, "orders": orders}
