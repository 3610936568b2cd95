"""Radial asymptotics of Nahm sums at roots of unity.

The chain is: psi-expansion of log(q w e^{-nu eps/m}; q)_oo, its substitution
nu = x eps^{-1/2}, formal Gaussian integration against A~/m, the k-sum over
(Z/mZ)^N, and finally the prefactor exp(Lambda/(m eps)) chi^N m^{-N/2} c(Q) G(Q, alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .errors import DomainError, ValidationError
from .exact import (
    QuadraticFunction,
    ResidueVector,
    RootOfUnityPhase,
    all_residues,
    denominator,
    expi,
    gauss_sum,
    inverse_rational,
    to_fraction,
    zeta_power_of_Q,
)
from .nahm import NahmSolution, _mpf, build_solution, c_of_Q
from .series import EpsSeries, XPolySeries, formal_gaussian_integrate, series_exp
from .special import (
    bernoulli_poly_affine,
    cyclic_quantum_dilog_root,
    li2,
    log_cyclic_quantum_dilog,
    log_pochhammer_infinite,
    pochhammer_finite,
    pochhammer_shifted,
    polylog,
)


@dataclass(frozen=True)
class PsiExpansion:
    """psi_{w,zeta}(nu, eps) ~ sum_{r=2}^{R} sum_n coeffs[r, n] nu^n eps^(r-1)."""

    w: object
    phase: RootOfUnityPhase
    R: int
    coeffs: dict = field(repr=False)

    def __call__(self, nu, eps):
        nu, eps = mpmath.mpmathify(nu), mpmath.mpmathify(eps)
        return mpmath.fsum(c * nu**n * eps ** (r - 1) for (r, n), c in sorted(self.coeffs.items()))

    def nu_polynomial(self, order: int) -> dict:
        """nu-degree -> EpsSeries (integer eps powers) truncated at eps^order."""
        out: dict[int, dict] = {}
        for (r, n), c in self.coeffs.items():
            out.setdefault(n, {})[2 * (r - 1)] = c
        return {n: EpsSeries(cs, 2 * order) for n, cs in sorted(out.items())}

    def in_x(self, order) -> XPolySeries:
        """Substitute nu = x eps^{-1/2}; keep eps powers up to `order`."""
        top = int(Fraction(order) * 2)
        terms: dict[tuple, dict] = {}
        for (r, n), c in self.coeffs.items():
            j = 2 * (r - 1) - n
            if j < 0:
                raise DomainError("negative eps power after substitution")
            if j <= top:
                terms.setdefault((n,), {})[j] = c
        return XPolySeries({i: EpsSeries(cs, top) for i, cs in terms.items()}, 1, top)


def psi_series(w, phase: RootOfUnityPhase, R: int, prec: int | None = None) -> PsiExpansion:
    """Coefficients of -sum_{r=2}^R sum_t (B_r(1-(t+nu)/m) - [r=2] nu^2/m^2) Li_{2-r}(zeta^t w) eps^(r-1)/r!."""
    if R < 2:
        raise ValidationError("psi truncation R must be >= 2")
    ctx = mpmath.workprec(prec) if prec else mpmath.workprec(mpmath.mp.prec)
    with ctx:
        w = mpmath.mpmathify(w)
        if not abs(w) < 1:
            raise DomainError("psi_series needs |w| < 1")
        m = phase.m
        roots = [phase.zeta_power(t) * w for t in range(1, m + 1)]
        coeffs = {}
        for r in range(2, R + 1):
            lis = [polylog(2 - r, x) for x in roots]
            poly = [mpmath.mpc(0)] * (r + 1)
            for t, li in zip(range(1, m + 1), lis):
                bp = bernoulli_poly_affine(r, 1 - Fraction(t, m), Fraction(-1, m))
                if r == 2:
                    bp[2] -= Fraction(1, m * m)
                for n, c in enumerate(bp):
                    if c:
                        poly[n] += _mpf(c) * li
            scale = -1 / mpmath.factorial(r)
            for n, c in enumerate(poly):
                if c != 0:
                    coeffs[(r, n)] = c * scale
        return PsiExpansion(w=w, phase=phase, R=R, coeffs=coeffs)


def _q(phase: RootOfUnityPhase, eps):
    return phase.zeta() * mpmath.exp(-mpmath.mpmathify(eps) / phase.m)


def lemma1_lhs_direct(w, phase: RootOfUnityPhase, nu, eps, prec: int | None = None):
    """log(q w e^{-nu eps/m}; q)_oo at q = zeta e^{-eps/m}, as a sum of principal logs."""
    ctx = mpmath.workprec(prec) if prec else mpmath.workprec(mpmath.mp.prec)
    with ctx:
        eps = mpmath.mpmathify(eps)
        x = mpmath.mpmathify(w) * mpmath.exp(-mpmath.mpmathify(nu) * eps / phase.m)
        return log_pochhammer_infinite(x, _q(phase, eps))


def lemma1_closed_terms(w, phase: RootOfUnityPhase, nu, eps, prec: int | None = None):
    """Everything on the right of the Lemma-1 expansion except psi."""
    ctx = mpmath.workprec(prec) if prec else mpmath.workprec(mpmath.mp.prec)
    with ctx:
        m = phase.m
        w, nu, eps = mpmath.mpmathify(w), mpmath.mpmathify(nu), mpmath.mpmathify(eps)
        z = w**m
        return (
            -li2(z) / (m * eps)
            - (nu / m - mpmath.mpf(1) / 2) * mpmath.log(1 - z)
            - eps * nu**2 / (2 * m) * z / (1 - z)
            - log_cyclic_quantum_dilog(phase, w) / m
            - mpmath.log(1 - w)
        )


def _check_theorem_hypotheses(Q: QuadraticFunction, phase: RootOfUnityPhase):
    m = phase.m
    if m % 2 == 0:
        raise DomainError(f"even modulus m={m} is not covered by the radial asymptotic formula")
    d = denominator(Q.with_C(0))
    if math.gcd(m, d) != 1:
        raise DomainError(f"m={m} is not coprime to the denominator {d} of Q")


def i_kq(
    Q: QuadraticFunction,
    phase: RootOfUnityPhase,
    k,
    sol: NahmSolution,
    K: int,
    eta_correction: bool = True,
) -> EpsSeries:
    """Formal Gaussian integral I_{Q,zeta}(k, eps) through eps^K.

    With eta_correction the integrand carries exp(-N eps / (24 m)), the eps-term
    of log 1/(q;q)_oo that the bare formula leaves out.
    """
    if sol.m != phase.m:
        raise ValidationError(f"solution built for m={sol.m}, phase has m={phase.m}")
    k = k.k if isinstance(k, ResidueVector) else tuple(k)
    m, N = phase.m, Q.N
    top = 2 * K
    R = 2 * K + 2
    with mpmath.workprec(sol.prec + 16):
        total = XPolySeries.one(N, top)
        for i in range(N):
            w = phase.zeta_power(k[i]) * sol.theta[i]
            g = psi_series(w, phase, R).in_x(K)
            # e^{-eps B.n/m} with n = x eps^{-1/2} + log(1/z)/eps gives -B.x eps^{1/2}/m
            lin = -_mpf(Q.B[i]) / m
            if lin != 0:
                g = g + XPolySeries({(1,): EpsSeries({1: lin}, top)}, 1, top)
            total = total * series_exp(g).embed(N, i)
        const = _mpf(Q.C) / m
        if eta_correction:
            const += mpmath.mpf(N) / (24 * m)
        total = total * series_exp(EpsSeries({2: -const}, top))
        M = [[x / m for x in row] for row in sol.a_tilde]
        return formal_gaussian_integrate(M, total, sol.prec)


def s_series(
    Q: QuadraticFunction,
    phase: RootOfUnityPhase,
    sol: NahmSolution,
    K: int,
    variant: str = "theorem",
    eta_correction: bool = True,
) -> EpsSeries:
    """S_{Q,zeta}(eps) through eps^K.

    variant="theorem" uses D_zeta(zeta theta_i) and (zeta theta_i; zeta)_{k_i};
    variant="proposition" uses D_zeta(theta_i) and (theta_i; zeta)_{k_i}.
    Phases zeta^{Q(k) mod m} are taken with C = 0; e(C alpha) belongs to the prefactor.
    """
    _check_theorem_hypotheses(Q, phase)
    if variant not in ("theorem", "proposition"):
        raise ValidationError(f"unknown variant {variant!r}")
    Q0 = Q.with_C(0)
    m = phase.m
    with mpmath.workprec(sol.prec + 16):
        zeta = phase.zeta()
        shift = zeta if variant == "theorem" else 1
        pref = mpmath.mpc(1)
        for th in sol.theta:
            pref /= cyclic_quantum_dilog_root(phase, shift * th)
        out = None
        for res in all_residues(Q.N, m):
            k = res.k
            coef = expi(zeta_power_of_Q(Q0, k, phase))
            for th, ak, ki in zip(sol.theta, Q0.Ak(k), k):
                poch = pochhammer_shifted(th, zeta, ki) if variant == "theorem" else pochhammer_finite(th, zeta, ki)
                coef *= th ** _mpf(ak) / poch
            term = i_kq(Q, phase, k, sol, K, eta_correction) * coef
            out = term if out is None else out + term
        return out * pref


def dedekind_sum(a: int, m: int) -> Fraction:
    """s(a, m) = sum_{r=1}^{m-1} ((r/m)) ((a r/m))."""

    def saw(x: Fraction) -> Fraction:
        if x.denominator == 1:
            return Fraction(0)
        return x - math.floor(x) - Fraction(1, 2)

    return sum((saw(Fraction(r, m)) * saw(Fraction(a * r, m)) for r in range(1, m)), Fraction(0))


def chi_exponent(phase: RootOfUnityPhase, convention: str = "dedekind") -> Fraction:
    """Angle of chi as an exact rational.

    "printed": binom(m-1, 2) alpha / 12, which only depends on alpha through
    its representative in [0, 1). "dedekind": s(a, m)/2, the phase of the
    eta multiplier; the two agree for a = 1.
    """
    if convention == "printed":
        return Fraction(math.comb(phase.m - 1, 2)) * phase.alpha / 12
    if convention == "dedekind":
        return dedekind_sum(phase.a, phase.m) / 2
    raise ValidationError(f"unknown chi convention {convention!r}")


def chi_factor(phase: RootOfUnityPhase, convention: str = "dedekind"):
    return expi(chi_exponent(phase, convention))


@dataclass
class AsymptoticPrediction:
    Q: QuadraticFunction
    phase: RootOfUnityPhase
    lam: object
    chi: object
    gauss: object
    cQ: object
    c_phase: object
    s_series: EpsSeries
    K: int
    prec: int

    @property
    def constant(self):
        """chi^N m^{-N/2} c(Q) G(Q, alpha) e(C alpha)."""
        N, m = self.Q.N, self.phase.m
        return self.chi**N / mpmath.mpf(m) ** (mpmath.mpf(N) / 2) * self.cQ * self.gauss * self.c_phase

    def normalized(self, eps):
        """Prediction for exp(-Lambda/(m eps)) f_Q(alpha + i eps/(2 pi m))."""
        with mpmath.workprec(self.prec + 16):
            return self.constant * self.s_series(eps)

    def value(self, eps):
        with mpmath.workprec(self.prec + 16):
            eps = mpmath.mpmathify(eps)
            return mpmath.exp(self.lam / (self.phase.m * eps)) * self.normalized(eps)

    def growth(self, eps):
        return mpmath.exp(self.lam / (self.phase.m * mpmath.mpmathify(eps)))


def prediction(
    Q: QuadraticFunction,
    phase: RootOfUnityPhase,
    K: int,
    prec: int = 256,
    sol: NahmSolution | None = None,
    variant: str = "theorem",
    eta_correction: bool = True,
    chi_convention: str = "dedekind",
) -> AsymptoticPrediction:
    _check_theorem_hypotheses(Q, phase)
    sol = sol or build_solution(Q.A, phase.m, prec)
    if sol.m != phase.m:
        raise ValidationError("solution modulus does not match the phase")
    with mpmath.workprec(sol.prec + 16):
        S = s_series(Q, phase, sol, K, variant, eta_correction)
        return AsymptoticPrediction(
            Q=Q,
            phase=phase,
            lam=sol.lam,
            chi=chi_factor(phase, chi_convention),
            gauss=gauss_sum(Q.with_C(0), phase, sol.prec + 16),
            cQ=c_of_Q(Q, sol),
            c_phase=expi(Q.C * phase.alpha),
            s_series=S,
            K=K,
            prec=sol.prec,
        )


def predict_radial(Q, phase, sol, eps, K, **kw):
    return prediction(Q, phase, K, sol.prec, sol, **kw).value(eps)


def summand_asymptotics(
    Q: QuadraticFunction,
    phase: RootOfUnityPhase,
    k,
    n,
    eps,
    prec: int = 256,
    R: int = 8,
    sol: NahmSolution | None = None,
) -> dict:
    """Direct summand exp(-eps Q(n)/m) / prod (q)_{n_i} against its asymptotic form.

    Returns lhs and two right-hand sides: "theorem" (zeta-shifted D and Pochhammer
    with the extra (1 - z)^{-1/m}) and "proposition" (unshifted), each with the
    eta-function constant of 1/(q;q)_oo at the root of unity evaluated exactly.
    """
    k = k.k if isinstance(k, ResidueVector) else tuple(k)
    n = tuple(int(x) for x in n)
    m = phase.m
    if any((ni - ki) % m for ni, ki in zip(n, k)) or min(n) < 0:
        raise ValidationError("need n >= 0 with n = k mod m")
    sol = sol or build_solution(Q.A, m, prec)
    with mpmath.workprec(prec + 32):
        eps = mpmath.mpmathify(eps)
        q = _q(phase, eps)
        lhs = mpmath.exp(-eps * _mpf(Q(n)) / m)
        for ni in n:
            lhs /= pochhammer_finite(q, q, ni)
        x = [mpmath.sqrt(eps) * (ni - mpmath.log(1 / zi) / eps) for ni, zi in zip(n, sol.z)]
        # quadratic + linear + psi part, shared by both variants
        core = mpmath.mpf(0)
        for i in range(Q.N):
            for j in range(Q.N):
                core -= x[i] * sol.a_tilde[i][j] * x[j] / (2 * m)
            core -= _mpf(Q.B[i]) * x[i] * mpmath.sqrt(eps) / m
            w = phase.zeta_power(k[i]) * sol.theta[i]
            core += psi_series(w, phase, R)(x[i] / mpmath.sqrt(eps), eps)
        core -= _mpf(Q.C) * eps / m
        # 1/(q;q)_oo is evaluated directly: its root-of-unity constant is not part of the comparison
        inv_eta = 1 / mpmath.exp(log_pochhammer_infinite(1, q))
        common = mpmath.exp(core) * inv_eta**Q.N
        base = mpmath.mpf(1)
        for i in range(Q.N):
            zi, th = sol.z[i], sol.theta[i]
            base *= th ** _mpf(Q.B[i]) * mpmath.sqrt(1 - zi)
            base *= mpmath.exp(li2(zi) / (m * eps)) ** -1 * mpmath.exp(-mpmath.log(zi) * mpmath.log(1 - zi) / (2 * m * eps))
        ak = Q.Ak(k)
        zeta = phase.zeta()
        thm = base
        prop = base
        for i in range(Q.N):
            th, zi = sol.theta[i], sol.z[i]
            thm *= th ** _mpf(ak[i]) * (1 - zi) ** (-mpmath.mpf(1) / m)
            thm /= cyclic_quantum_dilog_root(phase, zeta * th) * pochhammer_shifted(th, zeta, k[i])
            prop *= th ** _mpf(ak[i]) * (1 - zi) ** (-mpmath.mpf(1) / m)
            prop /= cyclic_quantum_dilog_root(phase, th) * pochhammer_finite(th, zeta, k[i])
        rhs = thm * common
        return {"lhs": lhs, "rhs": rhs, "rhs_theorem": rhs, "rhs_proposition": prop * common}


@dataclass(frozen=True)
class TwistedNahmDatum:
    """Nahm data (A, B, C) from Neumann-Zagier data; B doubles as the twist e(B.n)."""

    A: tuple
    B: tuple
    C: Fraction = Fraction(0)
    flattening: tuple = ()

    def quadratic(self) -> QuadraticFunction:
        return QuadraticFunction(self.A, self.B, self.C)


def nz_to_nahm(bbA, bbB, eta, f=0) -> TwistedNahmDatum:
    """A = I - bbB^{-1} bbA, B = (-bbB^{-1} eta + 1)/2, C = f."""
    N = len(bbA)
    bbA = [[to_fraction(x) for x in row] for row in bbA]
    bbB = [[to_fraction(x) for x in row] for row in bbB]
    eta = [to_fraction(x) for x in eta]
    Binv = inverse_rational(bbB)
    BA = [[sum(Binv[i][l] * bbA[l][j] for l in range(N)) for j in range(N)] for i in range(N)]
    A = tuple(tuple(Fraction(int(i == j)) - BA[i][j] for j in range(N)) for i in range(N))
    if any(A[i][j] != A[j][i] for i in range(N) for j in range(N)):
        raise ValidationError("NZ data do not give a symmetric A (is bbA bbB^t symmetric?)")
    Be = [sum(Binv[i][j] * eta[j] for j in range(N)) for i in range(N)]
    B = tuple((1 - x) / 2 for x in Be)
    if isinstance(f, (list, tuple)):
        return TwistedNahmDatum(A, B, Fraction(0), tuple(to_fraction(x) for x in f))
    return TwistedNahmDatum(A, B, to_fraction(f))
