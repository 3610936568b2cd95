import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from nahmasym.errors import DomainError, ValidationError
from nahmasym.exact import QuadraticFunction, RootOfUnityPhase, expi
from nahmasym.nahm import build_solution, c_of_Q
from nahmasym.asymptotics import (
    chi_exponent,
    dedekind_sum,
    i_kq,
    lemma1_closed_terms,
    lemma1_lhs_direct,
    nz_to_nahm,
    prediction,
    psi_series,
    s_series,
    summand_asymptotics,
)
from nahmasym.qseries import eval_radial, twisted_nahm_eval

F = Fraction
mpf = mpmath.mpf
ONE = RootOfUnityPhase(0, 1)
THIRD = RootOfUnityPhase(1, 3)


def quad(A, B=None, C=0):
    return QuadraticFunction(A, B or [0] * len(A), C)


def lemma1_error(w, phase, nu, eps, R):
    with mpmath.workprec(320):
        lhs = lemma1_lhs_direct(w, phase, nu, eps)
        rhs = lemma1_closed_terms(w, phase, nu, eps) + psi_series(w, phase, R)(nu, eps)
        return abs(lhs - rhs)


def test_psi_structure():
    with mpmath.workprec(128):
        psi = psi_series(mpf("0.3"), THIRD, 9)
        assert min(r for r, _ in psi.coeffs) == 2
        assert all(n <= r for r, n in psi.coeffs)
        assert psi(0.5, 0) == 0
    with pytest.raises(DomainError):
        psi_series(1.1, ONE, 4)
    with pytest.raises(ValidationError):
        psi_series(0.3, ONE, 1)


def test_lemma1_lhs_vanishes_at_zero_argument():
    assert lemma1_lhs_direct(0, THIRD, mpf("0.3"), 2) == 0


def test_lemma1_shifted_argument():
    # the nu-shift is the same product with w replaced by w e^{-nu eps/m}
    with mpmath.workprec(200):
        w, nu, eps = mpf("0.4"), mpf("0.7"), mpf("0.1")
        a = lemma1_lhs_direct(w, THIRD, nu, eps)
        b = lemma1_lhs_direct(w * mpmath.exp(-nu * eps / 3), THIRD, 0, eps)
        assert abs(a - b) < mpf(2) ** -180


@pytest.mark.parametrize(
    "m,w,nu,epss",
    [
        (1, "0.3", "0", ("0.1", "0.05", "0.025")),
        (3, "0.4", "0.7", ("0.1", "0.05", "0.025")),
        # larger |w| and m: the order at eps = 0.1 is still 7.77, so start one halving later
        (5, "0.5+0.2j", "-0.4", ("0.05", "0.025", "0.0125")),
    ],
)
def test_lemma1_empirical_order(m, w, nu, epss):
    ph = RootOfUnityPhase(1 if m > 1 else 0, m)
    R = 8
    w, nu = mpmath.mpmathify(complex(w)), mpf(nu)
    errs = [lemma1_error(w, ph, nu, mpf(e), R) for e in epss]
    orders = [mpmath.log(a / b, 2) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= R - 0.2


def test_lemma1_closed_terms_high_order():
    assert lemma1_error(mpf("0.3"), ONE, 0, mpf("0.01"), 12) < mpf(10) ** -25


def test_summand_m1():
    Q = quad([[2]])
    sol = build_solution([[2]], 1, 256)
    eps = mpf("0.02")
    n = (int(mpmath.nint(mpmath.log(1 / sol.z[0]) / eps)),)
    errs = []
    for R in (4, 8):
        r = summand_asymptotics(Q, ONE, (0,), n, eps, R=R, sol=sol)
        errs.append(abs(r["lhs"] / r["rhs"] - 1))
    assert errs[1] < 1e-3 and errs[1] < errs[0]
    # away from the saddle the Gaussian part is exercised too
    r = summand_asymptotics(Q, ONE, (0,), (n[0] + 9,), eps, R=8, sol=sol)
    assert abs(r["lhs"] / r["rhs"] - 1) < 1e-3


def test_summand_m3_theorem_form():
    Q = quad([[2]], [F(1, 2)])
    sol = build_solution([[2]], 3, 256)
    eps = mpf("0.05")
    centre = int(mpmath.nint(mpmath.log(1 / sol.z[0]) / eps))
    n = centre - (centre - 1) % 3
    errs = []
    for R in (4, 8):
        r = summand_asymptotics(Q, THIRD, (1,), (n,), eps, R=R, sol=sol)
        errs.append(abs(r["lhs"] / r["rhs_theorem"] - 1))
    assert errs[1] < 1e-3 and errs[1] < errs[0]
    with pytest.raises(ValidationError):
        summand_asymptotics(Q, THIRD, (1,), (n + 1,), eps, sol=sol)


def test_summand_block_factorisation():
    A = [[2, 0], [0, 3]]
    Q = quad(A, [F(1, 2), -1])
    eps = mpf("0.05")
    n = (11, 8)
    with mpmath.workprec(256):
        lhs = summand_asymptotics(Q, ONE, (0, 0), n, eps)["lhs"]
        a = summand_asymptotics(quad([[2]], [F(1, 2)]), ONE, (0,), (11,), eps)["lhs"]
        b = summand_asymptotics(quad([[3]], [-1]), ONE, (0,), (8,), eps)["lhs"]
        assert abs(lhs - a * b) < mpf(2) ** -230 * abs(lhs)


@pytest.mark.parametrize(
    "Q,phase,k",
    [
        (quad([[2]]), ONE, (0,)),
        (quad([[2]], [F(1, 3)], F(1, 5)), THIRD, (2,)),
        (quad([[3, 1], [1, 2]], [1, 0]), RootOfUnityPhase(2, 5), (1, 4)),
    ],
)
def test_i_kq_constant_term_and_parity(Q, phase, k):
    sol = build_solution(Q.A, phase.m, 192)
    I = i_kq(Q, phase, k, sol, 2)
    with mpmath.workprec(192):
        assert abs(I[0] - 1) < mpf(2) ** -180
        assert I.max_half_integer_coefficient() < mpf(2) ** -96


def _closed(c):
    # exp(-c eps) through eps^2
    return [1, -c, c * c / 2]


@pytest.mark.parametrize("A,c", [([[1]], F(1, 48)), ([[2]], F(1, 60))])
def test_m1_series_is_an_exponential(A, c):
    # (-q^(1/2); q)_oo and q^(-1/60) G(q) are modular, so S(eps) = exp(-c eps) exactly
    sol = build_solution(A, 1, 256)
    S = s_series(quad(A), ONE, sol, 2)
    with mpmath.workprec(256):
        for j, v in enumerate(_closed(mpf(c.numerator) / c.denominator)):
            assert abs(S[j] - v) < mpf(10) ** -60


def test_a1_coefficient_matches_richardson():
    # F_(1) at q = e^-eps is the product (-q^(1/2); q)_oo, summed here term by term
    Q = quad([[1]])
    sol = build_solution([[1]], 1, 256)
    S = s_series(Q, ONE, sol, 2)
    with mpmath.workprec(256):
        epss = [mpf("0.1"), mpf("0.05"), mpf("0.025")]
        g = []
        for e in epss:
            direct = eval_radial(Q, ONE, e)
            r = direct * mpmath.exp(-sol.lam / e) / c_of_Q(Q, sol)
            g.append((r - 1) / e)
        r1 = [2 * b - a for a, b in zip(g, g[1:])]
        c1 = (4 * r1[1] - r1[0]) / 3
        assert abs(mpmath.re(c1) - S[1]) < 1e-7


def test_s_series_precision_stability():
    a = s_series(quad([[2]]), THIRD, build_solution([[2]], 3, 128), 2)
    b = s_series(quad([[2]]), THIRD, build_solution([[2]], 3, 256), 2)
    with mpmath.workprec(256):
        assert abs(a[0] - b[0]) < mpf(10) ** -30 * abs(b[0])


def test_block_multiplicativity_m1():
    A1, B1, C1 = [[2]], [F(1, 2)], F(1, 7)
    A2, B2, C2 = [[3, 1], [1, 2]], [0, -1], F(-1, 3)
    A = [[2, 0, 0], [0, 3, 1], [0, 1, 2]]
    p1 = prediction(quad(A1, B1, C1), ONE, 2, 192)
    p2 = prediction(quad(A2, B2, C2), ONE, 2, 192)
    p = prediction(quad(A, B1 + B2, C1 + C2), ONE, 2, 192)
    with mpmath.workprec(192):
        assert abs(p.lam - p1.lam - p2.lam) < mpf(2) ** -180
        assert abs(p.constant - p1.constant * p2.constant) < mpf(2) ** -170
        prod = p1.s_series * p2.s_series
        for j in range(3):
            assert abs(p.s_series[j] - prod[j]) < mpf(2) ** -160


def _rel_errors(Q, phase, K, epss, prec=256, **kw):
    pred = prediction(Q, phase, K, prec, **kw)
    out = []
    with mpmath.workprec(prec):
        for e in epss:
            e = mpf(e)
            direct = eval_radial(Q, phase, e, prec) * mpmath.exp(-pred.lam / (phase.m * e))
            out.append(abs(direct / pred.normalized(e) - 1))
    return out


def test_prediction_ratio_test_m1():
    errs = _rel_errors(quad([[2]], [1], F(11, 60)), ONE, 2, ["0.2", "0.1", "0.05"])
    orders = [mpmath.log(a / b, 2) for a, b in zip(errs, errs[1:])]
    assert min(orders) > 2.5


def test_variants_theorem_matches_proposition_does_not():
    Q = quad([[2]])
    eps = ["0.15", "0.075"]
    thm = _rel_errors(Q, THIRD, 2, eps, variant="theorem")
    prop = _rel_errors(Q, THIRD, 2, eps, variant="proposition")
    assert thm[1] < 1e-6
    assert prop[1] > 1e-3


def test_variants_agree_at_m1():
    sol = build_solution([[3, 1], [1, 2]], 1, 192)
    Q = quad([[3, 1], [1, 2]], [1, F(1, 2)])
    a = s_series(Q, ONE, sol, 2, "theorem")
    b = s_series(Q, ONE, sol, 2, "proposition")
    with mpmath.workprec(192):
        assert all(abs(a[j] - b[j]) < mpf(2) ** -170 for j in range(3))


def test_eta_correction_is_needed():
    Q = quad([[2]])
    with_eta = _rel_errors(Q, ONE, 2, ["0.05"])[0]
    without = _rel_errors(Q, ONE, 2, ["0.05"], eta_correction=False)[0]
    assert with_eta < 1e-5 < without


def test_dedekind_sum_values_and_reciprocity():
    assert dedekind_sum(1, 3) == F(1, 18)
    assert dedekind_sum(2, 5) == 0
    assert dedekind_sum(1, 1) == 0
    for a in range(1, 12):
        for m in range(1, 12):
            if math.gcd(a, m) == 1:
                lhs = dedekind_sum(a, m) + dedekind_sum(m, a)
                assert lhs == F(-1, 4) + (F(a, m) + F(m, a) + F(1, a * m)) / 12


@pytest.mark.parametrize("m", [3, 5, 7, 9, 11])
def test_chi_conventions_agree_for_a1(m):
    ph = RootOfUnityPhase(1, m)
    assert chi_exponent(ph, "printed") == chi_exponent(ph, "dedekind")


def test_chi_dedekind_needed_away_from_a1():
    Q = quad([[2]])
    ph = RootOfUnityPhase(2, 3)
    good = _rel_errors(Q, ph, 2, ["0.075"])[0]
    bad = _rel_errors(Q, ph, 2, ["0.075"], chi_convention="printed")[0]
    assert good < 1e-6
    # the printed factor is off by a twelfth root of unity
    assert abs(bad - abs(expi(F(1, 12)) - 1)) < 1e-6
    with pytest.raises(ValidationError):
        chi_exponent(ph, "other")


def test_hypotheses_enforced():
    with pytest.raises(DomainError):
        prediction(quad([[2]]), RootOfUnityPhase(1, 2), 1)
    with pytest.raises(DomainError):
        prediction(quad([[F(2, 3)]]), THIRD, 1)


def test_nz_examples():
    d = nz_to_nahm([[0, 0], [0, 0]], [[1, 0], [0, 1]], [1, 1])
    assert d.A == ((1, 0), (0, 1)) and d.B == (0, 0) and d.C == 0
    S = [[2, -1], [-1, 3]]
    d = nz_to_nahm(S, [[1, 0], [0, 1]], [1, 1], 3)
    assert d.A == ((-1, 1), (1, -2)) and d.C == 3
    f = nz_to_nahm([[0]], [[1]], [0], [1])
    assert f.flattening == (1,) and f.B == (F(1, 2),)
    with pytest.raises(ValidationError):
        nz_to_nahm([[0, 1], [0, 0]], [[1, 0], [0, 1]], [1, 1])


@st.composite
def nz_data(draw):
    N = draw(st.integers(1, 3))
    small = st.integers(-3, 3)
    S = [[0] * N for _ in range(N)]
    for i in range(N):
        for j in range(i, N):
            S[i][j] = S[j][i] = draw(small)
    # unimodular U as a product of elementary row operations
    U = [[int(i == j) for j in range(N)] for i in range(N)]
    for _ in range(draw(st.integers(0, 4))):
        if N == 1:
            U = [[-U[0][0]]]
            continue
        i, j = draw(st.integers(0, N - 1)), draw(st.integers(0, N - 1))
        if i != j:
            c = draw(small)
            U[i] = [a + c * b for a, b in zip(U[i], U[j])]
    US = [[sum(U[i][l] * S[l][j] for l in range(N)) for j in range(N)] for i in range(N)]
    eta = [draw(small) for _ in range(N)]
    return US, U, eta, S


@settings(max_examples=30)
@given(nz_data())
def test_nz_symmetry(data):
    bbA, bbB, eta, S = data
    d = nz_to_nahm(bbA, bbB, eta)
    N = len(S)
    assert all(d.A[i][j] == d.A[j][i] for i in range(N) for j in range(N))
    assert all(d.A[i][j] == int(i == j) - S[i][j] for i in range(N) for j in range(N))


def test_twisted_evaluation():
    with mpmath.workprec(200):
        q = mpf("0.4")
        plain = twisted_nahm_eval(quad([[2]]), q, 192)
        integer_twist = twisted_nahm_eval(quad([[2]], [1]), q, 192)
        # B also enters Q; compensate with q^n in the untwisted sum
        shifted = mpmath.nsum(lambda n: q ** (n * n + n) / mpmath.qp(q, q, n), [0, mpmath.inf])
        assert abs(integer_twist - shifted) < mpf(2) ** -180
        half = twisted_nahm_eval(quad([[2]], [F(1, 2)]), q, 192)
        alt = mpmath.nsum(lambda n: (-1) ** n * q ** (n * n + n / 2) / mpmath.qp(q, q, n), [0, mpmath.inf])
        assert abs(half - alt) < mpf(2) ** -180
        assert abs(plain - mpmath.nsum(lambda n: q ** (n * n) / mpmath.qp(q, q, n), [0, mpmath.inf])) < mpf(2) ** -180
        with pytest.raises(DomainError):
            twisted_nahm_eval(quad([[2]]), 1)
