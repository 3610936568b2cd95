import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from nahmasym.errors import DomainError, ValidationError
from nahmasym.exact import RootOfUnityPhase
from nahmasym.asymptotics import lemma1_closed_terms
from nahmasym.kms import (
    KmsSample,
    f_cyclic,
    kms_check,
    ramanujan_1psi1_check,
    sample_1psi1,
    sample_kms,
    tag1_asymptotic_check,
    tag1_ratio,
)
from nahmasym.special import cyclic_quantum_dilog, li2

mpf = mpmath.mpf
X0, Y0 = mpmath.mpc("0.3", "0.2"), mpmath.mpc("0.5", "-0.1")


def test_sample_invariants():
    s = KmsSample.build(X0, Y0, RootOfUnityPhase(1, 3))
    with mpmath.workprec(200):
        assert s.max_root_error() < mpf(2) ** -184
        assert abs(s.Z * (1 - s.Y) - (1 - s.X)) < mpf(2) ** -190
    with pytest.raises(DomainError):
        KmsSample.build(1, Y0, RootOfUnityPhase(1, 3))


def test_f_cyclic_trivial_cases():
    s = KmsSample.build(X0, Y0, RootOfUnityPhase(0, 1))
    assert f_cyclic(s) == 1
    ph = RootOfUnityPhase(2, 5)
    s = KmsSample.build(X0, X0, ph)
    with mpmath.workprec(200):
        z = s.z
        assert abs(f_cyclic(s) - mpmath.fsum(z**k for k in range(5))) < mpf(2) ** -180


@pytest.mark.parametrize("am", [(1, 3), (2, 5), (3, 7)])
def test_f_cyclic_is_periodic(am):
    ph = RootOfUnityPhase(*am)
    s = KmsSample.build(X0, Y0, ph)
    m = ph.m
    with mpmath.workprec(200):
        a = f_cyclic(s)
        b = f_cyclic(s, range(m, 2 * m))
        assert abs(a - b) < mpf(2) ** -170 * abs(a)


def test_kms_m1_is_trivial():
    r = kms_check(KmsSample.build(X0, Y0, RootOfUnityPhase(0, 1)))
    assert r["lhs"] == 1 and r["rhs"] == 1 and r["residual"] == 0


def test_kms_example_point():
    r = kms_check(KmsSample.build(X0, Y0, RootOfUnityPhase(1, 3), 192))
    assert r["residual"] < mpf(10) ** -30
    assert r["root_of_unity_order"] is None


@pytest.mark.parametrize("shifts", [(1, 0, 0), (0, 2, 1), (2, 2, 2)])
def test_kms_root_covariance(shifts):
    s = KmsSample.build(X0, Y0, RootOfUnityPhase(1, 5), 192, shifts)
    assert kms_check(s)["residual"] < mpf(10) ** -30


@pytest.mark.parametrize("am", [(2, 3), (2, 5), (3, 7)])
def test_kms_other_primitive_roots(am):
    for s in sample_kms(RootOfUnityPhase(*am), 5, seed=11):
        assert kms_check(s)["residual"] < mpf(10) ** -25


def test_sampler_is_deterministic_and_in_range():
    a = sample_kms(RootOfUnityPhase(1, 3), 6, seed=4)
    b = sample_kms(RootOfUnityPhase(1, 3), 6, seed=4)
    assert [s.X for s in a] == [s.X for s in b]
    assert all(abs(s.X) < 0.7 and abs(1 - s.X) > 0.1 for s in a)


def test_1psi1_generic_point():
    x, y, z, q = mpmath.mpc("0.2", "0.1"), mpmath.mpc("0.7", "-0.3"), mpmath.mpc("0.6", "0.2"), mpmath.mpc("0.3", "0.4")
    r = ramanujan_1psi1_check(x, y, z, q, 192)
    assert r["residual"] < mpf(10) ** -25
    assert r["tail_bound"] < mpf(10) ** -50


def test_1psi1_near_diagonal_and_x_zero():
    # x = y leaves no z with |x/y| < |z| < 1; approach the diagonal instead
    y = mpmath.mpc("0.6", "0.1")
    r = ramanujan_1psi1_check(y * mpf("0.9"), y, mpf("0.95"), mpf("0.5"), 192)
    assert r["residual"] < mpf(10) ** -25
    r = ramanujan_1psi1_check(0, y, mpmath.mpc("0.3", "0.5"), mpmath.mpc("0.2", "-0.6"), 192)
    assert r["residual"] < mpf(10) ** -25


def test_1psi1_small_q():
    x, y, z = mpmath.mpc("0.2", "0.1"), mpmath.mpc("0.7", "-0.3"), mpmath.mpc("0.6", "0.2")
    assert ramanujan_1psi1_check(x, y, z, mpf(10) ** -6, 192)["residual"] < mpf(10) ** -20


def test_1psi1_domain():
    with pytest.raises(DomainError):
        ramanujan_1psi1_check(0.5, 0.6, 0.2, 0.3)
    with pytest.raises(DomainError):
        ramanujan_1psi1_check(0.1, 0.6, 0.5, 1.2)


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_1psi1_random_samples(seed):
    for x, y, z, q in sample_1psi1(2, seed):
        assert ramanujan_1psi1_check(x, y, z, q, 160)["residual"] < mpf(10) ** -25


@pytest.mark.parametrize("x,am", [(mpf("0.4"), (0, 1)), (mpf("0.5") * mpmath.expjpi(mpf(1) / 7), (1, 3))])
def test_tag1_first_order(x, am):
    r = tag1_asymptotic_check(x, RootOfUnityPhase(*am), [mpf("0.1"), mpf("0.05"), mpf("0.025")])
    assert r["errors"][0] > r["errors"][1] > r["errors"][2]
    assert all(0.8 < o < 1.3 for o in r["orders"])


def test_tag1_is_lemma1_at_nu_zero():
    ph = RootOfUnityPhase(1, 3)
    x, eps = mpf("0.5") * mpmath.expjpi(mpf(1) / 7), mpf("0.05")
    with mpmath.workprec(192):
        from_lemma = mpmath.exp(-3 * (mpmath.log(1 - x) + lemma1_closed_terms(x, ph, 0, eps)))
        X = x**3
        direct = cyclic_quantum_dilog(ph, x) * mpmath.exp(-3 * mpmath.log(1 - X) / 2 + li2(X) / eps)
        assert abs(from_lemma / direct - 1) < mpf(2) ** -170


def test_tag1_domain():
    with pytest.raises(DomainError):
        tag1_ratio(mpf(2), RootOfUnityPhase(0, 1), 0.1)
    with pytest.raises(ValidationError):
        tag1_asymptotic_check(0.4, RootOfUnityPhase(0, 1), [0.1])
