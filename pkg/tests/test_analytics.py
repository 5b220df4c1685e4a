import math

import pytest
from hypothesis import given, settings, strategies as st

from laserlw import analytics as an
from laserlw.model import BelowThreshold, LaserParams, ThermalNotSupported


def P(ar, chi=1e-3, nb=0.0, gamma=1.0):
    return LaserParams.from_alpha_ratio(ar, chi=chi, n_b=nb, gamma=gamma)


def norm(lw, p):
    return lw / (p.chi * p.gamma)


def test_mean_photon_examples():
    assert an.mean_photon(P(2.0, chi=1e-4)) == pytest.approx(1e4, rel=1e-12)
    assert an.mean_photon(P(1.1)) == pytest.approx(100.0, rel=1e-12)
    assert an.mean_photon(P(1.0 + 1e-9)) == pytest.approx(1e-6, rel=1e-3)
    with pytest.raises(BelowThreshold):
        an.mean_photon(P(0.9))


def test_eq22_examples_and_limits():
    assert an.linewidth_eq22(1000, 1e-3) == pytest.approx(7.5e-4, rel=1e-14)
    nbar = 1e3
    assert an.linewidth_eq22(nbar, 1e4 / nbar) == pytest.approx(1 / (2 * nbar), rel=2e-4)
    assert an.linewidth_eq22(nbar, 1e-8 / nbar) == pytest.approx(1 / nbar, rel=1e-7)
    assert an.linewidth_threshold(nbar, n_b=0.5) == pytest.approx(1.5 / nbar)
    assert an.linewidth_eq22(nbar, 1e4 / nbar, n_b=0.5) == pytest.approx(2 / (2 * nbar), rel=2e-4)


def test_eq24_examples():
    assert norm(an.linewidth_eq24(P(2.0)), P(2.0)) == pytest.approx(0.75, rel=1e-12)
    assert norm(an.linewidth_eq24(P(1.1)), P(1.1)) == pytest.approx(9.545454545454, rel=1e-10)
    r = an.linewidth_eq24(P(1.5)) / an.linewidth_pd(P(1.5))
    assert norm(an.linewidth_eq24(P(1.5)), P(1.5)) == pytest.approx(5 / 3, rel=1e-12)
    assert r == pytest.approx(4 / 3, rel=1e-12)


def test_eq23_and_eq28_examples():
    assert an.linewidth_eq23(1000, P(2.0)) == pytest.approx(7.5e-4, rel=1e-14)
    assert an.linewidth_eq28(1000, 1.0) == pytest.approx(7.5e-4, rel=1e-14)
    assert an.linewidth_eq28(1000, math.inf) == 1e-3
    assert an.linewidth_eq28(1000, 1e12) == pytest.approx(1e-3, rel=1e-10)
    assert an.linewidth_eq28(1000, 0.0) == pytest.approx(5e-4)


def test_far_limit_examples():
    assert norm(an.linewidth_far(P(2.0)), P(2.0)) == pytest.approx(0.25)
    p = P(10.0)
    assert norm(an.linewidth_far(p), p) == pytest.approx(0.05)
    assert norm(an.linewidth_eq24(p), p) == pytest.approx(0.0611111, rel=1e-5)
    assert abs(an.linewidth_eq24(p) / an.linewidth_far(p) - 1) < 0.25


def test_statistics_examples():
    assert an.variance_eq27(P(2.0)) == pytest.approx(2.0)
    assert an.variance_eq27(P(2.0, nb=1.0)) == pytest.approx(4.0)
    assert an.variance_eq27(P(1e9)) == pytest.approx(1.0, rel=1e-8)
    assert an.mandel_q(P(2.0)) == pytest.approx(1.0)
    assert an.mandel_q(P(1.0 + 1e-9)) > 1e8
    assert an.relative_intensity_fluctuation(P(2.0)) == pytest.approx(1e-3)


def test_phase_diffusion_examples():
    assert norm(an.linewidth_pd(P(2.0)), P(2.0)) == pytest.approx(0.75)
    p = P(1.1)
    assert norm(an.linewidth_pd(p), p) == pytest.approx(5.25)
    assert an.linewidth_eq24(p) / an.linewidth_pd(p) == pytest.approx(1.818181818, rel=1e-9)
    assert an.linewidth_pd(nbar=1000.0, alpha=2.0) == pytest.approx(7.5e-4)
    # nbar -> infinity at fixed chi: residual gamma chi / 4
    big = P(1e8)
    assert norm(an.linewidth_pd(big), big) == pytest.approx(0.25, rel=1e-7)
    assert norm(an.linewidth_eq24(big), big) < 1e-7
    with pytest.raises(ThermalNotSupported):
        an.linewidth_pd(P(2.0, nb=0.1))
    with pytest.raises(TypeError):
        an.linewidth_pd(nbar=10.0)


def test_validity_examples():
    v = an.validity(P(1.05, chi=1e-6))
    assert v.valid and v.left_ratio == pytest.approx(50) and v.right_ratio == pytest.approx(2e7)
    v = an.validity(P(1.1, chi=1e-4))
    assert v.left_ratio == pytest.approx(10) and v.valid
    v = an.validity(P(1.01, chi=1e-3))
    assert v.left_ratio == pytest.approx(0.316, abs=1e-3) and not v.valid
    with pytest.raises(ValueError):
        an.validity(P(2.0), margin=0.5)


def test_eq18_empty_cavity():
    p = LaserParams(chi=1e-3, r=0.0)
    assert an.linewidth_eq18(p, 10.0, 3.0) == 1.0


@pytest.mark.parametrize("ar", [1.5, 2.0, 3.0, 5.0, 10.0])
def test_balanced_gain_reproduces_eq22(ar):
    p = P(ar)
    nbar = an.mean_photon(p)
    var = nbar * an.variance_eq27(p)
    want = an.linewidth_eq22(nbar, p.chi)
    assert an.linewidth_balanced_gain(nbar, var, p.chi) == pytest.approx(want, rel=1e-2)


def test_balanced_gain_insensitive_to_variance():
    p = P(2.0)
    nbar = an.mean_photon(p)
    var = nbar * an.variance_eq27(p)
    base = an.linewidth_balanced_gain(nbar, var, p.chi)
    for f in (0.5, 1.5):
        assert an.linewidth_balanced_gain(nbar, f * var, p.chi) == pytest.approx(base, rel=1e-2)
    # without the substitution the variance enters at leading order
    raw = an.linewidth_eq18(p, nbar, var)
    assert abs(an.linewidth_eq18(p, nbar, 1.5 * var) - raw) > 0.1 * raw


@given(ar=st.floats(1.001, 1e4), chi=st.floats(1e-7, 1e-1), nb=st.floats(0.0, 10.0),
       gamma=st.floats(0.01, 100.0))
def test_equivalence_class(ar, chi, nb, gamma):
    p = P(ar, chi=chi, nb=nb, gamma=gamma)
    nbar = an.mean_photon(p)
    q = an.mandel_q(p)
    ref = an.linewidth_eq24(p)
    assert an.linewidth_eq22(nbar, chi, gamma, nb) == pytest.approx(ref, rel=1e-9)
    assert an.linewidth_eq23(nbar, p) == pytest.approx(ref, rel=1e-9)
    assert an.linewidth_eq28(nbar, q, gamma, nb) == pytest.approx(ref, rel=1e-9)


@given(ar=st.floats(1.001, 1e4), chi=st.floats(1e-7, 1e-1))
def test_ordering_against_phase_diffusion(ar, chi):
    p = P(ar, chi=chi)
    d = an.linewidth_eq24(p) - an.linewidth_pd(p)
    scale = an.linewidth_pd(p)
    if ar < 2 - 1e-9:
        assert d > 0
    elif ar > 2 + 1e-9:
        assert d < 0
    assert abs(an.linewidth_eq24(P(2.0, chi=chi)) / an.linewidth_pd(P(2.0, chi=chi)) - 1) < 1e-12
    assert scale > 0


@settings(max_examples=200)
@given(a1=st.floats(1.0001, 1e3), f=st.floats(1.0001, 10.0), nb=st.floats(0.0, 5.0))
def test_eq24_decreasing(a1, f, nb):
    assert an.linewidth_eq24(P(a1 * f, nb=nb)) < an.linewidth_eq24(P(a1, nb=nb))


@given(nbar=st.floats(1.0, 1e8), chi=st.floats(1e-9, 1.0), nb=st.floats(0.0, 5.0))
def test_eq22_between_limits(nbar, chi, nb):
    lw = an.linewidth_eq22(nbar, chi, 1.0, nb)
    lo = (1 + 2 * nb) / (2 * nbar)
    hi = (1 + nb) / nbar
    assert lo * (1 - 1e-12) <= lw <= hi * (1 + 1e-12)
