import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from gausstent.geometry import (
    AdmissibilityError, Ball, ConeSpec, ConeVariant, UpperPoint,
    ball_tent_contains, classical_tent_contains, compare_tents,
    comparison_lemma_check, cone_contains, cutoff_m, gamma_ball,
    gamma_ball_bounds_check, is_admissible, lebesgue_ball,
)


# -- cutoff scale ----------------------------------------------------------

def test_cutoff_basic():
    assert cutoff_m(0.0) == 1.0
    assert cutoff_m(0.5) == 1.0
    assert cutoff_m(1.0) == 1.0
    assert cutoff_m(4.0) == 0.25
    assert cutoff_m((-4.0,)) == 0.25
    assert cutoff_m((3.0, 4.0)) == 0.2


@given(st.floats(-50, 50, allow_nan=False))
def test_cutoff_range_and_symmetry(x):
    m = cutoff_m(x)
    assert 0 < m <= 1
    assert m == cutoff_m(-x)


@given(st.floats(-20, 20), st.floats(-20, 20))
def test_cutoff_quasi_lipschitz(x, y):
    # |m(x) - m(y)| <= |x - y| in one dimension
    assert abs(cutoff_m(x) - cutoff_m(y)) <= abs(x - y) + 1e-12


# -- gamma of balls --------------------------------------------------------

def _simpson_gamma_1d(c, r, n=20001):
    xs = np.linspace(c - r, c + r, n)
    from scipy.integrate import simpson
    return simpson(np.exp(-xs * xs), x=xs)


@pytest.mark.parametrize("c,r", [(0.0, 1.0), (2.0, 0.5), (-3.0, 0.3), (7.5, 0.12)])
def test_gamma_ball_1d_quadrature_oracle(c, r):
    got = gamma_ball(Ball((c,), r))
    want = _simpson_gamma_1d(c, r)
    assert got == pytest.approx(want, rel=1e-10)


def test_gamma_ball_1d_far_tail_positive():
    # both erf(c +- r) round to 1 here; the erfc form must not cancel to 0
    g = gamma_ball(Ball((8.0,), 0.1))
    assert 0 < g < 1e-25
    assert g == pytest.approx(gamma_ball(Ball((-8.0,), 0.1)), rel=1e-12)


def test_gamma_ball_total_mass_1d():
    assert gamma_ball(Ball((0.0,), 40.0)) == pytest.approx(np.sqrt(np.pi), rel=1e-12)


def test_gamma_ball_2d_centered_closed_form():
    # at the origin the radial integral is exactly pi (1 - e^{-r^2})
    for r in (0.3, 1.0, 2.5):
        want = np.pi * (1.0 - np.exp(-r * r))
        assert gamma_ball(Ball((0.0, 0.0), r)) == pytest.approx(want, rel=1e-10)


def test_gamma_ball_2d_offcenter_oracle():
    # 2-D tensor quadrature oracle over the bounding square, disc indicator
    c = np.array([1.2, -0.7])
    r = 0.8

    def inner(x):
        half = np.sqrt(max(r * r - (x - c[0]) ** 2, 0.0))
        val, _ = quad(lambda y: np.exp(-x * x - y * y),
                      c[1] - half, c[1] + half, epsrel=1e-11)
        return val

    want, _ = quad(inner, c[0] - r, c[0] + r, epsrel=1e-9, limit=200)
    assert gamma_ball(Ball(tuple(c), r)) == pytest.approx(want, rel=1e-7)


def test_lebesgue_ball():
    assert lebesgue_ball(Ball((0.0,), 2.0)) == 4.0
    assert lebesgue_ball(Ball((0.0, 0.0), 2.0)) == pytest.approx(4 * np.pi)


# -- admissibility and the measure bracket ---------------------------------

def test_admissibility_boundary_included():
    assert is_admissible(Ball((4.0,), 0.25), 1.0)
    assert not is_admissible(Ball((4.0,), 0.2500001), 1.0)
    assert is_admissible(Ball((0.0,), 2.0), 2.0)


def test_bracket_rejects_non_admissible():
    with pytest.raises(AdmissibilityError):
        gamma_ball_bounds_check(Ball((4.0,), 1.0), 1.0)


def test_bracket_holds_random(rng):
    for _ in range(300):
        c = rng.uniform(-6, 6)
        beta = rng.choice((0.5, 1.0, 2.0))
        r = rng.uniform(0.02, 1.0) * beta * cutoff_m(c)
        assert gamma_ball_bounds_check(Ball((c,), r), beta)


# -- cones and tents -------------------------------------------------------

def test_cone_strict_boundary():
    spec = ConeSpec(1.0, 1.0)
    # |y - x| = t exactly: excluded
    assert not cone_contains(0.0, spec, UpperPoint((0.5,), 0.5))
    assert cone_contains(0.0, spec, UpperPoint((0.5,), 0.5000001))
    # cap by beta m(y)
    assert not cone_contains(3.0, spec, UpperPoint((3.5,), 5.0))  # m(3.5) < 0.5


def test_cone_variants_differ():
    pencil = ConeSpec(1.0, 1.0, ConeVariant.PENCIL)
    fixed = ConeSpec(1.0, 1.0, ConeVariant.FIXED)
    p = UpperPoint((0.2,), 5.0)  # near the origin, m(y) = 1
    assert cone_contains(0.0, pencil, p)
    assert cone_contains(0.0, fixed, p)
    q = UpperPoint((4.0,), 5.0)  # m(y) = 0.25 caps the pencil cone
    assert not cone_contains(4.3, pencil, q)
    far = ConeSpec(1.0, 1.0, ConeVariant.FIXED)
    # fixed-variant cap uses m(vertex) = 1 near the origin
    assert cone_contains(0.5, far, UpperPoint((0.2,), 5.0))


def test_tent_nonstrict_boundary():
    B = Ball((0.0,), 1.0)
    # depth 0.5 at y = 0.5; t = 0.5 sits exactly on the boundary: included
    assert ball_tent_contains(B, 1.0, 1.0, UpperPoint((0.5,), 0.5))
    assert not ball_tent_contains(B, 1.0, 1.0, UpperPoint((0.5,), 0.5000001))
    assert classical_tent_contains(B, 1.0, UpperPoint((0.5,), 0.5))


def test_tent_outside_ball_excluded():
    B = Ball((0.0,), 1.0)
    assert not ball_tent_contains(B, 1.0, 1.0, UpperPoint((1.5,), 1e-6))


def test_compare_tents_agreement_off_axis(rng):
    # admissible ball far from the origin: tents coincide off the axis
    B = Ball((3.0,), 0.25)
    samples = [UpperPoint((rng.uniform(2, 4),), rng.uniform(1e-3, 4.0))
               for _ in range(3000)]
    rep = compare_tents(B, 1.0, 1.0, samples)
    assert rep["preconditions_ok"]
    assert rep["n_off_axis"] == 0


def test_compare_tents_axis_disagreement_possible():
    # boundary-admissible ball: the axis column diverges between the tents
    c = 3.0
    B = Ball((c,), cutoff_m(c))
    p = UpperPoint((c,), 2.0)  # classical needs t <= r; gaussian caps at m(c)
    gau = ball_tent_contains(B, 1.0, 1.0, p)
    cla = classical_tent_contains(B, 1.0, p)
    assert gau != cla
    rep = compare_tents(B, 1.0, 1.0, [p])
    assert rep["n_off_axis"] == 0
    assert len(rep["disagreements"]) == 1
    assert rep["disagreements"][0]["on_axis"]


def test_compare_tents_warnings():
    rep = compare_tents(Ball((0.1,), 0.5), 1.0, 0.5, [])
    assert "beta < 1" in rep["warnings"]
    assert any("sqrt" in w for w in rep["warnings"])
    assert not rep["preconditions_ok"]


# -- comparison lemma ------------------------------------------------------

@given(st.floats(-10, 10), st.floats(0.01, 0.999),
       st.sampled_from([0.5, 1.0, 2.0]))
def test_comparison_lemma_property(y, frac, b):
    x = y + frac * b * cutoff_m(y)
    assert comparison_lemma_check((x,), (y,), b)


def test_comparison_lemma_rejects_bad_hypothesis():
    with pytest.raises(ValueError):
        comparison_lemma_check((2.0,), (0.0,), 1.0)  # |x-y| = 2 >= 1*m(0)
    with pytest.raises(ValueError):
        comparison_lemma_check((0.0,), (0.0,), -1.0)
