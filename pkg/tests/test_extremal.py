import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hartree_bubbles import DivergenceError, DomainError, SingularInputError
from hartree_bubbles.extremal import (Bubble, asymptotic_coefficient, ball_samples, bubble_value,
                                      critical_scale, fibonacci_directions, ie_residual,
                                      kelvin_transform, lower_bound_check, moving_sphere_gap,
                                      planar_directions, write_trace_csv)
from hartree_bubbles.parameters import ProblemParams
from hartree_bubbles.special_constants import bubble_normalization

S1 = ProblemParams.from_order(3, 1.0, 2.0)
C31 = 0.8199806  # (3/pi^2)^(1/6)
E1 = np.array([1.0, 0.0, 0.0])


def _std(mu=1.0, x0=None):
    return Bubble.standard(S1, mu=mu, x0=x0)


def _points(count=200, radius=3.0, seed=4, n=3):
    rng = np.random.default_rng(seed)
    return rng.uniform(-radius, radius, (count, n))


# bubble_value --------------------------------------------------------------------

def test_bubble_center_value():
    assert _std()(np.zeros(3)) == pytest.approx(C31, rel=1e-6)
    assert _std().C == pytest.approx((3 / math.pi ** 2) ** (1 / 6), rel=1e-14)


def test_bubble_scaling_at_center():
    assert _std(mu=4.0)(np.zeros(3)) == pytest.approx(2 * _std().C, rel=1e-14)


def test_bubble_radial_about_center():
    b = _std(mu=1.3, x0=(0.5, -1.0, 2.0))
    d = fibonacci_directions(3)
    vals = b(np.asarray(b.x0) + 0.7 * d)
    assert np.ptp(vals) <= 1e-15 * vals.max()
    assert np.all(vals < b(np.asarray(b.x0)))


def test_bubble_validation():
    with pytest.raises(DomainError):
        Bubble(0.0, (0, 0, 0), 1.0, 0.5)
    with pytest.raises(DomainError):
        bubble_value(_std(), np.zeros(2))
    with pytest.raises(DomainError):
        Bubble.standard(S1, x0=(0.0, 0.0))


# ie_residual --------------------------------------------------------------------

def test_residual_critical_coulomb():
    assert ie_residual(_std(), S1) <= 1e-3


def test_residual_critical_hartree_five_dimensional():
    params = ProblemParams.from_order(5, 1.0, 4.0)
    assert (params.p, params.q) == pytest.approx((2.0, 1.0))
    assert ie_residual(Bubble.standard(params), params) <= 1e-3


def test_residual_subcritical_is_large():
    params = S1.with_exponents(4.0, 2.0)
    assert ie_residual(Bubble.standard(params), params) > 0.05


@pytest.mark.parametrize("mu", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("x0", [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)])
def test_residual_scale_translate_covariance(mu, x0):
    assert ie_residual(_std(mu, x0), S1) <= 2e-3


def test_residual_parameter_mismatch():
    with pytest.raises(DomainError):
        ie_residual(_std(), ProblemParams.from_order(5, 1.0, 4.0))


# Kelvin transform ---------------------------------------------------------------

@given(st.floats(0.3, 3.0), st.floats(0.5, 3.0), st.integers(0, 3))
def test_kelvin_is_involution(lam, nu, seed):
    u = _std(1.4, (0.2, 0.1, -0.3))
    x0 = np.array([0.5, 0.0, 1.0])
    twice = kelvin_transform(kelvin_transform(u, x0, lam, nu), x0, lam, nu)
    pts = _points(50, seed=seed)
    assert twice(pts) == pytest.approx(u(pts), rel=1e-12)


def test_kelvin_fixes_standard_bubble_at_unit_radius():
    u = _std()
    pts = _points()
    assert kelvin_transform(u, np.zeros(3), 1.0, u.nu)(pts) == pytest.approx(u(pts), rel=1e-13)


def test_kelvin_of_constant_with_zero_weight():
    one = lambda x: np.ones(np.shape(x)[:-1])
    assert np.all(kelvin_transform(one, np.zeros(3), 2.0, 0.0)(_points()) == 1.0)


def test_kelvin_center_is_singular():
    with pytest.raises(SingularInputError):
        kelvin_transform(_std(), E1, 1.0, 1.0)(E1)
    with pytest.raises(DomainError):
        kelvin_transform(_std(), E1, 0.0, 1.0)


def test_gap_antisymmetry_under_reflection():
    # omega(x*) = -(|x - x0|/lam)^nu omega(x) with x* the reflection of x in the sphere.
    u = _std(1.7, (0.3, 0.0, 0.0))
    x0, lam = np.array([-0.4, 0.2, 0.1]), 0.9
    pts = ball_samples(x0, lam, fibonacci_directions(3), np.linspace(0.1, 0.9, 9)).reshape(-1, 3)
    d = pts - x0
    r2 = np.sum(d * d, axis=1)
    mirrored = x0 + lam ** 2 * d / r2[:, None]
    inside = moving_sphere_gap(u, x0, lam, pts, u.nu).omega
    outside = moving_sphere_gap(u, x0, lam, mirrored, u.nu).omega
    assert outside == pytest.approx(-(np.sqrt(r2) / lam) ** u.nu * inside, rel=1e-10, abs=1e-14)


# moving_sphere_gap ----------------------------------------------------------------

def test_gap_vanishes_at_unit_radius():
    u = _std()
    pts = ball_samples(np.zeros(3), 1.0, fibonacci_directions(3), np.linspace(0.05, 0.95, 10))
    state = moving_sphere_gap(u, np.zeros(3), 1.0, pts, u.nu, tol=1e-12)
    assert np.max(np.abs(state.omega)) <= 1e-12
    assert not state.violated


def test_gap_sign_pattern():
    u, lam = _std(), 0.5
    inner = moving_sphere_gap(u, np.zeros(3), lam, 0.25 * E1[None, :], u.nu)
    outer = moving_sphere_gap(u, np.zeros(3), lam, 0.75 * E1[None, :], u.nu)
    assert inner.min_omega > 0 and outer.min_omega < 0
    # Outside the sphere a negative gap is not a violation.
    assert not outer.violated


def test_violation_set_inside_ball():
    u = _std()
    x0, lam = np.zeros(3), 1.5
    pts = _points(300, radius=2.5)
    state = moving_sphere_gap(u, x0, lam, pts, u.nu)
    r = np.linalg.norm(pts, axis=1)
    assert state.violated
    assert np.all(r[state.violation] < lam) and np.all(r[state.violation] > 0)


# critical_scale -----------------------------------------------------------------------

def test_critical_scale_at_center():
    u = _std()
    assert critical_scale(u, np.zeros(3), u.nu) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("dist", [0.0, 0.5, 1.0, 2.0])
def test_critical_scale_off_center(dist):
    u = _std()
    x0 = dist * E1
    lam = critical_scale(u, x0, u.nu, directions=planar_directions(x0, 3))
    assert lam == pytest.approx(math.sqrt(1 + dist ** 2), abs=1e-6)


def test_critical_scale_with_fibonacci_sampling():
    u = _std(2.0)
    x0 = np.array([0.3, -0.4, 0.0])
    lam = critical_scale(u, x0, u.nu)
    assert lam == pytest.approx(math.sqrt(1 + 4 * 0.25) / 2.0, abs=1e-5)


def test_critical_scale_infinite_for_constant():
    one = lambda x: np.full(np.shape(x)[:-1], 2.0)
    assert critical_scale(one, np.zeros(3), 1.0) == math.inf


def test_critical_scale_trace(tmp_path):
    u, trace = _std(), []
    critical_scale(u, np.zeros(3), u.nu, trace=trace)
    assert len(trace) > 0 and all(len(row) == 3 for row in trace)
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "lambda,r,omega" and len(lines) == len(trace) + 1


def test_critical_scale_rejects_bad_weight():
    with pytest.raises(DomainError):
        critical_scale(_std(), np.zeros(3), 0.0)


# asymptotics and lower bound ---------------------------------------------------------

def test_asymptotic_coefficient_standard():
    u = _std()
    assert asymptotic_coefficient(u, u.nu, np.zeros(3)) == pytest.approx(C31, rel=1e-6)


def test_asymptotic_coefficient_scaled():
    u = _std(2.0)
    assert asymptotic_coefficient(u, u.nu, np.zeros(3)) == pytest.approx(u.C / math.sqrt(2), rel=1e-10)


def test_asymptotic_coefficient_detects_log_tail():
    u = lambda x: np.log(2 + np.linalg.norm(x, axis=-1)) / (1 + np.linalg.norm(x, axis=-1))
    with pytest.raises(DivergenceError):
        asymptotic_coefficient(u, 1.0, np.zeros(3))


def test_critical_scale_matches_asymptotic_identity():
    # lambda^nu u(x0) equals the limit of |x|^nu u(x).
    u = _std()
    x0 = np.array([0.0, 1.2, 0.0])
    lam = critical_scale(u, x0, u.nu, directions=planar_directions(x0, 3))
    limit = asymptotic_coefficient(u, u.nu, x0)
    assert lam ** u.nu * u(x0) == pytest.approx(limit, rel=1e-6)


def test_lower_bound_standard_bubble():
    u = _std()
    radii = np.linspace(1.0, 50.0, 200)
    assert lower_bound_check(u, np.zeros(3), u.nu, radii) == pytest.approx(u.C / math.sqrt(2), rel=1e-12)


def test_lower_bound_compact_support_is_zero():
    bump = lambda x: np.maximum(0.0, 1.0 - np.linalg.norm(x, axis=-1))
    assert lower_bound_check(bump, np.zeros(3), 1.0, [1.0, 2.0, 5.0]) == 0.0


@given(st.lists(st.floats(1.0, 100.0), min_size=1, max_size=10), st.lists(st.floats(1.0, 100.0), max_size=10))
def test_lower_bound_monotone_under_inclusion(a, extra):
    u = _std(0.7, (0.1, 0.0, 0.0))
    small = lower_bound_check(u, np.zeros(3), u.nu, a)
    big = lower_bound_check(u, np.zeros(3), u.nu, a + extra)
    assert big <= small


def test_lower_bound_radii_domain():
    with pytest.raises(DomainError):
        lower_bound_check(_std(), np.zeros(3), 1.0, [0.5, 2.0])


def test_normalization_consistency():
    assert _std().C == bubble_normalization(S1)
