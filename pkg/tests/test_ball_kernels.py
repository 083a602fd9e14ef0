import math

import numpy as np
import pytest
from scipy.special import beta as beta_fn, betainc

from hartree_bubbles import DomainError, SingularInputError
from hartree_bubbles.ball_kernels import (BallSpec, green_constant, green_fractional_ball,
                                          green_laplacian_ball, k1_kernel, k2_kernel, poisson_constant,
                                          poisson_fractional_ball, poisson_mass, reflected_distance,
                                          sample_ball, verify_reflection_kernels,
                                          verify_representation)
from hartree_bubbles.quadrature import DEFAULT_SPEC
from hartree_bubbles.radial_ops import algebraic_profile, constant_profile

E1 = np.array([1.0, 0.0, 0.0])


def _pairs(n=3, R=1.0, count=1000, seed=7):
    rng = np.random.default_rng(seed)
    return (sample_ball(np.zeros(n), R, count, rng, 0.0, 0.999),
            sample_ball(np.zeros(n), R, count, rng, 0.0, 0.999))


# Laplacian Green function ------------------------------------------------------

def test_laplacian_green_example():
    ball = BallSpec(1.0, 3)
    assert green_laplacian_ball(np.zeros(3), 0.5 * E1, ball) == pytest.approx(1 / (4 * math.pi), rel=1e-14)


def test_laplacian_green_matches_image_charge_formula():
    # Classical 3-D image construction: the image of x sits at R^2 x/|x|^2 with charge R/|x|.
    R = 1.5
    x, y = _pairs(R=R, count=200)
    rx = np.linalg.norm(x, axis=1)
    star = R * R * x / rx[:, None] ** 2
    oracle = (1 / np.linalg.norm(x - y, axis=1)
              - R / (rx * np.linalg.norm(y - star, axis=1))) / (4 * math.pi)
    assert green_laplacian_ball(x, y, BallSpec(R, 3)) == pytest.approx(oracle, rel=1e-10)


@pytest.mark.parametrize("n", [3, 5])
def test_laplacian_green_boundary_symmetry_positivity(n):
    ball = BallSpec(1.0, n)
    x, y = _pairs(n)
    g = green_laplacian_ball(x, y, ball)
    assert np.all(g > 0)
    assert np.allclose(g, green_laplacian_ball(y, x, ball), rtol=1e-10, atol=0)
    edge = y / np.linalg.norm(y, axis=1, keepdims=True)
    assert np.allclose(green_laplacian_ball(x, edge, ball), 0.0, atol=1e-12)


def test_laplacian_green_errors():
    with pytest.raises(SingularInputError):
        green_laplacian_ball(0.3 * E1, 0.3 * E1, BallSpec(1.0, 3))
    with pytest.raises(DomainError):
        green_laplacian_ball(np.zeros(2), np.ones(2) * 0.1, BallSpec(1.0, 2))


# Fractional Green function ----------------------------------------------------

def _green_oracle(x, y, R, n, alpha):
    # int_0^w b^(a-1)(1+b)^(-n/2) db = B(a, n/2-a) I_{w/(1+w)}(a, n/2-a) via b = t/(1-t).
    d = np.linalg.norm(x - y, axis=-1)
    t = (1 - np.sum(x * x, -1) / R ** 2) * (1 - np.sum(y * y, -1) / R ** 2)
    w = t * R * R / d ** 2
    a, b = alpha / 2, (n - alpha) / 2
    return green_constant(n, alpha) * d ** (alpha - n) * beta_fn(a, b) * betainc(a, b, w / (1 + w))


@pytest.mark.parametrize("n,alpha", [(3, 1.0), (3, 0.4), (4, 1.5), (5, 1.9), (2, 1.2)])
def test_fractional_green_matches_incomplete_beta(n, alpha):
    x, y = _pairs(n, R=2.0, count=300)
    got = green_fractional_ball(x, y, BallSpec(2.0, n, alpha))
    assert got == pytest.approx(_green_oracle(x, y, 2.0, n, alpha), rel=1e-10)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.7])
def test_fractional_green_boundary_symmetry_positivity(alpha):
    ball = BallSpec(1.0, 3, alpha)
    x, y = _pairs()
    g = green_fractional_ball(x, y, ball)
    assert np.all(g > 0)
    assert np.allclose(g, green_fractional_ball(y, x, ball), rtol=1e-10, atol=0)
    edge = y / np.linalg.norm(y, axis=1, keepdims=True)
    assert np.all(green_fractional_ball(x, (1 + 1e-15) * edge, ball) == 0.0)
    # Interior approach to the sphere: G ~ (R - |y|)^(alpha/2).
    g1 = green_fractional_ball(x, (1 - 1e-6) * edge, ball)
    g2 = green_fractional_ball(x, (1 - 1e-8) * edge, ball)
    assert g2 == pytest.approx(g1 * 100 ** (-alpha / 2), rel=1e-3)


def test_fractional_green_tends_to_scaled_laplacian_green():
    # The operator carries (2 pi)^(-alpha), so the alpha -> 2 limit is (2 pi)^2 times the classical one.
    x, y = _pairs(count=50)
    classical = (2 * math.pi) ** 2 * green_laplacian_ball(x, y, BallSpec(1.0, 3))
    alphas = np.array([1.99, 1.999, 1.9999, 1.99999])
    gaps = np.array([np.max(np.abs(green_fractional_ball(x, y, BallSpec(1.0, 3, a)) / classical - 1))
                     for a in alphas])
    # First-order convergence in 2 - alpha.
    rates = gaps / (2 - alphas)
    assert np.ptp(rates) <= 0.02 * rates.mean()


def test_fractional_green_errors():
    with pytest.raises(SingularInputError):
        green_fractional_ball(0.3 * E1, 0.3 * E1, BallSpec(1.0, 3, 1.0))
    with pytest.raises(DomainError):
        green_fractional_ball(0.3 * E1, -0.3 * E1, BallSpec(1.0, 3, 2.0))


# Poisson kernel ----------------------------------------------------------------

def test_poisson_kernel_positive_and_closed_form():
    ball = BallSpec(1.0, 3, 1.0)
    rng = np.random.default_rng(3)
    x = sample_ball(np.zeros(3), 1.0, 200, rng, 0.0, 0.99)
    y = sample_ball(np.zeros(3), 3.0, 200, rng, 0.34, 1.0)
    p = poisson_fractional_ball(x, y, ball)
    assert np.all(p > 0)
    expected = (math.gamma(1.5) / math.pi ** 2.5 * ((1 - np.sum(x * x, 1)) / (np.sum(y * y, 1) - 1)) ** 0.5
                / np.linalg.norm(x - y, axis=1) ** 3)
    assert p == pytest.approx(expected, rel=1e-13)
    assert poisson_constant(3, 1.0) == pytest.approx(math.gamma(1.5) / math.pi ** 2.5)


def test_poisson_kernel_domain():
    ball = BallSpec(1.0, 3, 1.0)
    with pytest.raises(DomainError):
        poisson_fractional_ball(1.2 * E1, 2 * E1, ball)
    with pytest.raises(DomainError):
        poisson_fractional_ball(0.2 * E1, 0.5 * E1, ball)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("frac", [0.0, 0.5, 0.9])
def test_poisson_mass_is_one(alpha, frac):
    ball = BallSpec(2.0, 3, alpha)
    assert poisson_mass(2.0 * frac * E1, ball) == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("frac", [0.0, 0.5, 0.9])
def test_poisson_mass_near_classical_limit(frac):
    assert poisson_mass(frac * E1, BallSpec(1.0, 3, 1.9)) == pytest.approx(1.0, abs=1e-3)


def test_poisson_mass_other_dimensions():
    for n in (2, 4, 6):
        x = np.zeros(n)
        x[0] = 0.3
        assert poisson_mass(x, BallSpec(1.0, n, 0.8)) == pytest.approx(1.0, abs=1e-8)


# Representation ------------------------------------------------------------------

def test_representation_of_constant():
    out = verify_representation(constant_profile(1.0), BallSpec(2.0, 3, 1.0), 0.5 * E1)
    assert out["green_term"] == 0.0
    assert out["poisson_term"] == pytest.approx(1.0, abs=1e-5)
    assert out["rel_error"] <= 1e-5


@pytest.mark.parametrize("x", [np.zeros(3), E1])
def test_representation_of_bubble(x):
    out = verify_representation(algebraic_profile(1.0, 1.0), BallSpec(2.0, 3, 1.0), x)
    assert out["rel_error"] <= 1e-3
    assert out["green_term"] > 0 and out["poisson_term"] > 0


def test_representation_error_shrinks_with_tolerance():
    u, ball = algebraic_profile(1.0, 1.0), BallSpec(2.0, 3, 1.0)
    coarse = verify_representation(u, ball, E1, DEFAULT_SPEC.loosened(1e-6))["rel_error"]
    fine = verify_representation(u, ball, E1, DEFAULT_SPEC)["rel_error"]
    assert fine <= coarse


def test_representation_domain():
    u = algebraic_profile(1.0, 1.0)
    with pytest.raises(DomainError):
        verify_representation(u, BallSpec(2.0, 3, 2.0), E1)
    with pytest.raises(DomainError):
        verify_representation(u, BallSpec(2.0, 3, 1.0), 3 * E1)
    with pytest.raises(DomainError):
        verify_representation(u, BallSpec(2.0, 3, 1.0, center=(1, 0, 0)), E1)


# Moving-sphere kernels -------------------------------------------------------------

X0 = np.array([0.3, -0.2, 0.5])


@pytest.mark.parametrize("s,sigma", [(1.0, 2.0), (0.5, 1.0), (1.25, 2.5)])
def test_reflection_kernels_positive(s, sigma):
    out = verify_reflection_kernels(X0, 1.7, s, sigma, count=1000, seed=11)
    assert out["min_K1"] > 0 and out["min_K2"] > 0
    assert out["identity_max_rel_error"] <= 1e-10


def test_k1_vanishes_on_sphere():
    rng = np.random.default_rng(5)
    lam = 1.3
    d = rng.standard_normal((100, 3))
    x = X0 + lam * d / np.linalg.norm(d, axis=1, keepdims=True)
    y = sample_ball(X0, lam, 100, rng)
    assert np.allclose(reflected_distance(x, y, X0, lam), np.linalg.norm(x - y, axis=1), rtol=1e-12)
    k1 = k1_kernel(x, y, X0, lam, 3, 1.0)
    assert np.max(np.abs(k1)) <= 1e-10 * np.max(np.linalg.norm(x - y, axis=1) ** -1)


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_k1_homogeneity(c):
    rng = np.random.default_rng(9)
    lam, n, s = 1.1, 4, 1.3
    x, y = sample_ball(X0[:2].tolist() + [0, 0], lam, 50, rng), sample_ball(X0[:2].tolist() + [0, 0], lam, 50, rng)
    x0 = np.array(X0[:2].tolist() + [0, 0])
    base = k1_kernel(x, y, x0, lam, n, s)
    scaled = k1_kernel(x0 + c * (x - x0), x0 + c * (y - x0), x0, c * lam, n, s)
    assert scaled == pytest.approx(c ** -(n - 2 * s) * base, rel=1e-10)


def test_kernel_singular_inputs():
    with pytest.raises(SingularInputError):
        k2_kernel(0.1 * E1, 0.1 * E1, np.zeros(3), 1.0, 2.0)
    with pytest.raises(SingularInputError):
        k2_kernel(0.1 * E1, np.zeros(3), np.zeros(3), 1.0, 2.0)
    with pytest.raises(DomainError):
        k1_kernel(0.1 * E1, 0.2 * E1, np.zeros(3), 1.0, 3, 1.5)


def test_ball_spec_validation():
    with pytest.raises(DomainError):
        BallSpec(0.0, 3)
    with pytest.raises(DomainError):
        BallSpec(1.0, 3, 2.5)
    with pytest.raises(DomainError):
        BallSpec(1.0, 3, center=(0.0, 0.0))
