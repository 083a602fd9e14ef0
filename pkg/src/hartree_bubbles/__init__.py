"""Numerical verification toolkit for higher-order Hartree equations and their bubbles."""
from ._accel import backend, set_backend, use_backend
from .ball_kernels import (BallSpec, green_fractional_ball, green_laplacian_ball, k1_kernel,
                           k2_kernel, poisson_fractional_ball, poisson_mass, verify_representation)
from .errors import (DivergenceError, DomainError, HartreeError, QuadratureError,
                     SingularInputError)
from .extremal import (Bubble, MovingSphereState, asymptotic_coefficient, bubble_value,
                       critical_scale, ie_residual, kelvin_transform, lower_bound_check,
                       moving_sphere_gap)
from .parameters import Criticality, ProblemParams, classify, critical_exponents, is_critical
from .quadrature import QuadratureSpec, QuadResult, angular_weight, integrate
from .radial_ops import (AlgebraicSum, RadialProfile, TailModel, fractional_laplacian_radial,
                         inverse_laplacian_radial, radial_laplacian, superharmonic_chain)
from .riesz import (bubble_profile, hartree_apply, hartree_energy, riesz_potential,
                    verify_composition, verify_convolution_identity, verify_energy_identity)
from .special_constants import (bubble_integral, bubble_normalization, frac_lap_normalization,
                                hls_constant, riesz_constant, sobolev_constant)

__version__ = "0.1.0"
