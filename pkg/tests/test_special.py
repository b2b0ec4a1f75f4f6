import math

import numpy as np
import pytest
import scipy.special as sp

from fracext.quadrature import Order, QuadratureSpec
from fracext.special import (
    bessel_k,
    bvp_solution,
    kernel_mass,
    laplace_psi_closed,
    laplace_psi_numeric,
    psi_kernel,
    psi_profile,
)


def direct_kernel_mass(x, s, n=400_000):
    """Independent oracle: trapezoid of Psi(x, .) on a log grid in raw time,
    plus the analytic power-law completion of the far tail."""
    t_hi = 1e8 * x * x
    t = np.geomspace(1e-8 * x * x, t_hi, n)
    body = float(np.trapezoid(psi_kernel(x, t, s), t))
    tail = (x * x / 4.0) ** s.s / math.gamma(s.s) * t_hi ** (-s.s) / s.s
    return body + tail


def test_kernel_vanishes_for_nonpositive_time():
    s = Order(0.5)
    assert psi_kernel(2.0, -1.0, s) == 0.0
    assert psi_kernel(2.0, 0.0, s) == 0.0
    assert psi_profile(-3.0, s) == 0.0


def test_kernel_point_value():
    # (4^0.5 Gamma(0.5))^-1 * e^-1 * 0.25^-1.5 = 8 e^-1 / (2 sqrt(pi))
    expected = 8.0 * math.exp(-1.0) / (2.0 * math.sqrt(math.pi))
    assert psi_kernel(1.0, 0.25, Order(0.5)) == pytest.approx(expected, rel=1e-13)
    assert expected == pytest.approx(0.8302, abs=5e-5)


def test_kernel_scaling_identity():
    rng = np.random.default_rng(3)
    for _ in range(5):
        x = rng.uniform(0.05, 8.0)
        t = rng.uniform(0.001, 20.0)
        s = Order(rng.uniform(0.05, 0.95))
        lhs = psi_kernel(x, t, s)
        rhs = psi_profile(t / x**2, s) / x**2
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


def test_kernel_extreme_arguments_underflow_to_zero():
    assert psi_kernel(100.0, 1e-6, Order(0.5)) == 0.0
    assert np.all(np.isfinite(psi_kernel(1e-8, np.array([1e-300, 1e300]), Order(0.9))))


@pytest.mark.parametrize("s", [0.1, 0.3, 0.5, 0.7, 0.9])
@pytest.mark.parametrize("x", [0.01, 1.0, 10.0])
def test_kernel_mass_is_one(s, x):
    assert abs(kernel_mass(x, Order(s)) - 1.0) <= 1e-8


def test_kernel_mass_against_direct_integration():
    # the substitution chain must agree with raw time-domain integration
    for x, s in [(0.5, 0.3), (2.0, 0.7)]:
        direct = direct_kernel_mass(x, Order(s))
        assert kernel_mass(x, Order(s)) == pytest.approx(direct, abs=5e-7)


def test_kernel_mass_x_independent():
    for s in (0.2, 0.8):
        masses = [kernel_mass(x, Order(s)) for x in (0.05, 1.0, 20.0)]
        assert max(masses) - min(masses) <= 2e-8


def test_bessel_half_order_closed_form():
    # K_(1/2)(z) = sqrt(pi/(2 z)) e^-z
    for z in (0.5, 1.0, 3.0):
        expected = math.sqrt(math.pi / (2.0 * z)) * math.exp(-z)
        assert bessel_k(0.5, z) == pytest.approx(expected, rel=1e-11)
    assert bessel_k(0.5, 1.0) == pytest.approx(0.46107, abs=5e-6)


def test_bessel_symmetry_in_order():
    rng = np.random.default_rng(11)
    for _ in range(5):
        nu = rng.uniform(0.05, 1.9)
        z = rng.uniform(0.1, 20.0)
        assert bessel_k(nu, z) == bessel_k(-nu, z)


def test_bessel_against_independent_oracles():
    # second quadrature with a different node family, plus scipy
    def trapz_oracle(nu, z, n=2_000_001):
        u = np.linspace(0.0, math.acosh(745.0 / z) + 1.0, n)
        return float(np.trapezoid(np.exp(-z * np.cosh(u)) * np.cosh(nu * u), u))

    val = bessel_k(0.3, 2.0)
    assert val == pytest.approx(trapz_oracle(0.3, 2.0), rel=1e-10)
    assert val == pytest.approx(float(sp.kv(0.3, 2.0)), rel=1e-10)


@pytest.mark.parametrize("nu,z", [(0.1, 0.05), (0.9, 10.0), (1.5, 0.3), (1.99, 5.0)])
def test_bessel_matches_scipy(nu, z):
    assert bessel_k(nu, z) == pytest.approx(float(sp.kv(nu, z)), rel=1e-10)


def test_bessel_rejects_bad_arguments():
    with pytest.raises(ValueError):
        bessel_k(0.5, 0.0)
    with pytest.raises(ValueError):
        bessel_k(2.5, 1.0)


def test_laplace_point_value():
    # Eq-level closed form at s = 1/2, omega = 1 evaluates to e^-1:
    # 2^(1-s)/Gamma(s) * K_(1/2)(1) = sqrt(2/pi) * sqrt(pi/2) e^-1 = e^-1.
    val = laplace_psi_closed(Order(0.5), 1.0)
    assert val == pytest.approx(math.exp(-1.0), abs=1e-10)
    num = laplace_psi_numeric(Order(0.5), 1.0)
    assert num == pytest.approx(math.exp(-1.0), abs=1e-8)


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("omega", [0.5, 1.0, 4.0])
def test_laplace_numeric_matches_closed(s, omega):
    a = laplace_psi_numeric(Order(s), omega)
    b = laplace_psi_closed(Order(s), omega)
    assert abs(a - b) / abs(b) <= 1e-6


def test_laplace_small_omega_tends_to_mass():
    # the gap closes like omega^s, so shrink omega and watch it vanish
    gaps = [abs(laplace_psi_numeric(Order(0.4), w) - 1.0) for w in (1e-6, 1e-9, 1e-12)]
    assert gaps == sorted(gaps, reverse=True)
    assert gaps[-1] < 1e-4


def test_laplace_of_space_kernel_by_substitution():
    # The transform of Psi(x, .) equals the profile transform at x^2 omega;
    # oracle = direct time-domain integration of Psi(x, t) e^(-omega t).
    x, omega, s = 1.7, 0.8, Order(0.35)
    t = np.geomspace(1e-10, 2e3, 1_500_000)
    direct = float(np.trapezoid(psi_kernel(x, t, s) * np.exp(-omega * t), t))
    assert laplace_psi_numeric(s, x * x * omega) == pytest.approx(direct, abs=1e-7)


def test_bvp_boundary_value():
    assert bvp_solution(0.0, 0.0) == 1.0
    assert bvp_solution(-2.3, 0.0) == 1.0


def test_bvp_alpha_zero_is_decaying_exponential():
    for x in (0.5, 1.0, 2.0):
        assert bvp_solution(0.0, x) == pytest.approx(math.exp(-x), rel=1e-10)


@pytest.mark.parametrize("alpha", [0.0, -1.0, 0.5])
def test_bvp_equation_residual(alpha):
    # x^alpha y'' = y checked by central differences
    h = 2e-3
    for x in (0.5, 1.0, 2.0):
        y = bvp_solution(alpha, x)
        ypp = (bvp_solution(alpha, x + h) - 2.0 * y + bvp_solution(alpha, x - h)) / (h * h)
        assert abs(x**alpha * ypp - y) <= 1e-5 * abs(y)


def test_bvp_residual_second_order_in_step():
    alpha, x = -1.0, 1.0
    resid = []
    for h in (4e-3, 2e-3):
        y = bvp_solution(alpha, x)
        ypp = (bvp_solution(alpha, x + h) - 2.0 * y + bvp_solution(alpha, x - h)) / (h * h)
        resid.append(abs(x**alpha * ypp - y))
    assert resid[0] / resid[1] > 3.0  # ~ h^2


def test_bvp_decays_monotonically_to_zero():
    vals = [bvp_solution(0.3, x) for x in (1.0, 2.0, 4.0, 8.0, 16.0, 50.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-10


def test_bvp_rejects_alpha_at_least_one():
    with pytest.raises(ValueError):
        bvp_solution(1.0, 0.5)
