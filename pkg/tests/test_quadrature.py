import math

import numpy as np
import pytest

from fracext.errors import MissingDerivative, OrderTooLarge, ToleranceNotMet
from fracext.functions import bump, constant, exponential, linear, power_stationary, sine
from fracext.quadrature import (
    DEFAULT_SPEC,
    GeneralOrder,
    HolderFunction,
    Order,
    QuadratureSpec,
    Side,
    limit_small_s,
    marchaud,
    marchaud_general,
    oracle_marchaud,
)


def test_order_validation():
    Order(0.5)
    for bad in (0.0, 1.0, -0.2, 1.7):
        with pytest.raises(ValueError):
            Order(bad)


def test_general_order_parts():
    g = GeneralOrder(1.3)
    assert g.integer_part == 1
    assert g.fractional_part.s == pytest.approx(0.3)
    with pytest.raises(ValueError):
        GeneralOrder(2.0)
    with pytest.raises(ValueError):
        GeneralOrder(-0.5)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(split_delta=-1.0)
    with pytest.raises(ValueError):
        QuadratureSpec(tail_cutoff=0.5)
    with pytest.raises(ValueError):
        QuadratureSpec(max_subdivisions=0)


def test_tail_bound_formula():
    spec = QuadratureSpec(tail_cutoff=100.0)
    assert spec.tail_truncation_bound(2.0, 0.5) == pytest.approx(2.0 * 2.0 * 100.0**-0.5 / 0.5)


def test_constant_is_annihilated_exactly():
    # the integrand simplifies to zero, so the result must be exact
    for side in (Side.LEFT, Side.RIGHT):
        res = marchaud(constant(3.7), 1.234, Order(0.5), side=side)
        assert res.value == 0.0
        assert res.error_bound == 0.0


def test_exponential_closed_form():
    # The left derivative of e^t at t <= 0 has closed form e^t (normalized);
    # unnormalized it is Gamma(1-s)/s * e^t.
    res = marchaud(exponential(), 0.0, Order(0.5), normalized=True)
    assert res.value == pytest.approx(1.0, abs=1e-9)
    res = marchaud(exponential(), 0.0, Order(0.5))
    assert res.value == pytest.approx(math.gamma(0.5) / 0.5, rel=1e-10)
    res = marchaud(exponential(), -1.0, Order(0.3), normalized=True)
    assert res.value == pytest.approx(math.exp(-1.0), rel=1e-9)


@pytest.mark.parametrize("s", [0.1, 0.3, 0.5, 0.7, 0.9])
@pytest.mark.parametrize("t", [0.0, 0.7, -1.3])
def test_sine_phase_shift_identity(s, t):
    # normalized derivative of sin is sin(t + s*pi/2)
    res = marchaud(sine(), t, Order(s), normalized=True)
    assert res.value == pytest.approx(math.sin(t + s * math.pi / 2.0), abs=2e-6)


def test_sine_spec_example():
    res = marchaud(sine(), 0.0, Order(0.3), normalized=True)
    assert res.value == pytest.approx(0.45399049973954675, abs=1e-6)


def test_right_derivative_phase_shift():
    res = marchaud(sine(), 0.4, Order(0.6), side=Side.RIGHT, normalized=True)
    assert res.value == pytest.approx(math.sin(0.4 - 0.6 * math.pi / 2.0), abs=2e-6)


def test_order_too_large_rejected():
    rough = HolderFunction(fn=lambda t: np.abs(np.sin(t)) ** 0.5, bound=1.0,
                           holder_exp=0.5, holder_const=1.0)
    with pytest.raises(OrderTooLarge):
        marchaud(rough, 0.3, Order(0.7))


def test_tolerance_not_met_raised():
    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=2)
    with pytest.raises(ToleranceNotMet):
        marchaud(sine(), 0.3, Order(0.5), spec=spec)


def test_linearity():
    rng = np.random.default_rng(42)
    f, g = sine(), bump()
    s = Order(0.4)
    t = 0.3
    for _ in range(3):
        a, b = rng.uniform(-2, 2, size=2)
        combo = HolderFunction(
            fn=lambda u, a=a, b=b: a * f(u) + b * g(u),
            bound=abs(a) * f.bound + abs(b) * g.bound,
            holder_const=abs(a) * f.holder_const + abs(b) * g.holder_const,
        )
        lhs = marchaud(combo, t, s)
        rhs = a * marchaud(f, t, s).value + b * marchaud(g, t, s).value
        assert abs(lhs.value - rhs) < 1e-6 * (1.0 + abs(rhs))


def test_translation_covariance():
    h = 0.83
    f = sine()
    shifted = HolderFunction(fn=lambda u: f(u - h), bound=f.bound,
                             holder_const=f.holder_const)
    s = Order(0.6)
    a = marchaud(shifted, 0.5, s).value
    b = marchaud(f, 0.5 - h, s).value
    assert a == pytest.approx(b, abs=1e-7)


def test_left_right_symmetry():
    # right derivative of f equals left derivative of t -> f(-t) at -t
    f = sine()
    mirrored = HolderFunction(fn=lambda u: f(-u), bound=f.bound,
                              holder_const=f.holder_const)
    r = marchaud(f, 0.4, Order(0.6), side=Side.RIGHT).value
    l = marchaud(mirrored, -0.4, Order(0.6), side=Side.LEFT).value
    assert r == pytest.approx(l, abs=1e-8)


@pytest.mark.parametrize("s", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
def test_oracle_agreement_sine(s):
    res = marchaud(sine(), 0.7, Order(s))
    other = oracle_marchaud(sine(), 0.7, Order(s))
    assert abs(res.value - other) <= res.error_bound + 1e-6


def test_oracle_constant():
    assert abs(oracle_marchaud(constant(2.0), 0.1, Order(0.4))) < 1e-12


def test_power_function_near_stationary():
    # (t - a)_+^(s-1), clamped: vanishing normalized derivative at a + 1
    s = 0.5
    f = power_stationary(s, start=-3.0)
    res = marchaud(f, -2.0, Order(s), normalized=True)
    assert abs(res.value) < 1e-3 * f.bound
    other = oracle_marchaud(f, -2.0, Order(s), normalized=True)
    assert abs(other) < 1e-3 * f.bound


def test_appendix_split_bounds():
    # |tail| <= 2 M delta^-s / s and |singular| <= C delta^(gamma-s)/(gamma-s)
    for f in (sine(), bump()):
        for s in (0.2, 0.5, 0.8):
            res = marchaud(f, 0.3, Order(s))
            assert abs(res.tail_part) <= 2.0 * f.bound * DEFAULT_SPEC.split_delta ** (-s) / s + 1e-9
            gamma = f.holder_exp
            sing_bound = f.holder_const * DEFAULT_SPEC.split_delta ** (gamma - s) / (gamma - s)
            assert abs(res.singular_part) <= sing_bound + 1e-9


def test_bound_violation_warns_but_succeeds():
    lying = HolderFunction(fn=lambda t: np.sin(t), bound=0.1, holder_const=1.0)
    res = marchaud(lying, 0.3, Order(0.5))
    assert any("bound" in w for w in res.warnings)
    assert res.value == pytest.approx(marchaud(sine(), 0.3, Order(0.5)).value, abs=1e-8)


def test_general_order_linear_gives_zero():
    res = marchaud_general(linear(), 5.0, GeneralOrder(1.5))
    assert res.value == 0.0


def test_general_order_sine():
    res = marchaud_general(sine(), 0.0, GeneralOrder(1.3))
    assert res.value == pytest.approx(math.cos(0.3 * math.pi / 2.0), abs=1e-6)
    assert res.value == pytest.approx(0.8910065241883679, abs=1e-6)


def test_general_order_exponential():
    res = marchaud_general(exponential(), -1.0, GeneralOrder(1.5))
    assert res.value == pytest.approx(math.exp(-1.0), rel=1e-8)


def test_general_order_missing_derivative():
    plain = HolderFunction(fn=lambda t: np.sin(t), bound=1.0, holder_const=1.0)
    with pytest.raises(MissingDerivative):
        marchaud_general(plain, 0.0, GeneralOrder(1.5))


def test_limit_small_s_monotone_to_value():
    f = bump()
    t = 0.3
    vals = limit_small_s(f, t, [0.2, 0.1, 0.05, 0.02])
    errs = [abs(v - f.value_at(t)) for v in vals]
    assert errs == sorted(errs, reverse=True)


def test_limit_large_s_monotone_to_derivative():
    f = bump()
    t = 0.3
    vals = limit_small_s(f, t, [0.8, 0.9, 0.95, 0.98])
    target = f.exact_derivative.value_at(t)
    errs = [abs(v - target) for v in vals]
    assert errs == sorted(errs, reverse=True)


def test_limit_of_zero_function_is_zero():
    vals = limit_small_s(constant(0.0), 0.0, [0.2, 0.1, 0.05])
    assert vals == [0.0, 0.0, 0.0]
