import math

import numpy as np
import pytest

from fracext.errors import MissingDerivative, NonConvergent
from fracext.extension import (
    ExtensionQuery,
    LimitSchedule,
    backward_extend,
    compose_check,
    extend,
    extend_batch,
    extension_constant,
    flux_limit,
    trace_limit,
)
from fracext.functions import bump, constant, sine
from fracext.quadrature import HolderFunction, Order, Side, marchaud


def test_query_requires_positive_x():
    with pytest.raises(ValueError):
        ExtensionQuery(0.0, 0.0, Order(0.5), sine())


def test_schedule_validation():
    with pytest.raises(ValueError):
        LimitSchedule((0.5, 0.5))
    with pytest.raises(ValueError):
        LimitSchedule((0.5, 1e-5))
    sched = LimitSchedule.geometric(0.5, 0.5, 8)
    assert len(sched.x_values) == 8
    assert sched.x_values[0] == 0.5


def test_extend_constant_is_exact():
    for x in (0.01, 1.0, 30.0):
        assert extend(ExtensionQuery(x, 0.7, Order(0.4), constant(2.5))) == 2.5


def test_extend_continuity_at_boundary():
    val = extend(ExtensionQuery(1e-3, 1.0, Order(0.5), sine()))
    assert abs(val - math.sin(1.0)) <= 1e-3


def test_extend_far_field_decay():
    val = extend(ExtensionQuery(50.0, 0.0, Order(0.5), bump()))
    assert abs(val) <= 1e-6


def test_extend_respects_range_of_data():
    # kernel is a probability density: inf f <= U <= sup f
    rng = np.random.default_rng(9)
    f = sine()
    for _ in range(8):
        x = rng.uniform(1e-3, 10.0)
        t = rng.uniform(-3.0, 3.0)
        s = Order(rng.uniform(0.1, 0.9))
        u = extend(ExtensionQuery(x, t, s, f))
        assert -1.0 - 1e-7 <= u <= 1.0 + 1e-7


def test_extend_positivity():
    rng = np.random.default_rng(10)
    f = bump()
    for _ in range(8):
        u = extend(ExtensionQuery(rng.uniform(0.01, 5.0), rng.uniform(-2, 2), Order(0.3), f))
        assert u >= -1e-10


def test_extend_batch_matches_pointwise():
    f = sine()
    xs = np.array([0.0, 0.3, 1.2, 4.0])
    got = extend_batch(f, xs, 0.6, Order(0.5))
    assert got[0] == f.value_at(0.6)
    for x, v in zip(xs[1:], got[1:]):
        assert v == pytest.approx(extend(ExtensionQuery(float(x), 0.6, Order(0.5), f)), abs=2e-6)


def test_interior_equation_residual_second_order():
    # dU/dt - (1-2s)/x dU/dx - d2U/dx2 -> 0 at second order in the stencil
    f = sine()
    s = Order(0.3)
    x0, t0 = 1.2, 0.4

    def u(x, t):
        return extend(ExtensionQuery(x, t, s, f))

    resid = []
    for h in (0.02, 0.01):
        ut = (u(x0, t0 + h) - u(x0, t0 - h)) / (2 * h)
        ux = (u(x0 + h, t0) - u(x0 - h, t0)) / (2 * h)
        uxx = (u(x0 + h, t0) - 2 * u(x0, t0) + u(x0 - h, t0)) / (h * h)
        resid.append(abs(ut - (1 - 2 * s.s) / x0 * ux - uxx))
    assert resid[0] / resid[1] > 3.0


def test_trace_constant_table_exact_zero():
    res = trace_limit(constant(3.0), 0.5, Order(0.5))
    assert res.value == 0.0
    assert all(v == 0.0 for _, v in res.table)


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
def test_trace_matches_quadrature_route(s):
    f = sine()
    t = 0.7
    m = marchaud(f, t, Order(s)).value
    tr = trace_limit(f, t, Order(s))
    assert abs(tr.value - m) <= 1e-4 * (1.0 + abs(m))


def test_trace_bump_matches_quadrature_route():
    f = bump()
    m = marchaud(f, 0.4, Order(0.7)).value
    tr = trace_limit(f, 0.4, Order(0.7))
    assert abs(tr.value - m) <= 1e-4 * (1.0 + abs(m))


@pytest.mark.parametrize("s", [0.1, 0.4, 0.9])
def test_trace_shifted_bump_matches_quadrature_route(s):
    from fracext.functions import shifted_bump

    f = shifted_bump(center=2.0)
    m = marchaud(f, 2.3, Order(s)).value
    tr = trace_limit(f, 2.3, Order(s))
    assert abs(tr.value - m) <= 1e-4 * (1.0 + abs(m))


def test_trace_observed_order_matches_expansion():
    # leading correction of the mollified trace is x^(2-2s)
    tr = trace_limit(sine(), 0.0, Order(0.9))
    assert tr.observed_order == pytest.approx(2.0 - 2.0 * 0.9, abs=0.05)


def test_trace_without_extrapolation_needs_loose_tol():
    sched = LimitSchedule.geometric(0.5, 0.5, 8, extrapolation="none")
    with pytest.raises(NonConvergent):
        trace_limit(sine(), 0.0, Order(0.8), sched, tol=1e-6)
    res = trace_limit(sine(), 0.0, Order(0.2), sched, tol=0.05)
    assert res.value == pytest.approx(marchaud(sine(), 0.0, Order(0.2)).value, abs=0.05)


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
def test_flux_trace_ratio_is_2s(s):
    f = sine()
    t = 0.7
    tr = trace_limit(f, t, Order(s)).value
    fl = flux_limit(f, t, Order(s))
    assert fl.raw / tr == pytest.approx(2.0 * s, rel=1e-4)
    assert fl.corrected == pytest.approx(tr, rel=1e-4)


def test_flux_constant_is_zero():
    res = flux_limit(constant(1.5), 0.0, Order(0.4))
    assert res.raw == 0.0 and res.corrected == 0.0


def test_backward_extend_constant():
    assert backward_extend(constant(2.0), 0.7, 0.1, Order(0.6)) == 2.0


def test_backward_matches_time_reflected_forward():
    # U_-(x, t) = U(x, -t) with data t -> f(-t)
    f = sine()
    mirrored = HolderFunction(fn=lambda u: f(-u), bound=f.bound, holder_const=f.holder_const)
    rng = np.random.default_rng(21)
    for _ in range(4):
        x = rng.uniform(0.05, 2.0)
        t = rng.uniform(-2.0, 2.0)
        a = backward_extend(f, x, t, Order(0.3))
        b = extend(ExtensionQuery(x, -t, Order(0.3), mirrored))
        assert a == pytest.approx(b, abs=1e-9)


@pytest.mark.parametrize("s", [0.3, 0.7])
def test_backward_trace_is_right_derivative(s):
    f = sine()
    m = marchaud(f, 0.0, Order(s), side=Side.RIGHT).value
    tr = trace_limit(f, 0.0, Order(s), side=Side.RIGHT)
    assert abs(tr.value - m) <= 1e-4 * (1.0 + abs(m))


def test_extension_constant_value():
    assert extension_constant(0.5) == pytest.approx(2.0 * math.sqrt(math.pi))


def test_compose_requires_derivative():
    plain = HolderFunction(fn=lambda t: np.sin(t), bound=1.0, holder_const=1.0)
    with pytest.raises(MissingDerivative):
        compose_check(plain, 0.0, Order(0.5))


def test_compose_constant_gives_zero():
    res = compose_check(constant(2.0), 0.0, Order(0.5), grid_radius=50.0, grid_step=0.2)
    assert abs(res.value) < 1e-12


def test_compose_sine_recovers_derivative():
    res = compose_check(sine(), 0.0, Order(0.5), grid_radius=200.0)
    assert abs(res.value - 1.0) <= 1e-2 * 2.0


def test_compose_grid_too_narrow_gate():
    from fracext.errors import GridTooNarrow

    with pytest.raises(GridTooNarrow):
        compose_check(sine(), 0.0, Order(0.5), grid_radius=50.0, grid_step=0.2,
                      tail_tolerance=1e-3)
