import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agesirs import _kernels
from agesirs.control import adjoint_rhs
from agesirs.dynamics import integrate_costates, integrate_states, simulate
from agesirs.integrator import (
    IntegrationError,
    TimeGrid,
    Trajectory,
    rk4_backward,
    rk4_forward,
    sample_lookup,
)
from agesirs.model import FIG1_STATE, ControlPair, ModelParams, rhs
from agesirs.replicate import rk4_order

import oracles


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(0, 0, 10)
    with pytest.raises(ValueError):
        TimeGrid(0, 1, 0)
    with pytest.raises(ValueError):
        TimeGrid(0, math.inf, 10)
    with pytest.raises(ValueError):
        TimeGrid.with_step(0, 1, 0.3)
    g = TimeGrid.with_step(0, 100, 0.01)
    assert g.n_steps == 10000 and g.times[-1] == pytest.approx(100)


def test_constant_field_is_exact():
    traj = rk4_forward(lambda t, y: np.array([2.0]), [1.0], TimeGrid(0, 3, 7))
    assert traj.samples[-1, 0] == pytest.approx(7.0, rel=1e-14)


def test_exponential_error_small():
    traj = rk4_forward(lambda t, y: y, [1.0], TimeGrid(0, 1, 100))
    assert abs(traj.samples[-1, 0] - math.e) < 1e-8


def test_matches_reference_rk4():
    f = lambda t, y: np.array([y[1], -y[0] + math.sin(t)])
    traj = rk4_forward(f, [1.0, 0.0], TimeGrid(0, 5, 50))
    np.testing.assert_allclose(traj.samples, oracles.rk4_reference(f, [1.0, 0.0], 0, 5, 50), rtol=1e-12, atol=1e-13)


def test_backward_of_forward_returns_start():
    g = TimeGrid(0, 2, 400)
    f = lambda t, y: np.array([-0.5 * y[0] + t])
    fwd = rk4_forward(f, [3.0], g)
    back = rk4_backward(f, fwd.samples[-1], g)
    assert back.samples[0, 0] == pytest.approx(3.0, abs=1e-10)
    assert back.samples[-1, 0] == fwd.samples[-1, 0]


def test_order_of_convergence():
    assert 3.8 <= rk4_order() <= 4.2


def test_non_finite_raises_with_step():
    with pytest.raises(IntegrationError) as err, np.errstate(over="ignore"):
        rk4_forward(lambda t, y: y * y, [1.0], TimeGrid(0, 10, 10))
    assert err.value.step is not None


def test_trajectory_rejects_wrong_length_and_nan():
    g = TimeGrid(0, 1, 4)
    with pytest.raises(ValueError):
        Trajectory(g, np.zeros((4, 6)))
    with pytest.raises(ValueError):
        Trajectory(g, np.full((5, 6), np.nan))


def test_sample_lookup():
    g = TimeGrid(0, 1, 4)
    traj = Trajectory(g, np.arange(5.0))
    assert sample_lookup(traj, 0.26)[0] == 1.0
    with pytest.raises(ValueError):
        sample_lookup(traj, 1.5)


def test_compiled_state_pass_agrees_with_generic_rk4():
    p = ModelParams()
    g = TimeGrid(0, 5, 2500)
    fast = integrate_states(p, FIG1_STATE, g)
    slow = rk4_forward(lambda t, y: rhs(y, p), FIG1_STATE.as_array(), g).samples
    np.testing.assert_allclose(fast, slow, rtol=1e-11, atol=1e-11)


def test_compiled_costate_pass_agrees_with_generic_rk4():
    p = ModelParams()
    g = TimeGrid(0, 2, 1000)
    u = ControlPair(0.3, 0.6)
    X = integrate_states(p, FIG1_STATE, g, u.u11, u.u12)
    fast = integrate_costates(p, X, g, u.u11, u.u12)
    times = g.times

    def state_at(t):
        return np.array([np.interp(t, times, X[:, i]) for i in range(6)])

    slow = rk4_backward(lambda t, lam: adjoint_rhs(state_at(t), lam, u, p), np.zeros(6), g).samples
    np.testing.assert_allclose(fast, slow, rtol=1e-10, atol=1e-10)
    assert fast[-1].tolist() == [0.0] * 6


def test_time_varying_controls_match_interpolated_generic():
    p = ModelParams()
    g = TimeGrid(0, 2, 1000)
    u1 = 0.5 + 0.4 * np.sin(g.times)
    u2 = 0.5 + 0.4 * np.cos(3 * g.times)
    fast = integrate_states(p, FIG1_STATE, g, u1, u2)
    slow = rk4_forward(
        lambda t, y: rhs(y, p, ControlPair(np.interp(t, g.times, u1), np.interp(t, g.times, u2))),
        FIG1_STATE.as_array(),
        g,
    ).samples
    np.testing.assert_allclose(fast, slow, rtol=1e-10, atol=1e-10)


def test_kernel_rhs_matches_oracle():
    x = np.array([3.0, 4.0, 5.0, 6.0, 7.0, 8.0])
    out = np.empty(6)
    _kernels.model_rhs(x, 0.2, 0.3, ModelParams().as_array(), out)
    np.testing.assert_allclose(out, oracles.field_vec(x, oracles.TABLE2, 0.2, 0.3), rtol=1e-13)


def test_coarse_step_blows_up_and_refinement_recovers():
    p = ModelParams()
    coarse = TimeGrid(0, 100, 1000)
    with pytest.raises(IntegrationError):
        integrate_states(p, FIG1_STATE, coarse)
    traj = simulate(p, FIG1_STATE, coarse, max_refine=6)
    assert traj.grid == coarse and np.all(traj.samples >= 0)
    fine = integrate_states(p, FIG1_STATE, TimeGrid(0, 100, 256000))[::256]
    np.testing.assert_allclose(traj.samples, fine, rtol=1e-4, atol=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.floats(-2.0, 2.0), st.integers(20, 200))
def test_linear_ode_error_shrinks_with_steps(rate, n):
    exact = math.exp(rate)
    e1 = abs(rk4_forward(lambda t, y: rate * y, [1.0], TimeGrid(0, 1, n)).samples[-1, 0] - exact)
    e2 = abs(rk4_forward(lambda t, y: rate * y, [1.0], TimeGrid(0, 1, 2 * n)).samples[-1, 0] - exact)
    # below a few ulps the errors are pure rounding
    assert e2 <= e1 + 1e-13
