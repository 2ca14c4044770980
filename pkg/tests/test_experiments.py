import numpy as np
import pytest

from agesirs.control import ControlSchedule, CostWeights, cost
from agesirs.dynamics import integrate_states
from agesirs.experiments import (
    BurdenCurve,
    alpha_sweep,
    cumulative_burden,
    r0_sweep,
    scale_betas_to_r0,
    strategy_comparison,
)
from agesirs.integrator import TimeGrid, Trajectory
from agesirs.model import CONTROL_STATE, ModelParams
from agesirs.reproduction import r0

import oracles

GRID = TimeGrid(0, 100, 20000)


@pytest.fixture(scope="module")
def outcomes():
    return {o.strategy: o for o in strategy_comparison(grid=GRID)}


def test_burden_of_zero_and_constant_trajectories():
    g = TimeGrid(2, 12, 50)
    X = np.zeros((51, 6))
    assert cumulative_burden(Trajectory(g, X)) == 0.0
    X[:, 1] = 1.5
    X[:, 4] = 2.0
    assert cumulative_burden(Trajectory(g, X)) == pytest.approx(35.0, rel=1e-12)


def test_burden_equals_cost_without_control_terms():
    traj = Trajectory(GRID, integrate_states(ModelParams(), CONTROL_STATE, GRID, 0.0, 0.0))
    assert cumulative_burden(traj) == cost(traj, ControlSchedule.zeros(GRID), CostWeights())


def test_scale_to_baseline_is_identity():
    p = ModelParams()
    out = scale_betas_to_r0(p, r0(p, "no-control").r0)
    assert out.beta1 == pytest.approx(p.beta1, rel=1e-12)


@pytest.mark.parametrize("target", [1.2, 3.0, 7.0])
def test_scale_round_trips(target):
    out = scale_betas_to_r0(ModelParams(), target)
    assert abs(r0(out, "no-control").r0 - target) <= 1e-8
    ratio = out.beta2 / ModelParams().beta2
    assert out.beta1 / ModelParams().beta1 == pytest.approx(ratio, rel=1e-12)


def test_double_baseline():
    p = ModelParams(beta1=0.01, beta2=0.02, beta3=0.03, beta4=0.001, b1=1.0)
    base = r0(p, "no-control").r0
    assert r0(scale_betas_to_r0(p, 2 * base), "no-control").r0 == pytest.approx(2 * base, abs=1e-8)


def test_r0_increasing_in_scale():
    p = ModelParams()
    values = [oracles.r0_no_formula({**oracles.TABLE2, **{b: k * getattr(p, b) for b in ("beta1", "beta2", "beta3", "beta4")}}, False)
              for k in np.linspace(0.1, 3, 15)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_unreachable_target_rejected():
    with pytest.raises(ValueError):
        scale_betas_to_r0(ModelParams(beta1=0, beta2=0, beta3=0, beta4=0), 2.0)
    with pytest.raises(ValueError):
        scale_betas_to_r0(ModelParams(), -1.0)


def test_none_outcome_is_plain_integration(outcomes):
    X = integrate_states(ModelParams(), CONTROL_STATE, GRID, 0.0, 0.0)
    assert outcomes["none"].avg_I1 == pytest.approx(X[:, 1].mean(), rel=1e-14)
    assert outcomes["none"].avg_I2 == pytest.approx(X[:, 4].mean(), rel=1e-14)


def test_treatment_never_increases_burden(outcomes):
    for s in ("u11-only", "u12-only", "both"):
        assert outcomes[s].cumulative_burden <= outcomes["none"].cumulative_burden


def test_young_infective_rank_order(outcomes):
    order = sorted(outcomes, key=lambda s: outcomes[s].avg_I1)
    assert order == ["both", "u11-only", "u12-only", "none"]


def test_outcomes_are_non_negative(outcomes):
    for o in outcomes.values():
        assert min(o.avg_I1, o.avg_I2, o.avg_R1, o.avg_R2, o.cumulative_burden) >= 0


def test_r0_sweep_shapes_and_records():
    study = r0_sweep(ModelParams(), [1.5, 3.0], ["u11", "both"], grid=GRID)
    assert len(study.records) == 4 and study.all_converged
    for q in ("I1", "I2", "total"):
        curve = study.curve(q)
        assert set(curve.burdens) == {"u11-only", "both"} and len(curve.burdens["both"]) == 2
    total = study.curve("total").burdens["both"]
    parts = [a + b for a, b in zip(study.curve("I1").burdens["both"], study.curve("I2").burdens["both"])]
    assert total == pytest.approx(parts, rel=1e-12)


def test_alpha_sweep_zero_alpha_is_minimum():
    study = alpha_sweep(ModelParams(), [0.0, 0.5, 1.5], "both", [2.0, 4.0], grid=GRID)
    for curve in study.curves:
        values = curve.burdens["both"]
        assert values[0] == min(values)


def test_alpha_sweep_rejects_negative_alpha():
    with pytest.raises(ValueError):
        alpha_sweep(ModelParams(), [-0.1], "both", [2.0], grid=GRID)


def test_burden_curve_length_check():
    with pytest.raises(ValueError):
        BurdenCurve("r0", [1.0, 2.0], "total", {"both": [1.0]})
