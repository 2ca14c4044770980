"""The full reproduction battery: one check per acceptance criterion plus the data behind it."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid

from agesirs import outputs
from agesirs.config import RunConfig, config_echo
from agesirs.control import (
    STRATEGIES,
    ControlBounds,
    ControlSchedule,
    CostWeights,
    adjoint_rhs,
    cost,
    gradient_check,
    hamiltonian,
    solve_states,
)
from agesirs.dynamics import simulate
from agesirs.experiments import (
    CSV_FIELDS,
    PUBLISHED_AVERAGES,
    ExperimentRecord,
    StrategyOutcome,
    alpha_sweep,
    r0_sweep,
    solve_strategy,
)
from agesirs.integrator import TimeGrid, rk4_forward
from agesirs.model import (
    CONTROL_STATE,
    FIG1_STATE,
    PRESETS,
    ControlPair,
    ModelParams,
    StateVector,
    central_difference_jacobian,
    check_feasible,
    numerical_jacobian,
)
from agesirs.reproduction import disease_free_equilibrium, r0
from agesirs.sensitivity import full_table5_run

log = logging.getLogger(__name__)

CRITERION_R0_GRID = (1.2, 1.4, 2.0, 3.0, 5.0)
CRITERION_ALPHAS = (0.0, 0.4, 1.0, 2.0)
PUBLISHED_E0_TABLE3 = (0.1157, 0.0, 0.0, 0.00039, 0.0, 0.0)


@dataclass(frozen=True)
class CheckResult:
    criterion: int
    title: str
    passed: bool
    expected: str
    observed: str

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def line(self) -> str:
        return f"[{self.status}] criterion {self.criterion}: {self.title} | expected {self.expected} | observed {self.observed}"


def _g(x: float) -> str:
    return f"{x:.6g}"


def random_params(rng: np.random.Generator) -> ModelParams:
    """A valid parameter draw whose rates keep RK4 stable at h = 0.01."""
    return ModelParams(
        b1=rng.uniform(0.5, 10.0),
        delta1=rng.uniform(0.0, 0.2),
        delta2=rng.uniform(0.0, 0.2),
        beta1=rng.uniform(0.0, 0.05),
        beta2=rng.uniform(0.0, 0.05),
        beta3=rng.uniform(0.0, 0.05),
        beta4=rng.uniform(0.0, 0.05),
        mu=rng.uniform(0.05, 1.0),
        d1=rng.uniform(0.0, 0.1),
        d2=rng.uniform(0.0, 0.1),
        u11=rng.uniform(0.0, 0.5),
        u12=rng.uniform(0.0, 0.5),
        alpha=rng.uniform(0.0, 2.0),
        m=rng.uniform(0.0, 0.01),
    )


def random_state(rng: np.random.Generator, scale: float = 100.0) -> StateVector:
    return StateVector.from_array(rng.uniform(0.0, scale, size=6))


def adjoint_fd_error(params: ModelParams, x, lam, controls: ControlPair) -> float:
    """Relative max-norm gap between the costate field and ``-dH/dx`` by central differences."""
    # Control costs do not depend on x, so any weights give the same gradient.
    weights = CostWeights(1.0, 1.0)
    # H is quadratic in x apart from the treatment term, so central differences
    # are nearly exact and a larger step mostly cuts roundoff.
    x = np.asarray(x, dtype=float)
    grad = central_difference_jacobian(
        lambda y: np.array([hamiltonian(y, lam, controls, params, weights)]), x, 1e-4 * np.maximum(1.0, np.abs(x))
    )[0]
    analytic = adjoint_rhs(x, lam, controls, params)
    return float(np.max(np.abs(analytic + grad)) / max(np.max(np.abs(grad)), 1e-300))


def rk4_order(rate: float = -1.0, T: float = 1.0, steps=(10, 20, 40, 80)) -> float:
    """Observed order of the generic RK4 on ``y' = rate * y`` (least-squares log-log slope)."""
    errors = []
    for n in steps:
        traj = rk4_forward(lambda t, y: rate * y, [1.0], TimeGrid(0.0, T, n))
        errors.append(abs(traj.samples[-1, 0] - math.exp(rate * T)))
    slope = np.polyfit(np.log(np.asarray(steps, dtype=float)), np.log(errors), 1)[0]
    return float(-slope)


def _check_r0() -> CheckResult:
    a = r0(PRESETS["table3"]).r0
    b = r0(PRESETS["table4"]).r0
    return CheckResult(
        1, "R0 under Table 3 and Table 4", abs(a - 0.98) <= 0.01 and abs(b - 2.7615) <= 0.005,
        "0.98 +- 0.01; 2.7615 +- 0.005", f"{_g(a)}; {_g(b)}",
    )


def _check_dfe() -> CheckResult:
    e0 = disease_free_equilibrium(PRESETS["table3"]).as_array()
    gap = float(np.max(np.abs(e0 - np.array(PUBLISHED_E0_TABLE3))))
    return CheckResult(
        2, "disease-free equilibrium under Table 3", gap <= 5e-4,
        "(0.1157, 0, 0, 0.00039, 0, 0) within 5e-4",
        "(" + ", ".join(_g(v) for v in e0) + f"), max gap {gap:.3g}",
    )


def _check_stability(h: float) -> CheckResult:
    t3, t4 = PRESETS["table3"], PRESETS["table4"]
    e3 = disease_free_equilibrium(t3)
    e4 = disease_free_equilibrium(t4)
    re3 = np.linalg.eigvals(numerical_jacobian(e3, t3)).real
    re4 = np.linalg.eigvals(numerical_jacobian(e4, t4)).real
    grid = TimeGrid.with_step(0.0, 500.0, h)
    traj = simulate(t3, FIG1_STATE, grid, max_refine=4)
    d0 = float(np.linalg.norm(traj.samples[0] - e3.as_array()))
    dT = float(np.linalg.norm(traj.samples[-1] - e3.as_array()))
    ok = bool(np.all(re3 < 0) and np.any(re4 > 0) and dT < d0)
    return CheckResult(
        3, "stability of E0 switches with R0", ok,
        "max Re < 0 (Table 3); max Re > 0 (Table 4); |x(500)-E0| < |x(0)-E0|",
        f"max Re {_g(re3.max())}; {_g(re4.max())}; distance {_g(d0)} -> {_g(dT)}",
    )


def _check_feasibility(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    grid = TimeGrid.with_step(0.0, 100.0, 0.01)
    failures = []
    for k in range(50):
        params = random_params(rng)
        y0 = random_state(rng)
        report = check_feasible(simulate(params, y0, grid), params)
        if not report.passed:
            failures.append(f"draw {k}: {report.describe()}")
    return CheckResult(
        4, "positivity and boundedness on 50 random draws", not failures,
        "50/50 feasible", f"{50 - len(failures)}/50 feasible" + (f" ({failures[0]})" if failures else ""),
    )


def _check_adjoint(seed: int, grid: TimeGrid) -> CheckResult:
    rng = np.random.default_rng(seed)
    base = ModelParams()
    worst_field = 0.0
    for _ in range(100):
        x = rng.uniform(0.0, 100.0, size=6)
        lam = rng.uniform(-10.0, 10.0, size=6)
        controls = ControlPair(*rng.uniform(0.0, 1.0, size=2))
        worst_field = max(worst_field, adjoint_fd_error(base, x, lam, controls))

    t = grid.times
    worst_grad = 0.0
    for _ in range(10):
        level = rng.uniform(0.2, 0.8, size=2)
        controls = ControlSchedule(grid, np.full(t.size, level[0]), np.full(t.size, level[1]))
        freq = rng.uniform(0.01, 0.2, size=2)
        phase = rng.uniform(0.0, 2 * math.pi, size=2)
        amp = rng.uniform(0.05, 0.15, size=2)
        direction = (amp[0] * np.sin(freq[0] * t + phase[0]), amp[1] * np.sin(freq[1] * t + phase[1]))
        report = gradient_check(base, CONTROL_STATE, grid, CostWeights(), ControlBounds(), controls, direction)
        worst_grad = max(worst_grad, report.relative_error)
    return CheckResult(
        5, "costate field and adjoint gradient", worst_field < 1e-6 and worst_grad < 1e-3,
        "field rel. error < 1e-6; gradient rel. error < 1e-3",
        f"{worst_field:.3g}; {worst_grad:.3g}",
    )


def _strategy_checks(outcomes: dict[str, StrategyOutcome], zero_J: float, half_J: dict) -> list[CheckResult]:
    i1 = {s: o.avg_I1 for s, o in outcomes.items()}
    i2 = {s: o.avg_I2 for s, o in outcomes.items()}
    order_i2 = sorted(i2, key=i2.get)
    order_i1 = sorted(i1, key=i1.get)
    want_i2 = ["u12-only", "both", "u11-only", "none"]
    want_i1 = ["both", "u11-only", "u12-only", "none"]
    c6 = CheckResult(
        6, "strategy rank orders of average I2 and I1", order_i2 == want_i2 and order_i1 == want_i1,
        f"I2: {' < '.join(want_i2)}; I1: {' < '.join(want_i1)}",
        f"I2: {' < '.join(order_i2)} ({', '.join(_g(i2[s]) for s in order_i2)}); "
        f"I1: {' < '.join(order_i1)} ({', '.join(_g(i1[s]) for s in order_i1)})",
    )
    bad = [
        s for s, o in outcomes.items()
        if s != "none" and not (o.J <= zero_J and o.J <= half_J[s])
    ]
    c7 = CheckResult(
        7, "optimised cost beats zero and half-bound controls", not bad,
        "J(u*) <= J(0) and J(u*) <= J(bound/2) for every strategy",
        "all strategies" if not bad else f"violated for {', '.join(bad)}",
    )
    return [c6, c7]


def _check_r0_sweep(study) -> CheckResult:
    i1 = study.curve("I1").burdens
    i2 = study.curve("I2").burdens
    xs = study.curve("I1").x_values
    problems = []
    for k, x in enumerate(xs):
        lowest = min(i2, key=lambda s: i2[s][k])
        if lowest != "u12-only":
            problems.append(f"I2 minimum at r0={x:g} is {lowest}")
    for x in (3.0, 5.0):
        k = xs.index(x)
        if not i1["u11-only"][k] < i1["u12-only"][k]:
            problems.append(f"u11-only does not beat u12-only on I1 at r0={x:g}")
    k = xs.index(1.2)
    if not i1["u11-only"][k] > i1["u12-only"][k]:
        problems.append("u11-only does not lose to u12-only on I1 at r0=1.2")
    observed = "; ".join(problems) if problems else "all claims hold"
    return CheckResult(
        8, "burden against R0", not problems,
        "u12-only lowest I2 burden everywhere; u11 < u12 on I1 at r0 3,5; u11 > u12 at 1.2",
        observed,
    )


def _check_alpha(study) -> CheckResult:
    burdens = study.curve("total", "r0=3").burdens["both"]
    ok = all(b2 >= b1 for b1, b2 in zip(burdens, burdens[1:]))
    return CheckResult(
        9, "burden non-decreasing in alpha (both, r0 = 3)", ok,
        "non-decreasing over alpha 0, 0.4, 1, 2", ", ".join(_g(b) for b in burdens),
    )


_SEPARATED = (
    ("u11", 0.0, 0.5), ("beta1", 0.0, 1.33), ("mu", 0.0, 0.5),
    ("m", 0.0, 0.00182), ("m", 0.00182, 1.0),
    ("delta1", 0.0, 0.0714), ("delta1", 0.0714, 1.0),
    ("delta2", 0.0, 0.0714), ("delta2", 0.0714, 1.0),
    ("beta4", 0.0, 0.5), ("beta4", 0.5, 1.0),
)


def _check_sensitivity(table) -> CheckResult:
    wrong = [table.find(*key) for key in _SEPARATED if not table.find(*key).agrees]
    observed = f"agreement {sum(r.agrees for r in table.rows)}/{len(table.rows)} = {table.agreement:.3f}"
    if wrong:
        observed += "; disagrees on " + ", ".join(f"{r.param} [{r.lo:g}, {r.hi:g}] (score {r.score:.3g})" for r in wrong)
    return CheckResult(
        10, "sensitivity verdicts on strongly separated rows", not wrong,
        "u11 [0,0.5], beta1 [0,1.33], mu [0,0.5] sensitive; m, delta1, delta2, beta4 insensitive",
        observed,
    )


def _check_order() -> CheckResult:
    order = rk4_order()
    return CheckResult(
        11, "RK4 convergence order", 3.8 <= order <= 4.2, "order in [3.8, 4.2]", f"{order:.4f}"
    )


def run_battery(config: RunConfig, out_dir: Path) -> list[CheckResult]:
    """Run every check, writing data files and the comparison report under ``out_dir``."""
    out_dir = Path(out_dir)
    grid = config.grid
    base = config.params
    y0 = config.y0 or CONTROL_STATE
    w, b, s = config.weights, config.bounds, config.sweep_settings
    checks = [_check_r0(), _check_dfe(), _check_stability(grid.h)]
    outputs.write_json(
        out_dir / "r0.json",
        {name: {v: r0(PRESETS[name], v).to_dict() for v in ("with-control", "no-control")} for name in PRESETS},
    )
    checks.append(_check_feasibility(config.seed))
    checks.append(_check_adjoint(config.seed, grid))

    solutions = {name: solve_strategy(base, y0, grid, w, b, name, s) for name in STRATEGIES}
    outcomes = {name: StrategyOutcome.from_solution(sol) for name, sol in solutions.items()}
    half_J = {}
    for name in STRATEGIES[1:]:
        sched = ControlSchedule.constant(
            solutions[name].states.grid,
            b.u11_max / 2 if name in ("u11-only", "both") else 0.0,
            b.u12_max / 2 if name in ("u12-only", "both") else 0.0,
        )
        half_J[name] = cost(solve_states(base, y0, sched.grid, sched), sched, w)
    checks.extend(_strategy_checks(outcomes, outcomes["none"].J, half_J))
    _write_strategy_outputs(out_dir, solutions, outcomes, base.alpha)

    r0_study = r0_sweep(base, CRITERION_R0_GRID, ["u11-only", "u12-only", "both"], y0, grid, w, b, s)
    checks.append(_check_r0_sweep(r0_study))
    alpha_study = alpha_sweep(base, CRITERION_ALPHAS, "both", (3.0,), y0, grid, w, b, s)
    checks.append(_check_alpha(alpha_study))
    write_study(out_dir, "r0_sweep", r0_study)
    write_study(out_dir, "alpha_sweep", alpha_study)

    table = full_table5_run(base, config.y0 or FIG1_STATE, grid)
    write_classification(out_dir / "sensitivity_table.csv", table)
    checks.append(_check_sensitivity(table))
    checks.append(_check_order())

    again = solve_strategy(base, y0, grid, w, b, "both", s)
    same = (
        np.array_equal(again.schedule.u11, solutions["both"].schedule.u11)
        and np.array_equal(again.schedule.u12, solutions["both"].schedule.u12)
        and again.cost == solutions["both"].cost
    )
    checks.append(CheckResult(
        12, "repeated solve is bit-identical", same, "identical controls and cost", "identical" if same else "differs",
    ))

    all_converged = all(o.converged for o in outcomes.values()) and r0_study.all_converged and alpha_study.all_converged
    outputs.write_csv(
        out_dir / "report.csv",
        ["criterion", "title", "status", "expected", "observed"],
        [(c.criterion, c.title, c.status, c.expected, c.observed) for c in checks],
    )
    outputs.write_json(
        out_dir / "summary.json",
        {
            "command": "replicate-paper",
            "config": config_echo(config),
            "all_converged": all_converged,
            "checks": [
                {"criterion": c.criterion, "title": c.title, "passed": c.passed,
                 "expected": c.expected, "observed": c.observed}
                for c in checks
            ],
        },
    )
    return checks


def _write_strategy_outputs(
    out_dir: Path, solutions, outcomes: dict[str, StrategyOutcome], alpha: float
) -> None:
    rows = []
    for name, o in outcomes.items():
        rows.append([
            name, o.avg_I1, PUBLISHED_AVERAGES["avg_I1"][name], o.avg_I2, PUBLISHED_AVERAGES["avg_I2"][name],
            o.avg_R1, PUBLISHED_AVERAGES["avg_R1"][name], o.avg_R2, PUBLISHED_AVERAGES["avg_R2"][name],
            o.cumulative_burden, o.J, o.iterations, o.converged,
        ])
    outputs.write_csv(
        out_dir / "strategy_comparison.csv",
        ["strategy", "avg_I1", "published_avg_I1", "avg_I2", "published_avg_I2", "avg_R1", "published_avg_R1",
         "avg_R2", "published_avg_R2", "burden", "J", "iters", "converged"],
        rows,
    )
    write_records(
        out_dir / "strategy_records.csv",
        [ExperimentRecord.from_outcome("strategies", o, None, alpha) for o in outcomes.values()],
    )
    for name, sol in solutions.items():
        outputs.write_trajectory(
            out_dir / "trajectories" / f"{name}.csv",
            sol.states, sol.costates, (sol.schedule.u11, sol.schedule.u12),
        )
        X = sol.states.samples
        total = X[:, 1] + X[:, 4]
        cum = cumulative_trapezoid(total, dx=sol.states.grid.h, initial=0.0)
        idx = outputs.thin(len(cum), 1001)
        outputs.write_series(out_dir / "series" / f"cumulative_infected_{name}.csv", "t", "cumulative", sol.states.times[idx], cum[idx])


def write_records(path: Path, records: list[ExperimentRecord]) -> Path:
    return outputs.write_csv(path, CSV_FIELDS, [[getattr(r, f) for f in CSV_FIELDS] for r in records])


def write_study(out_dir: Path, study_name: str, study) -> None:
    write_records(out_dir / f"{study_name}.csv", study.records)
    for curve in study.curves:
        for strategy, values in curve.burdens.items():
            suffix = f"_{curve.label.replace('=', '')}" if curve.label else ""
            outputs.write_series(
                out_dir / "series" / f"{study_name}_{curve.quantity}_{strategy}{suffix}.csv",
                curve.x_name, "burden", curve.x_values, values,
            )


def write_classification(path: Path, table) -> Path:
    return outputs.write_csv(
        path,
        ["param", "lo", "hi", "step", "score", "sensitive", "paper_verdict"],
        [(r.param, r.lo, r.hi, r.step, r.score, r.sensitive, r.paper_verdict) for r in table.rows],
    )
