"""Scripted treatment studies: strategy comparison, burden against R0 and against alpha."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from agesirs.control import (
    STRATEGIES,
    ControlBounds,
    ControlSolution,
    CostWeights,
    SweepSettings,
    forward_backward_sweep,
    normalize_strategy,
)
from agesirs.integrator import IntegrationError, TimeGrid, Trajectory
from agesirs.model import CONTROL_STATE, I1, I2, R1, R2, ModelParams, StateVector
from agesirs.reproduction import r0

log = logging.getLogger(__name__)

# Published time averages over t in [0, 100] for the replication scenario.
PUBLISHED_AVERAGES: dict[str, dict[str, float]] = {
    "avg_I2": {"u12-only": 0.7185, "both": 24.5626, "u11-only": 30.1420, "none": 32.6219},
    "avg_I1": {"both": 15.1129, "u11-only": 15.2773, "u12-only": 22.9808, "none": 31.9349},
    "avg_R1": {"u12-only": 34.9995, "both": 10.4040, "u11-only": 4.9834, "none": 4.9834},
    "avg_R2": {"u11-only": 20.4898, "both": 19.9415, "u12-only": 4.9833, "none": 4.9833},
}

DEFAULT_R0_GRID: tuple[float, ...] = tuple(round(1.1 + 0.1 * k, 1) for k in range(60))
DEFAULT_ALPHAS: tuple[float, ...] = (0.0, 0.4, 1.0, 2.0)
DEFAULT_ALPHA_R0S: tuple[float, ...] = (2.0, 3.0, 6.0)

CSV_FIELDS: tuple[str, ...] = (
    "study", "strategy", "r0_target", "alpha",
    "avg_I1", "avg_I2", "avg_R1", "avg_R2", "burden", "J", "converged",
)


def cumulative_burden(traj: Trajectory, columns: Sequence[int] = (I1, I2)) -> float:
    """Trapezoidal integral of the summed ``columns`` (default ``I1 + I2``) over the grid."""
    series = traj.samples[:, list(columns)].sum(axis=1)
    return float(np.trapezoid(series, dx=traj.grid.h))


@dataclass(frozen=True)
class StrategyOutcome:
    strategy: str
    avg_I1: float
    avg_I2: float
    avg_R1: float
    avg_R2: float
    cumulative_burden: float
    burden_I1: float
    burden_I2: float
    J: float
    converged: bool
    iterations: int

    @classmethod
    def from_solution(cls, sol: ControlSolution) -> StrategyOutcome:
        X = sol.states.samples
        return cls(
            strategy=sol.strategy,
            avg_I1=float(X[:, I1].mean()),
            avg_I2=float(X[:, I2].mean()),
            avg_R1=float(X[:, R1].mean()),
            avg_R2=float(X[:, R2].mean()),
            cumulative_burden=cumulative_burden(sol.states),
            burden_I1=cumulative_burden(sol.states, (I1,)),
            burden_I2=cumulative_burden(sol.states, (I2,)),
            J=sol.cost,
            converged=sol.converged,
            iterations=sol.iterations,
        )


@dataclass(frozen=True)
class ExperimentRecord:
    """One row of the long-form study table."""

    study: str
    strategy: str
    r0_target: float | None
    alpha: float
    avg_I1: float
    avg_I2: float
    avg_R1: float
    avg_R2: float
    burden: float
    J: float
    converged: bool

    @classmethod
    def from_outcome(
        cls, study: str, outcome: StrategyOutcome, r0_target: float | None, alpha: float
    ) -> ExperimentRecord:
        return cls(
            study=study,
            strategy=outcome.strategy,
            r0_target=r0_target,
            alpha=alpha,
            avg_I1=outcome.avg_I1,
            avg_I2=outcome.avg_I2,
            avg_R1=outcome.avg_R1,
            avg_R2=outcome.avg_R2,
            burden=outcome.cumulative_burden,
            J=outcome.J,
            converged=outcome.converged,
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BurdenCurve:
    """Burden per strategy along a swept quantity (``r0`` or ``alpha``)."""

    x_name: str
    x_values: list[float]
    quantity: str
    burdens: dict[str, list[float]]
    label: str = ""

    def __post_init__(self):
        for name, values in self.burdens.items():
            if len(values) != len(self.x_values):
                raise ValueError(f"burden series {name!r} has {len(values)} values, expected {len(self.x_values)}")


@dataclass(frozen=True)
class StudyResult:
    records: list[ExperimentRecord]
    curves: list[BurdenCurve] = field(default_factory=list)
    outcomes: dict[tuple, StrategyOutcome] = field(default_factory=dict, repr=False)

    def curve(self, quantity: str, label: str = "") -> BurdenCurve:
        for c in self.curves:
            if c.quantity == quantity and c.label == label:
                return c
        raise KeyError((quantity, label))

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.records)


def solve_strategy(
    params: ModelParams,
    y0: StateVector,
    grid: TimeGrid,
    weights: CostWeights,
    bounds: ControlBounds,
    strategy: str,
    settings: SweepSettings,
    max_refine: int = 3,
) -> ControlSolution:
    """Forward-backward sweep, halving the step when a pass blows up."""
    for level in range(max_refine + 1):
        fine = grid.refined(2**level)
        try:
            return forward_backward_sweep(params, y0, fine, weights, bounds, strategy, settings)
        except IntegrationError as exc:
            if level == max_refine:
                raise
            log.info("sweep %s blew up at h=%g, refining: %s", strategy, fine.h, exc)
    raise AssertionError("unreachable")


def strategy_comparison(
    params: ModelParams | None = None,
    y0: StateVector = CONTROL_STATE,
    grid: TimeGrid | None = None,
    weights: CostWeights = CostWeights(),
    bounds: ControlBounds = ControlBounds(),
    settings: SweepSettings = SweepSettings(),
    strategies: Sequence[str] = STRATEGIES,
) -> list[StrategyOutcome]:
    params = params or ModelParams()
    grid = grid or TimeGrid()
    return [
        StrategyOutcome.from_solution(solve_strategy(params, y0, grid, weights, bounds, s, settings))
        for s in (normalize_strategy(s) for s in strategies)
    ]


def _scaled(params: ModelParams, k: float) -> ModelParams:
    return params.replace(
        beta1=k * params.beta1, beta2=k * params.beta2, beta3=k * params.beta3, beta4=k * params.beta4
    )


def scale_betas_to_r0(params: ModelParams, target_r0: float) -> ModelParams:
    """Scale all four transmission rates by one factor so the no-control R0 hits ``target_r0``."""
    if not target_r0 > 0:
        raise ValueError(f"target R0 must be > 0, got {target_r0}")
    base = r0(params, "no-control").r0
    if not base > 0:
        raise ValueError("baseline R0 is zero; no beta scaling can reach the target")

    def gap(k: float) -> float:
        return r0(_scaled(params, k), "no-control").r0 - target_r0

    hi = 1.0
    while gap(hi) < 0:
        hi *= 2.0
        if hi > 1e15:
            raise ValueError(f"target R0 {target_r0} is unreachable by beta scaling")
    k = 1.0 if gap(1.0) == 0 else optimize.brentq(gap, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    scaled = _scaled(params, k)
    achieved = r0(scaled, "no-control").r0
    if abs(achieved - target_r0) > 1e-8 * max(1.0, target_r0):
        raise ValueError(f"beta scaling reached R0 {achieved}, not {target_r0}")
    return scaled


def r0_sweep(
    base: ModelParams | None = None,
    r0_values: Sequence[float] = DEFAULT_R0_GRID,
    strategies: Sequence[str] = STRATEGIES,
    y0: StateVector = CONTROL_STATE,
    grid: TimeGrid | None = None,
    weights: CostWeights = CostWeights(),
    bounds: ControlBounds = ControlBounds(),
    settings: SweepSettings = SweepSettings(),
) -> StudyResult:
    """Burden of ``I1``, ``I2`` and ``I1 + I2`` per strategy as R0 is varied."""
    base = base or ModelParams()
    grid = grid or TimeGrid()
    strategies = [normalize_strategy(s) for s in strategies]
    records: list[ExperimentRecord] = []
    outcomes: dict[tuple, StrategyOutcome] = {}
    series = {q: {s: [] for s in strategies} for q in ("I1", "I2", "total")}
    for target in r0_values:
        params = scale_betas_to_r0(base, target)
        for s in strategies:
            out = StrategyOutcome.from_solution(
                solve_strategy(params, y0, grid, weights, bounds, s, settings)
            )
            outcomes[(target, s)] = out
            records.append(ExperimentRecord.from_outcome("r0", out, target, params.alpha))
            series["I1"][s].append(out.burden_I1)
            series["I2"][s].append(out.burden_I2)
            series["total"][s].append(out.cumulative_burden)
    curves = [BurdenCurve("r0", list(r0_values), q, series[q]) for q in ("I1", "I2", "total")]
    return StudyResult(records, curves, outcomes)


def alpha_sweep(
    base: ModelParams | None = None,
    alpha_values: Sequence[float] = DEFAULT_ALPHAS,
    strategy: str = "both",
    r0_values: Sequence[float] = DEFAULT_ALPHA_R0S,
    y0: StateVector = CONTROL_STATE,
    grid: TimeGrid | None = None,
    weights: CostWeights = CostWeights(),
    bounds: ControlBounds = ControlBounds(),
    settings: SweepSettings = SweepSettings(),
) -> StudyResult:
    """Cumulative burden on an (alpha, R0) grid under one strategy; one curve per R0."""
    strategy = normalize_strategy(strategy)
    if any(a < 0 for a in alpha_values):
        raise ValueError("alpha values must be >= 0")
    base = base or ModelParams()
    grid = grid or TimeGrid()
    records: list[ExperimentRecord] = []
    outcomes: dict[tuple, StrategyOutcome] = {}
    curves = []
    for target in r0_values:
        scaled = scale_betas_to_r0(base, target)
        burdens = []
        for a in alpha_values:
            params = scaled.replace(alpha=a)
            out = StrategyOutcome.from_solution(
                solve_strategy(params, y0, grid, weights, bounds, strategy, settings)
            )
            outcomes[(a, target)] = out
            records.append(ExperimentRecord.from_outcome("alpha", out, target, a))
            burdens.append(out.cumulative_burden)
        curves.append(
            BurdenCurve("alpha", list(alpha_values), "total", {strategy: burdens}, label=f"r0={target:g}")
        )
    return StudyResult(records, curves, outcomes)
