"""Optimal treatment: cost functional, Hamiltonian, costates and the forward-backward sweep.

Costates are stored in state order, so ``lam[i]`` pairs with ``STATE_NAMES[i]``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from agesirs import _kernels
from agesirs.dynamics import integrate_costates, integrate_states
from agesirs.integrator import TimeGrid, Trajectory
from agesirs.model import (
    I1,
    I2,
    R1,
    R2,
    ControlPair,
    ModelParams,
    StateVector,
    _state_array,
    rhs,
)

log = logging.getLogger(__name__)

STRATEGIES: tuple[str, ...] = ("none", "u11-only", "u12-only", "both")
_ALIASES = {"u11": "u11-only", "u12": "u12-only", "young": "u11-only", "adult": "u12-only"}


def normalize_strategy(name: str) -> str:
    name = _ALIASES.get(name, name)
    if name not in STRATEGIES:
        raise ValueError(f"unknown strategy {name!r}; choose from {STRATEGIES}")
    return name


def _active(strategy: str) -> tuple[bool, bool]:
    strategy = normalize_strategy(strategy)
    return strategy in ("u11-only", "both"), strategy in ("u12-only", "both")


@dataclass(frozen=True)
class CostWeights:
    A1: float = 1e-4
    A2: float = 5e-3

    def __post_init__(self):
        for name in ("A1", "A2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class ControlBounds:
    u11_max: float = 1.0
    u12_max: float = 1.0

    def __post_init__(self):
        for name in ("u11_max", "u12_max"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class SweepSettings:
    max_iters: int = 500
    tol: float = 1e-4
    relaxation: float = 0.5

    def __post_init__(self):
        if isinstance(self.max_iters, bool) or int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters!r}")
        if not (math.isfinite(self.tol) and self.tol > 0):
            raise ValueError(f"tol must be > 0, got {self.tol!r}")
        if not 0 < self.relaxation <= 1:
            raise ValueError(f"relaxation must lie in (0, 1], got {self.relaxation!r}")


@dataclass(frozen=True, eq=False)
class ControlSchedule:
    grid: TimeGrid
    u11: np.ndarray
    u12: np.ndarray

    def __post_init__(self):
        for name in ("u11", "u12"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim == 0:
                arr = np.full(self.grid.n_steps + 1, float(arr))
            if arr.shape != (self.grid.n_steps + 1,):
                raise ValueError(f"{name} needs {self.grid.n_steps + 1} nodes, got {arr.shape}")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValueError(f"{name} must be finite and non-negative")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def zeros(cls, grid: TimeGrid) -> ControlSchedule:
        return cls(grid, 0.0, 0.0)

    @classmethod
    def constant(cls, grid: TimeGrid, u11: float, u12: float) -> ControlSchedule:
        return cls(grid, u11, u12)

    def within(self, bounds: ControlBounds) -> bool:
        return bool(np.all(self.u11 <= bounds.u11_max) and np.all(self.u12 <= bounds.u12_max))


def cost(states: Trajectory, controls: ControlSchedule, weights: CostWeights) -> float:
    """Trapezoidal value of the integral of ``A1 u11^2 + A2 u12^2 + I1 + I2``."""
    if states.grid != controls.grid:
        raise ValueError("state trajectory and control schedule are on different grids")
    X = states.samples
    integrand = (
        weights.A1 * controls.u11**2 + weights.A2 * controls.u12**2 + X[:, I1] + X[:, I2]
    )
    return float(np.trapezoid(integrand, dx=states.grid.h))


def hamiltonian(
    state, lam, controls: ControlPair, params: ModelParams, weights: CostWeights
) -> float:
    x = _state_array(state)
    lam = np.asarray(lam, dtype=float)
    running = x[I1] + x[I2] + weights.A1 * controls.u11**2 + weights.A2 * controls.u12**2
    return float(running + lam @ rhs(x, params, controls))


def adjoint_rhs(state, lam, controls: ControlPair, params: ModelParams) -> np.ndarray:
    """Costate derivative ``-dH/dx`` from the analytically differentiated Hamiltonian."""
    x = _state_array(state)
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (6,) or not np.all(np.isfinite(lam)):
        raise ValueError("costate must be 6 finite values")
    out = np.empty(6)
    _kernels.costate_rhs(x, lam, controls.u11, controls.u12, params.as_array(), out)
    return out


def _stationary_controls(X, L, weights: CostWeights, alpha: float):
    """Unprojected minimisers of H in each control (arrays or scalars)."""
    i1 = X[..., I1]
    i2 = X[..., I2]
    raw11 = (L[..., I1] - L[..., R1]) * i1 / (2.0 * weights.A1)
    raw12 = (L[..., I2] - L[..., R2]) * i2**2 / (2.0 * weights.A2 * (1.0 + alpha * i2**2))
    return raw11, raw12


def control_update(
    state, lam, weights: CostWeights, bounds: ControlBounds, alpha: float
) -> ControlPair:
    x = _state_array(state)
    raw11, raw12 = _stationary_controls(x, np.asarray(lam, dtype=float), weights, alpha)
    return ControlPair(
        u11=min(max(float(raw11), 0.0), bounds.u11_max),
        u12=min(max(float(raw12), 0.0), bounds.u12_max),
    )


def control_gradient(X, L, u11, u12, params: ModelParams, weights: CostWeights):
    """Per-node ``dH/du11`` and ``dH/du12``."""
    i1 = X[:, I1]
    i2 = X[:, I2]
    g11 = 2.0 * weights.A1 * u11 + (L[:, R1] - L[:, I1]) * i1
    g12 = 2.0 * weights.A2 * u12 + (L[:, R2] - L[:, I2]) * i2**2 / (1.0 + params.alpha * i2**2)
    return g11, g12


@dataclass(frozen=True, eq=False)
class ControlSolution:
    strategy: str
    schedule: ControlSchedule
    states: Trajectory
    costates: Trajectory
    cost: float
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {
            "strategy": self.strategy,
            "J": self.cost,
            "iters": self.iterations,
            "converged": self.converged,
        }


def solve_states(
    params: ModelParams, y0, grid: TimeGrid, schedule: ControlSchedule
) -> Trajectory:
    return Trajectory(grid, integrate_states(params, y0, grid, schedule.u11, schedule.u12))


def _relative_change(new: np.ndarray, old: np.ndarray) -> float:
    return float(np.max(np.abs(new - old) / (1.0 + np.abs(new))))


def forward_backward_sweep(
    params: ModelParams,
    y0: StateVector,
    grid: TimeGrid,
    weights: CostWeights = CostWeights(),
    bounds: ControlBounds = ControlBounds(),
    strategy: str = "both",
    settings: SweepSettings = SweepSettings(),
    initial: ControlSchedule | None = None,
) -> ControlSolution:
    """Solve the treatment problem by relaxed forward-backward sweeps.

    Each iteration integrates the states forward with the current controls,
    the costates backward from ``lam(T) = 0``, projects the stationary controls
    onto the bounds and blends them with the previous iterate. A masked
    control (single-control strategies) is held at zero throughout. The sweep
    stops once the relative change of both control series and of the state
    trajectory drops below ``settings.tol``; if that never happens within
    ``settings.max_iters`` the lowest-cost iterate is returned, flagged as not
    converged.
    """
    strategy = normalize_strategy(strategy)
    use11, use12 = _active(strategy)
    if initial is None:
        initial = ControlSchedule.zeros(grid)
    elif initial.grid != grid:
        raise ValueError("initial control schedule is on a different grid")

    zeros = np.zeros(grid.n_steps + 1)
    U1 = np.clip(initial.u11, 0.0, bounds.u11_max) if use11 else zeros
    U2 = np.clip(initial.u12, 0.0, bounds.u12_max) if use12 else zeros
    relax = settings.relaxation

    history: list[float] = []
    best: tuple[float, np.ndarray, np.ndarray] | None = None
    prev_X = None
    converged = False
    iterations = 0

    for iterations in range(1, settings.max_iters + 1):
        X = integrate_states(params, y0, grid, U1, U2)
        J = cost(Trajectory(grid, X), ControlSchedule(grid, U1, U2), weights)
        history.append(J)
        if best is None or J < best[0]:
            best = (J, U1, U2)
        if not (use11 or use12):
            converged = True
            break

        L = integrate_costates(params, X, grid, U1, U2)
        raw11, raw12 = _stationary_controls(X, L, weights, params.alpha)
        new1 = relax * np.clip(raw11, 0.0, bounds.u11_max) + (1.0 - relax) * U1 if use11 else zeros
        new2 = relax * np.clip(raw12, 0.0, bounds.u12_max) + (1.0 - relax) * U2 if use12 else zeros

        change = max(_relative_change(new1, U1), _relative_change(new2, U2))
        state_change = math.inf if prev_X is None else _relative_change(X, prev_X)
        log.debug("sweep %s iter %d: J=%.6g du=%.3g dx=%.3g", strategy, iterations, J, change, state_change)
        U1, U2, prev_X = new1, new2, X
        if change < settings.tol and state_change < settings.tol:
            converged = True
            break

    if not converged:
        log.warning("forward-backward sweep (%s) did not converge in %d iterations", strategy, iterations)
        _, U1, U2 = best

    schedule = ControlSchedule(grid, U1, U2)
    states = solve_states(params, y0, grid, schedule)
    costates = Trajectory(grid, integrate_costates(params, states.samples, grid, U1, U2))
    return ControlSolution(
        strategy=strategy,
        schedule=schedule,
        states=states,
        costates=costates,
        cost=cost(states, schedule, weights),
        iterations=iterations,
        converged=converged,
        history=history,
    )


@dataclass(frozen=True)
class GradientReport:
    adjoint_derivative: float
    fd_derivative: float
    relative_error: float


def gradient_check(
    params: ModelParams,
    y0,
    grid: TimeGrid,
    weights: CostWeights,
    bounds: ControlBounds,
    controls: ControlSchedule,
    direction: ControlSchedule | tuple[np.ndarray, np.ndarray],
    eps: float = 1e-4,
) -> GradientReport:
    """Compare the costate directional derivative of J with a central difference.

    ``direction`` may be a schedule or a pair of arrays; unlike schedules, raw
    arrays may take negative values.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    d1, d2 = (
        (direction.u11, direction.u12)
        if isinstance(direction, ControlSchedule)
        else (np.asarray(direction[0], dtype=float), np.asarray(direction[1], dtype=float))
    )
    U1, U2 = controls.u11, controls.u12
    for sign in (1.0, -1.0):
        a1, a2 = U1 + sign * eps * d1, U2 + sign * eps * d2
        if (
            np.any(a1 < 0) or np.any(a2 < 0)
            or np.any(a1 > bounds.u11_max) or np.any(a2 > bounds.u12_max)
        ):
            raise ValueError("perturbed controls leave the admissible set")

    def J(a1, a2):
        sched = ControlSchedule(grid, a1, a2)
        return cost(solve_states(params, y0, grid, sched), sched, weights)

    X = integrate_states(params, y0, grid, U1, U2)
    L = integrate_costates(params, X, grid, U1, U2)
    g1, g2 = control_gradient(X, L, U1, U2, params, weights)
    adjoint = float(np.trapezoid(g1 * d1 + g2 * d2, dx=grid.h))
    fd = (J(U1 + eps * d1, U2 + eps * d2) - J(U1 - eps * d1, U2 - eps * d2)) / (2.0 * eps)
    scale = max(abs(fd), abs(adjoint))
    rel = 0.0 if scale == 0 else abs(adjoint - fd) / scale
    return GradientReport(adjoint_derivative=adjoint, fd_derivative=fd, relative_error=rel)
