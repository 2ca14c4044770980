"""Fixed-step classical RK4, forward for states and backward for costates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


class IntegrationError(RuntimeError):
    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t0, t0 + h, ..., T`` with ``n_steps + 1`` nodes."""

    t0: float = 0.0
    T: float = 100.0
    n_steps: int = 50_000

    def __post_init__(self):
        if not (math.isfinite(self.t0) and math.isfinite(self.T)):
            raise ValueError("grid end points must be finite")
        if not self.T > self.t0:
            raise ValueError(f"T must exceed t0 (got t0={self.t0}, T={self.T})")
        if isinstance(self.n_steps, bool) or int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @classmethod
    def with_step(cls, t0: float, T: float, h: float) -> TimeGrid:
        n = round((T - t0) / h)
        if n < 1 or not math.isclose(n * h, T - t0, rel_tol=1e-9):
            raise ValueError(f"step {h} does not divide [{t0}, {T}] evenly")
        return cls(t0, T, n)

    @property
    def h(self) -> float:
        return (self.T - self.t0) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n_steps + 1)

    def refined(self, factor: int) -> TimeGrid:
        return TimeGrid(self.t0, self.T, self.n_steps * factor)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples of a vector-valued solution on every node of ``grid``."""

    grid: TimeGrid
    samples: np.ndarray

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.shape[0] != self.grid.n_steps + 1:
            raise ValueError(
                f"expected {self.grid.n_steps + 1} samples, got {samples.shape[0]}"
            )
        if not np.all(np.isfinite(samples)):
            raise ValueError("trajectory samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def states(self) -> np.ndarray:
        return self.samples

    def __len__(self) -> int:
        return self.samples.shape[0]


Field = Callable[[float, np.ndarray], np.ndarray]


def _checked(y: np.ndarray, step: int) -> np.ndarray:
    if not np.all(np.isfinite(y)):
        raise IntegrationError(f"non-finite value at step {step}", step)
    return y


def rk4_forward(field: Field, y0, grid: TimeGrid) -> Trajectory:
    y = _checked(np.atleast_1d(np.asarray(y0, dtype=float)).copy(), 0)
    h = grid.h
    out = np.empty((grid.n_steps + 1, y.size))
    out[0] = y
    for k in range(grid.n_steps):
        t = grid.t0 + k * h
        k1 = np.asarray(field(t, y))
        k2 = np.asarray(field(t + 0.5 * h, y + 0.5 * h * k1))
        k3 = np.asarray(field(t + 0.5 * h, y + 0.5 * h * k2))
        k4 = np.asarray(field(t + h, y + h * k3))
        y = _checked(y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), k + 1)
        out[k + 1] = y
    return Trajectory(grid, out)


def rk4_backward(field: Field, yT, grid: TimeGrid) -> Trajectory:
    """Integrate ``dy/dt = field(t, y)`` from ``grid.T`` down to ``grid.t0``.

    Samples are indexed on the forward grid, so ``samples[-1] == yT``.
    """
    y = _checked(np.atleast_1d(np.asarray(yT, dtype=float)).copy(), grid.n_steps)
    h = grid.h
    out = np.empty((grid.n_steps + 1, y.size))
    out[-1] = y
    for k in range(grid.n_steps, 0, -1):
        t = grid.t0 + k * h
        k1 = np.asarray(field(t, y))
        k2 = np.asarray(field(t - 0.5 * h, y - 0.5 * h * k1))
        k3 = np.asarray(field(t - 0.5 * h, y - 0.5 * h * k2))
        k4 = np.asarray(field(t - h, y - h * k3))
        y = _checked(y - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), k - 1)
        out[k - 1] = y
    return Trajectory(grid, out)


def sample_lookup(traj: Trajectory, t: float) -> np.ndarray:
    """Sample at the grid node nearest to ``t``."""
    grid = traj.grid
    slack = 1e-9 * grid.h
    if not (grid.t0 - slack <= t <= grid.T + slack):
        raise ValueError(f"t={t} outside [{grid.t0}, {grid.T}]")
    k = int(round((t - grid.t0) / grid.h))
    return traj.samples[min(max(k, 0), grid.n_steps)]
