"""Integration of the model field on a :class:`TimeGrid` via the compiled RK4 passes."""
from __future__ import annotations

import logging

import numpy as np

from agesirs import _kernels
from agesirs.integrator import IntegrationError, TimeGrid, Trajectory
from agesirs.model import ModelParams, StateVector, _state_array

log = logging.getLogger(__name__)


def _node_series(value, grid: TimeGrid) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.n_steps + 1, float(arr))
    if arr.shape != (grid.n_steps + 1,):
        raise ValueError(f"control series needs {grid.n_steps + 1} nodes, got {arr.shape}")
    return np.ascontiguousarray(arr)


def integrate_states(
    params: ModelParams, y0, grid: TimeGrid, u11=None, u12=None
) -> np.ndarray:
    """Raw forward RK4 pass. Controls are scalars or per-node series."""
    x0 = _state_array(y0)
    U1 = _node_series(params.u11 if u11 is None else u11, grid)
    U2 = _node_series(params.u12 if u12 is None else u12, grid)
    X, bad = _kernels.state_pass(x0, U1, U2, params.as_array(), grid.h)
    if bad >= 0:
        raise IntegrationError(
            f"state integration produced a non-finite value at step {bad} "
            f"(h={grid.h:g}); use more steps",
            bad,
        )
    return X


def integrate_costates(
    params: ModelParams, states: np.ndarray, grid: TimeGrid, u11, u12
) -> np.ndarray:
    U1 = _node_series(u11, grid)
    U2 = _node_series(u12, grid)
    L, bad = _kernels.costate_pass(
        np.ascontiguousarray(states, dtype=float), U1, U2, params.as_array(), grid.h
    )
    if bad >= 0:
        raise IntegrationError(
            f"costate integration produced a non-finite value at node {bad}", bad
        )
    return L


def simulate(
    params: ModelParams,
    y0: StateVector,
    grid: TimeGrid,
    u11=None,
    u12=None,
    *,
    max_refine: int = 0,
    tol: float = 1e-9,
) -> Trajectory:
    """Integrate the model and return samples on ``grid``.

    With ``max_refine > 0`` a pass that blows up or leaves the non-negative
    orthant (below ``-tol``) is repeated with the step halved, up to
    ``max_refine`` times; the finer solution is subsampled back onto ``grid``.
    Per-node control series are linearly interpolated onto the finer grid.
    """
    times = grid.times
    last_error: Exception | None = None
    for level in range(max_refine + 1):
        factor = 2**level
        fine = grid.refined(factor)
        c1 = params.u11 if u11 is None else u11
        c2 = params.u12 if u12 is None else u12
        if factor > 1:
            ft = fine.times
            c1 = c1 if np.ndim(c1) == 0 else np.interp(ft, times, c1)
            c2 = c2 if np.ndim(c2) == 0 else np.interp(ft, times, c2)
        try:
            X = integrate_states(params, y0, fine, c1, c2)
        except IntegrationError as exc:
            last_error = exc
            log.debug("refining: %s", exc)
            continue
        X = X[::factor]
        if level < max_refine and X.min() < -tol:
            last_error = IntegrationError(f"negative state with h={fine.h:g}")
            continue
        if factor > 1:
            log.info("integration needed step h=%g (refinement x%d)", fine.h, factor)
        return Trajectory(grid, X)
    raise IntegrationError(
        f"integration failed after {max_refine} refinements: {last_error}"
    )
