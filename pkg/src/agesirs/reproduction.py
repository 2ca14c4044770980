"""Equilibria, the next-generation-matrix reproduction number, and local stability."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy import optimize

from agesirs.model import (
    I1,
    I2,
    STATE_NAMES,
    ModelParams,
    StateVector,
    numerical_jacobian,
    rhs,
)

log = logging.getLogger(__name__)

Variant = Literal["with-control", "no-control"]

EQUILIBRIUM_RESIDUAL = 1e-8


@dataclass(frozen=True)
class R0Breakdown:
    p: float
    q: float
    M: float
    r0: float
    variant: str
    S1_star: float
    S2_star: float

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "r0": self.r0,
            "p": self.p,
            "q": self.q,
            "M": self.M,
            "S1_star": self.S1_star,
            "S2_star": self.S2_star,
        }


@dataclass(frozen=True)
class EquilibriumReport:
    state: StateVector
    residual_norm: float
    eigen_real_parts: tuple[float, ...]
    stable: bool

    def to_dict(self) -> dict:
        return {
            "state": self.state.to_dict(),
            "residual_norm": self.residual_norm,
            "eigen_real_parts": list(self.eigen_real_parts),
            "stable": self.stable,
        }


def disease_free_equilibrium(params: ModelParams) -> StateVector:
    if params.mu <= 0:
        raise ValueError("mu must be > 0")
    s1 = params.b1 / (params.mu + params.m)
    s2 = params.b1 * params.m / (params.mu * (params.mu + params.m))
    return StateVector(S1=s1, I1=0.0, R1=0.0, S2=s2, I2=0.0, R2=0.0)


def _pq(params: ModelParams, variant: str) -> tuple[float, float]:
    if variant not in ("with-control", "no-control"):
        raise ValueError(f"variant must be 'with-control' or 'no-control', got {variant!r}")
    removal1 = params.d1 + params.mu + (params.u11 if variant == "with-control" else 0.0)
    removal2 = params.d2 + params.mu
    if removal1 <= 0 or removal2 <= 0:
        raise ValueError("infected removal rates must be positive")
    return 1.0 / removal1, 1.0 / removal2


def r0(params: ModelParams, variant: Variant = "with-control") -> R0Breakdown:
    """Spectral radius of the 2x2 next-generation matrix at the disease-free state.

    The adult Holling term is quadratic in ``I2`` and drops out of the
    linearisation, so ``u12`` never enters ``q``.
    """
    p, q = _pq(params, variant)
    e0 = disease_free_equilibrium(params)
    s1, s2 = e0.S1, e0.S2
    a = params.beta1 * s1 * p
    b = params.beta4 * s2 * q
    M = (a - b) ** 2 + 4.0 * s1 * s2 * params.beta2 * params.beta3 * p * q
    return R0Breakdown(
        p=p, q=q, M=M, r0=(a + b + math.sqrt(M)) / 2.0, variant=variant, S1_star=s1, S2_star=s2
    )


def next_generation_matrix(params: ModelParams, variant: Variant = "with-control") -> np.ndarray:
    """``F @ inv(V)`` for the infected block ``(I1, I2)``."""
    p, q = _pq(params, variant)
    e0 = disease_free_equilibrium(params)
    F = np.array(
        [
            [params.beta1 * e0.S1, params.beta2 * e0.S1],
            [params.beta3 * e0.S2, params.beta4 * e0.S2],
        ]
    )
    V = np.diag([1.0 / p, 1.0 / q])
    return F @ np.linalg.inv(V)


def r0_spectral(params: ModelParams, variant: Variant = "with-control") -> float:
    return float(np.max(np.abs(np.linalg.eigvals(next_generation_matrix(params, variant)))))


def _residual(x: np.ndarray, params: ModelParams) -> float:
    return float(np.max(np.abs(rhs(x, params))))


def _newton(
    x: np.ndarray, params: ModelParams, max_iter: int
) -> tuple[np.ndarray, float]:
    """Damped Newton on ``rhs = 0``, kept strictly inside the non-negative orthant.

    Iterates until the residual stops decreasing, so points drifting towards
    the disease-free state end up numerically on it.
    """
    f = rhs(x, params)
    norm = float(np.max(np.abs(f)))
    for _ in range(max_iter):
        if norm == 0.0:
            break
        J = numerical_jacobian(x, params)
        try:
            dx = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J, -f, rcond=None)[0]
        if not np.all(np.isfinite(dx)):
            break
        t = 1.0
        shrinking = dx < 0
        if np.any(shrinking):
            t = min(1.0, 0.99 * float(np.min(-x[shrinking] / dx[shrinking])))
        accepted = False
        while t > 1e-12:
            trial = x + t * dx
            f_trial = rhs(trial, params)
            trial_norm = float(np.max(np.abs(f_trial)))
            if trial_norm < (1.0 - 1e-4 * t) * norm:
                x, f, norm = trial, f_trial, trial_norm
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
    return x, norm


def _hybrid(x: np.ndarray, params: ModelParams) -> np.ndarray | None:
    sol = optimize.root(lambda y: rhs(y, params), x, method="hybr", options={"xtol": 1e-14})
    y = sol.x
    if not np.all(np.isfinite(y)) or np.any(y < -1e-12):
        return None
    return np.maximum(y, 0.0)


def _random_starts(params: ModelParams, count: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    scale = params.b1 / params.mu if params.b1 > 0 else 1.0
    return [scale * 10.0 ** rng.uniform(-3.0, 3.0, size=6) for _ in range(count)]


def endemic_equilibrium(
    params: ModelParams,
    starts: Sequence | None = None,
    *,
    seed: int = 42,
    n_starts: int = 20,
    max_iter: int = 200,
    tol: float = 1e-10,
    infected_tol: float = 1e-8,
) -> EquilibriumReport | None:
    """Multi-start root search for an equilibrium with positive infectives.

    Each start runs damped Newton; if that stalls, a MINPACK hybrid solve from
    the same start is polished by Newton. Starts are tried in order and the
    first verified root wins. Returns ``None`` when every start fails or
    lands on the disease-free state.
    """
    if starts is None:
        candidates = _random_starts(params, n_starts, seed)
    else:
        candidates = [
            s.as_array() if isinstance(s, StateVector) else np.asarray(s, dtype=float)
            for s in starts
        ]
    for index, start in enumerate(candidates):
        x, norm = _newton(np.maximum(start, 0.0), params, max_iter)
        if norm >= tol:
            fallback = _hybrid(start, params)
            if fallback is None:
                continue
            x, norm = _newton(fallback, params, max_iter)
        if norm >= tol or np.any(x < 0) or x[I1] + x[I2] <= infected_tol:
            continue
        log.debug("start %d converged to %s (residual %.3g)", index, x, norm)
        return stability_verdict(params, StateVector.from_array(x))
    return None


@dataclass(frozen=True)
class ClosedFormE1:
    values: dict[str, float]
    A: float
    B: float
    residual_norm: float
    errors: dict[str, str]

    def to_dict(self) -> dict:
        return {
            "values": self.values,
            "A": self.A,
            "B": self.B,
            "residual_norm": self.residual_norm,
            "errors": self.errors,
        }


def closed_form_e1_crosscheck(params: ModelParams) -> ClosedFormE1:
    """Evaluate the printed closed-form infected equilibrium and its field residual.

    Diagnostic only: the printed expressions do not solve the system in
    general, and the residual shows by how much.
    """
    P = params
    errors: dict[str, str] = {}

    def div(name, num, den):
        if den == 0:
            errors[name] = "division by zero"
            return math.nan
        return num / den

    R1s = div("R1", P.u11, P.mu + P.delta1 + P.m)
    A = div("A", P.b1 - P.d1 - P.mu - P.u11, P.mu + P.m)
    B = div("B", P.delta1, P.mu + P.m)
    S1s = div("S1", (P.b1 - P.d1 - P.mu - P.u11) + P.delta1 * R1s, P.mu + P.m)
    ab = A + B * R1s
    I1s = div("I1", P.beta1 * ab + P.beta2 * ab, P.d1 + P.mu + P.u11)
    I2s = div("I2", P.b1 + P.delta1 * R1s - P.beta1 * ab - (P.mu + P.m) * ab, P.beta2 * ab)
    sat = P.u12 * I2s**2 / (1.0 + P.alpha * I2s**2)
    R2s = div("R2", P.m * R1s + sat, P.mu + P.delta2)
    S2s = div("S2", P.m * ab + P.delta2 * R2s, P.beta3 + P.beta4 * I2s + P.mu)

    values = dict(zip(STATE_NAMES, (S1s, I1s, R1s, S2s, I2s, R2s)))
    point = np.array(list(values.values()))
    residual = _residual(point, P) if np.all(np.isfinite(point)) else math.inf
    return ClosedFormE1(values=values, A=A, B=B, residual_norm=residual, errors=errors)


def stability_verdict(params: ModelParams, state, controls=None) -> EquilibriumReport:
    x = state.as_array() if isinstance(state, StateVector) else np.asarray(state, dtype=float)
    residual = float(np.max(np.abs(rhs(x, params, controls))))
    if not residual < EQUILIBRIUM_RESIDUAL:
        raise ValueError(f"state is not an equilibrium: residual {residual:.3g}")
    eig = np.linalg.eigvals(numerical_jacobian(x, params, controls))
    real = tuple(sorted(float(v) for v in eig.real))
    return EquilibriumReport(
        state=state if isinstance(state, StateVector) else StateVector.from_array(x),
        residual_norm=residual,
        eigen_real_parts=real,
        stable=all(v < 0 for v in real),
    )
