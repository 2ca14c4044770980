"""Two-age-group SIRS model with Holling type III treatment of adult infectives.

State ordering is ``(S1, I1, R1, S2, I2, R2)`` everywhere in this package;
group 1 is the young population, group 2 the adults.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from agesirs import _kernels

STATE_NAMES: tuple[str, ...] = ("S1", "I1", "R1", "S2", "I2", "R2")
PARAM_NAMES: tuple[str, ...] = (
    "b1", "delta1", "delta2", "beta1", "beta2", "beta3", "beta4",
    "mu", "d1", "d2", "u11", "u12", "alpha", "m",
)

# Index constants into state arrays.
S1, I1, R1, S2, I2, R2 = range(6)


class DomainError(ValueError):
    """Raised for non-finite or out-of-domain model inputs.

    ``field`` names the offending parameter or state component when known.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


@dataclass(frozen=True)
class ModelParams:
    """Rate constants of the model. Defaults are the Table 2 baseline."""

    b1: float = 7.192
    delta1: float = 0.0714
    delta2: float = 0.0714
    beta1: float = 4.0 / 3.0
    beta2: float = 2.0
    beta3: float = 4.0
    beta4: float = 0.00000008
    mu: float = 0.062
    d1: float = 0.000073
    d2: float = 0.0000913
    u11: float = 0.1
    u12: float = 0.1
    alpha: float = 0.4
    m: float = 0.000182

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise DomainError(f"{f.name} must be a number, got {value!r}", f.name)
            if not math.isfinite(value):
                raise DomainError(f"{f.name} must be finite, got {value!r}", f.name)
            if value < 0:
                raise DomainError(f"{f.name} must be >= 0, got {value!r}", f.name)
            object.__setattr__(self, f.name, float(value))
        if self.mu <= 0:
            raise DomainError("mu must be > 0", "mu")

    def replace(self, **changes: float) -> ModelParams:
        return replace(self, **changes)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in PARAM_NAMES], dtype=float)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def preset(cls, name: str) -> ModelParams:
        try:
            return PRESETS[name]
        except KeyError:
            raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


PRESETS: dict[str, ModelParams] = {
    "table2": ModelParams(),
    # R0 < 1 scenario: only the birth rate differs from the baseline.
    "table3": ModelParams(b1=0.007192),
    # R0 > 1 scenario.
    "table4": ModelParams(beta1=0.0133, mu=0.62, alpha=0.5, m=0.00182),
}


@dataclass(frozen=True)
class StateVector:
    S1: float
    I1: float
    R1: float
    S2: float
    I2: float
    R2: float

    def __post_init__(self):
        for name in STATE_NAMES:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}", name)
            if value < 0:
                raise DomainError(f"{name} must be >= 0, got {value!r}", name)
            object.__setattr__(self, name, float(value))

    @classmethod
    def from_array(cls, values: Sequence[float]) -> StateVector:
        values = list(values)
        if len(values) != 6:
            raise DomainError(f"expected 6 state components, got {len(values)}")
        return cls(*values)

    @classmethod
    def from_published_order(cls, S1, S2, I1, I2, R1, R2) -> StateVector:
        """Build from the ``(S1, S2, I1, I2, R1, R2)`` order used for initial values in print."""
        return cls(S1=S1, I1=I1, R1=R1, S2=S2, I2=I2, R2=R2)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in STATE_NAMES], dtype=float)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @property
    def total(self) -> float:
        return float(sum(getattr(self, name) for name in STATE_NAMES))


@dataclass(frozen=True)
class ControlPair:
    """Instantaneous treatment rates for young (``u11``) and adult (``u12``) infectives."""

    u11: float
    u12: float

    def __post_init__(self):
        for name in ("u11", "u12"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}", name)
            object.__setattr__(self, name, float(value))

    @classmethod
    def from_params(cls, params: ModelParams) -> ControlPair:
        return cls(params.u11, params.u12)


# Initial values used for the stability and sensitivity figures.
FIG1_STATE = StateVector.from_published_order(100, 150, 5, 70, 10, 30)
# Initial values used for the optimal-control simulations.
CONTROL_STATE = StateVector.from_published_order(100, 100, 10, 10, 5, 5)
# Initial values used for the R0 > 1 stability figure.
FIG2_STATE = StateVector.from_published_order(100, 200, 1, 2, 1, 2)


def _state_array(state) -> np.ndarray:
    x = state.as_array() if isinstance(state, StateVector) else np.asarray(state, dtype=float)
    if x.shape != (6,):
        raise DomainError(f"state must have 6 components, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("state contains non-finite values")
    return x


def _controls(params: ModelParams, controls) -> tuple[float, float]:
    if controls is None:
        return params.u11, params.u12
    if isinstance(controls, ControlPair):
        return controls.u11, controls.u12
    u11, u12 = (float(c) for c in controls)
    if not (math.isfinite(u11) and math.isfinite(u12)):
        raise DomainError("controls must be finite")
    return u11, u12


def holling_treatment(I2: float, u12: float, alpha: float) -> float:
    """Saturated adult treatment flow ``u12 * I2**2 / (1 + alpha * I2**2)``."""
    for name, value in (("I2", I2), ("u12", u12), ("alpha", alpha)):
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value!r}", name)
    sq = I2 * I2
    return u12 * sq / (1.0 + alpha * sq)


def rhs(state, params: ModelParams, controls=None) -> np.ndarray:
    """Time derivative of the six compartments.

    ``controls`` overrides the treatment rates; ``None`` uses ``params.u11`` and
    ``params.u12`` (the uncontrolled system).
    """
    x = _state_array(state)
    u11, u12 = _controls(params, controls)
    out = np.empty(6)
    _kernels.model_rhs(x, u11, u12, params.as_array(), out)
    return out


def central_difference_jacobian(
    func: Callable[[np.ndarray], np.ndarray], x, h=None
) -> np.ndarray:
    """Central-difference Jacobian of ``func`` at ``x``.

    ``h`` may be a positive scalar or per-component array; by default each
    component uses ``1e-6 * max(1, |x_i|)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if h is None:
        steps = 1e-6 * np.maximum(1.0, np.abs(x))
    else:
        steps = np.broadcast_to(np.asarray(h, dtype=float), (n,)).copy()
        if np.any(~np.isfinite(steps)) or np.any(steps <= 0):
            raise ValueError(f"step must be > 0, got {h!r}")
    columns = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = steps[i]
        columns.append((np.asarray(func(x + e)) - np.asarray(func(x - e))) / (2.0 * steps[i]))
    return np.column_stack(columns)


def numerical_jacobian(state, params: ModelParams, controls=None, h=None) -> np.ndarray:
    """6x6 Jacobian of :func:`rhs` at ``state`` by central differences."""
    x = _state_array(state)
    u11, u12 = _controls(params, controls)
    p = params.as_array()

    def field(y):
        out = np.empty(6)
        _kernels.model_rhs(y, u11, u12, p, out)
        return out

    return central_difference_jacobian(field, x, h)


@dataclass(frozen=True)
class FeasibilityReport:
    passed: bool
    min_components: dict[str, float]
    max_total: float
    bound: float
    negative_index: int | None
    bound_index: int | None

    def describe(self) -> str:
        if self.passed:
            return "feasible"
        parts = []
        if self.negative_index is not None:
            parts.append(f"negative component at sample {self.negative_index}")
        if self.bound_index is not None:
            parts.append(
                f"total population exceeds {self.bound:.6g} at sample {self.bound_index}"
            )
        return "; ".join(parts)


def check_feasible(traj, params: ModelParams, tol: float = 1e-9) -> FeasibilityReport:
    """Check positivity of every compartment and the population bound.

    The bound is ``max(N(0), b1/mu)``: the asymptotic ceiling ``b1/mu`` can be
    exceeded transiently by trajectories starting above it.
    """
    samples = np.asarray(getattr(traj, "states", traj), dtype=float)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise ValueError("trajectory must be a non-empty (n, 6) array")
    samples = samples[:, :6]
    mins = samples.min(axis=0)
    totals = samples.sum(axis=1)
    bound = max(float(totals[0]), params.b1 / params.mu)

    negative = np.flatnonzero(np.any(samples < -tol, axis=1))
    over = np.flatnonzero(totals > bound + tol)
    negative_index = int(negative[0]) if negative.size else None
    bound_index = int(over[0]) if over.size else None
    return FeasibilityReport(
        passed=negative_index is None and bound_index is None,
        min_components=dict(zip(STATE_NAMES, (float(v) for v in mins))),
        max_total=float(totals.max()),
        bound=bound,
        negative_index=negative_index,
        bound_index=bound_index,
    )


def params_from_mapping(values: Mapping[str, float], base: ModelParams | None = None) -> ModelParams:
    base = base or ModelParams()
    unknown = set(values) - set(PARAM_NAMES)
    if unknown:
        raise DomainError(f"unknown parameter(s): {sorted(unknown)}", sorted(unknown)[0])
    return base.replace(**values)
