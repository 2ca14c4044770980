"""Run configuration: a strict INI document with named parameter presets.

Recognised sections and keys::

    [run]      preset, seed, output_dir
    [params]   any ModelParams field (overrides the preset)
    [y0]       S1, I1, R1, S2, I2, R2 (all six, or the section omitted)
    [grid]     t0, T, n_steps
    [weights]  A1, A2
    [bounds]   u11_max, u12_max
    [sweep]    max_iters, tol, relaxation
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace

from agesirs.control import ControlBounds, CostWeights, SweepSettings
from agesirs.integrator import TimeGrid
from agesirs.model import PARAM_NAMES, PRESETS, STATE_NAMES, DomainError, ModelParams, StateVector


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    preset: str = "table2"
    # None means "the default initial state of the command being run".
    y0: StateVector | None = None
    grid: TimeGrid = field(default_factory=TimeGrid)
    weights: CostWeights = field(default_factory=CostWeights)
    bounds: ControlBounds = field(default_factory=ControlBounds)
    sweep_settings: SweepSettings = field(default_factory=SweepSettings)
    output_dir: str = "out"
    seed: int = 42

    def replace(self, **changes) -> RunConfig:
        return replace(self, **changes)


_SCHEMA: dict[str, tuple[str, ...]] = {
    "run": ("preset", "seed", "output_dir"),
    "params": PARAM_NAMES,
    "y0": STATE_NAMES,
    "grid": ("t0", "T", "n_steps"),
    "weights": ("A1", "A2"),
    "bounds": ("u11_max", "u12_max"),
    "sweep": ("max_iters", "tol", "relaxation"),
}
_INTEGER_KEYS = {"run.seed", "grid.n_steps", "sweep.max_iters"}


def _number(section: str, key: str, raw: str):
    path = f"{section}.{key}"
    try:
        if path in _INTEGER_KEYS:
            return int(raw)
        return float(raw)
    except ValueError:
        kind = "an integer" if path in _INTEGER_KEYS else "a number"
        raise ConfigError(f"expected {kind}, got {raw!r}", path) from None


def _build(section: str, factory, values: dict, default=None):
    """Construct ``factory(**values)`` and re-raise validation errors with a key path."""
    try:
        return factory(**values) if values or default is None else default
    except DomainError as exc:
        raise ConfigError(str(exc), f"{section}.{exc.field}" if exc.field else section) from None
    except ValueError as exc:
        first = str(exc).split()[0] if str(exc) else ""
        key = f"{section}.{first}" if first in _SCHEMA[section] else section
        raise ConfigError(str(exc), key) from None


def parse_config(text: str, preset: str | None = None) -> RunConfig:
    """Parse a config document; ``preset`` overrides ``[run] preset`` when given."""
    parser = configparser.ConfigParser(interpolation=None, default_section="\x00defaults")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config document: {exc}") from None

    sections: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section; expected one of {sorted(_SCHEMA)}", section)
        items = dict(parser.items(section))
        for key in items:
            if key not in _SCHEMA[section]:
                raise ConfigError("unknown key", f"{section}.{key}")
        sections[section] = items

    run = sections.get("run", {})
    preset = preset or run.get("preset", "table2")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}", "run.preset")
    seed = _number("run", "seed", run["seed"]) if "seed" in run else 42
    output_dir = run.get("output_dir", "out")

    def numbers(section: str) -> dict:
        return {k: _number(section, k, v) for k, v in sections.get(section, {}).items()}

    params_in = numbers("params")
    params = _build("params", PRESETS[preset].replace, params_in, PRESETS[preset])

    y0_in = numbers("y0")
    y0 = None
    if y0_in:
        missing = [k for k in STATE_NAMES if k not in y0_in]
        if missing:
            raise ConfigError("all six components are required", f"y0.{missing[0]}")
        y0 = _build("y0", StateVector, y0_in)

    return RunConfig(
        params=params,
        preset=preset,
        y0=y0,
        grid=_build("grid", TimeGrid, numbers("grid"), TimeGrid()),
        weights=_build("weights", CostWeights, numbers("weights"), CostWeights()),
        bounds=_build("bounds", ControlBounds, numbers("bounds"), ControlBounds()),
        sweep_settings=_build("sweep", SweepSettings, numbers("sweep"), SweepSettings()),
        output_dir=output_dir,
        seed=seed,
    )


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config: RunConfig) -> str:
    """Write every key explicitly, floats in shortest round-trip form."""
    blocks = {
        "run": {"preset": config.preset, "seed": config.seed, "output_dir": config.output_dir},
        "params": config.params.to_dict(),
        "grid": {"t0": config.grid.t0, "T": config.grid.T, "n_steps": config.grid.n_steps},
        "weights": {"A1": config.weights.A1, "A2": config.weights.A2},
        "bounds": {"u11_max": config.bounds.u11_max, "u12_max": config.bounds.u12_max},
        "sweep": {f.name: getattr(config.sweep_settings, f.name) for f in fields(SweepSettings)},
    }
    if config.y0 is not None:
        blocks["y0"] = config.y0.to_dict()
    lines = []
    for section in _SCHEMA:
        if section not in blocks:
            continue
        lines.append(f"[{section}]")
        lines.extend(f"{key} = {_fmt(value)}" for key, value in blocks[section].items())
        lines.append("")
    return "\n".join(lines)


def config_echo(config: RunConfig) -> dict:
    """Config as plain data, without ``output_dir`` so outputs do not depend on where they go."""
    return {
        "preset": config.preset,
        "seed": config.seed,
        "params": config.params.to_dict(),
        "y0": None if config.y0 is None else config.y0.to_dict(),
        "grid": {"t0": config.grid.t0, "T": config.grid.T, "n_steps": config.grid.n_steps},
        "weights": {"A1": config.weights.A1, "A2": config.weights.A2},
        "bounds": {"u11_max": config.bounds.u11_max, "u12_max": config.bounds.u12_max},
        "sweep": {f.name: getattr(config.sweep_settings, f.name) for f in fields(SweepSettings)},
    }
