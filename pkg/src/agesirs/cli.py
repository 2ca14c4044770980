"""``agesirs`` command-line entry point."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from agesirs import outputs
from agesirs.config import ConfigError, RunConfig, config_echo, parse_config
from agesirs.control import STRATEGIES, normalize_strategy
from agesirs.dynamics import simulate
from agesirs.experiments import (
    DEFAULT_ALPHA_R0S,
    DEFAULT_ALPHAS,
    DEFAULT_R0_GRID,
    StrategyOutcome,
    alpha_sweep,
    cumulative_burden,
    r0_sweep,
    solve_strategy,
)
from agesirs.integrator import IntegrationError, TimeGrid
from agesirs.model import CONTROL_STATE, FIG1_STATE, PRESETS, DomainError, check_feasible
from agesirs.replicate import run_battery, write_classification, write_study
from agesirs.reproduction import (
    closed_form_e1_crosscheck,
    disease_free_equilibrium,
    endemic_equilibrium,
    r0,
    r0_spectral,
    stability_verdict,
)
from agesirs.sensitivity import full_table5_run

log = logging.getLogger("agesirs")

EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 3


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI run configuration")
    common.add_argument("--preset", choices=sorted(PRESETS), help="parameter preset (overrides the config)")
    common.add_argument("--strategy", choices=["none", "u11", "u12", "both", *STRATEGIES[1:3]])
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--steps", type=int, help="number of RK4 steps on [t0, T]")
    common.add_argument("--T", type=float, help="final time in days")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="agesirs", description="Age-structured SIRS model with saturated treatment.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate the model with constant treatment")
    sub.add_parser("equilibria", parents=[common], help="disease-free and endemic equilibria with stability")
    sub.add_parser("r0", parents=[common], help="basic reproduction number")
    sub.add_parser("optcontrol", parents=[common], help="optimal treatment by forward-backward sweep")
    sub.add_parser("sensitivity", parents=[common], help="one-at-a-time sensitivity table")
    p = sub.add_parser("sweep-r0", parents=[common], help="burden against R0 per strategy")
    p.add_argument("--r0", type=_float_list, help="comma-separated R0 targets")
    p = sub.add_parser("sweep-alpha", parents=[common], help="burden against alpha")
    p.add_argument("--alpha", type=_float_list, help="comma-separated alpha values")
    p.add_argument("--r0", type=_float_list, help="comma-separated R0 targets")
    p = sub.add_parser("replicate-paper", parents=[common], help="full reproduction battery and report")
    p.add_argument("--strict", action="store_true", help="exit nonzero when any check fails")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    text = args.config.read_text() if args.config else ""
    cfg = parse_config(text, preset=args.preset)
    if args.steps is not None or args.T is not None:
        try:
            grid = TimeGrid(
                cfg.grid.t0,
                cfg.grid.T if args.T is None else args.T,
                cfg.grid.n_steps if args.steps is None else args.steps,
            )
        except ValueError as exc:
            raise ConfigError(str(exc), "grid.T" if str(exc).startswith("T") else "grid.n_steps") from None
        cfg = cfg.replace(grid=grid)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.out is not None:
        cfg = cfg.replace(output_dir=str(args.out))
    return cfg


def _summary(out: Path, command: str, cfg: RunConfig, results: dict, checks: dict | None = None) -> None:
    outputs.write_json(
        out / "summary.json",
        {"command": command, "config": config_echo(cfg), "results": results, "checks": checks or {}},
    )


def cmd_simulate(cfg: RunConfig, args, out: Path) -> int:
    y0 = cfg.y0 or FIG1_STATE
    traj = simulate(cfg.params, y0, cfg.grid, max_refine=4)
    outputs.write_trajectory(out / "trajectory.csv", traj)
    feasible = check_feasible(traj, cfg.params)
    _summary(out, "simulate", cfg, {
        "final_state": dict(zip(("S1", "I1", "R1", "S2", "I2", "R2"), traj.samples[-1])),
        "burden": cumulative_burden(traj),
        "r0": r0(cfg.params).r0,
    }, {"feasible": feasible.passed})
    print(f"wrote {out / 'trajectory.csv'} ({len(traj)} rows); feasibility: {feasible.describe()}")
    return 0


def cmd_equilibria(cfg: RunConfig, args, out: Path) -> int:
    e0 = disease_free_equilibrium(cfg.params)
    e0_report = stability_verdict(cfg.params, e0)
    e1 = endemic_equilibrium(cfg.params, seed=cfg.seed)
    closed = closed_form_e1_crosscheck(cfg.params)
    payload = {
        "r0": r0(cfg.params).r0,
        "disease_free": e0_report.to_dict(),
        "endemic": None if e1 is None else e1.to_dict(),
        "closed_form_endemic": closed.to_dict(),
    }
    outputs.write_json(out / "equilibria.json", payload)
    _summary(out, "equilibria", cfg, payload, {"disease_free_stable": e0_report.stable})
    print(f"E0 = {e0.as_array().tolist()} ({'stable' if e0_report.stable else 'unstable'})")
    if e1 is None:
        print("no endemic equilibrium found")
    else:
        print(f"E1 = {e1.state.as_array().tolist()} ({'stable' if e1.stable else 'unstable'})")
    return 0


def cmd_r0(cfg: RunConfig, args, out: Path) -> int:
    payload = {v: r0(cfg.params, v).to_dict() for v in ("with-control", "no-control")}
    payload["spectral_radius"] = r0_spectral(cfg.params)
    outputs.write_json(out / "r0.json", payload)
    _summary(out, "r0", cfg, payload)
    print(f"r0 = {payload['with-control']['r0']!r} (no control: {payload['no-control']['r0']!r})")
    return 0


def cmd_optcontrol(cfg: RunConfig, args, out: Path) -> int:
    strategy = normalize_strategy(args.strategy or "both")
    y0 = cfg.y0 or CONTROL_STATE
    sol = solve_strategy(cfg.params, y0, cfg.grid, cfg.weights, cfg.bounds, strategy, cfg.sweep_settings)
    outputs.write_trajectory(
        out / "trajectory.csv", sol.states, sol.costates, (sol.schedule.u11, sol.schedule.u12)
    )
    outcome = StrategyOutcome.from_solution(sol)
    _summary(out, "optcontrol", cfg, {**sol.summary(), **outcome.__dict__}, {"converged": sol.converged})
    print(f"{strategy}: J = {sol.cost!r}, {sol.iterations} iterations, converged = {sol.converged}")
    return 0 if sol.converged else EXIT_NOT_CONVERGED


def cmd_sensitivity(cfg: RunConfig, args, out: Path) -> int:
    def keep(row, result):
        outputs.write_sweep_curves(out / "sweeps" / f"{row.param}_{row.lo!r}_{row.hi!r}.csv", result)

    table = full_table5_run(cfg.params, cfg.y0 or FIG1_STATE, cfg.grid, on_result=keep)
    write_classification(out / "sensitivity_table.csv", table)
    _summary(out, "sensitivity", cfg, {
        "agreement": table.agreement,
        "rows": [r.__dict__ for r in table.rows],
    })
    for r in table.rows:
        mark = "sensitive" if r.sensitive else "insensitive"
        print(f"{r.param:>6} [{r.lo:g}, {r.hi:g}] score {r.score:.4g} {mark}{'' if r.agrees else '  (differs from published)'}")
    print(f"agreement with published verdicts: {table.agreement:.3f}")
    return 0


def cmd_sweep_r0(cfg: RunConfig, args, out: Path) -> int:
    strategies = [normalize_strategy(args.strategy)] if args.strategy else list(STRATEGIES)
    values = args.r0 or list(DEFAULT_R0_GRID)
    study = r0_sweep(cfg.params, values, strategies, cfg.y0 or CONTROL_STATE, cfg.grid,
                     cfg.weights, cfg.bounds, cfg.sweep_settings)
    write_study(out, "r0_sweep", study)
    _summary(out, "sweep-r0", cfg, {"records": [r.to_dict() for r in study.records]},
             {"all_converged": study.all_converged})
    print(f"wrote {len(study.records)} records to {out / 'r0_sweep.csv'}")
    return 0 if study.all_converged else EXIT_NOT_CONVERGED


def cmd_sweep_alpha(cfg: RunConfig, args, out: Path) -> int:
    strategy = normalize_strategy(args.strategy or "both")
    study = alpha_sweep(cfg.params, args.alpha or list(DEFAULT_ALPHAS), strategy,
                        args.r0 or list(DEFAULT_ALPHA_R0S), cfg.y0 or CONTROL_STATE, cfg.grid,
                        cfg.weights, cfg.bounds, cfg.sweep_settings)
    write_study(out, "alpha_sweep", study)
    _summary(out, "sweep-alpha", cfg, {"records": [r.to_dict() for r in study.records]},
             {"all_converged": study.all_converged})
    print(f"wrote {len(study.records)} records to {out / 'alpha_sweep.csv'}")
    return 0 if study.all_converged else EXIT_NOT_CONVERGED


def cmd_replicate(cfg: RunConfig, args, out: Path) -> int:
    checks = run_battery(cfg, out)
    for c in checks:
        print(c.line())
    print(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed; report in {out / 'report.csv'}")
    if args.strict and not all(c.passed for c in checks):
        return EXIT_ERROR
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
    "r0": cmd_r0,
    "optcontrol": cmd_optcontrol,
    "sensitivity": cmd_sensitivity,
    "sweep-r0": cmd_sweep_r0,
    "sweep-alpha": cmd_sweep_alpha,
    "replicate-paper": cmd_replicate,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args)
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args, out)
    except (ConfigError, DomainError, IntegrationError, ValueError, OSError) as exc:
        print(f"agesirs {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
