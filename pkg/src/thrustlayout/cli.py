"""Command-line entry point: optimize placements, run scenario suites, sweep cases.

Exit codes: 0 success, 1 usage/config error, 2 infeasible problem or diverged
simulation. All outputs are plain JSON/CSV and byte-reproducible for a fixed
config and seed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, parse_config
from .errors import CodesignError, ConfigError, NoFeasibleLayout
from .optimizer import CodesignProblem, OptimizationResult, optimize
from .simulate import METRICS, Scenario, SimReport, compare_layouts, simulate, step_metrics

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2


def _json_ready(value):
    if isinstance(value, np.ndarray):
        return [_json_ready(v) for v in value]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    return value


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _layout_payload(name: str, result: OptimizationResult, seed: int) -> dict:
    layout = result.best_layout
    score = result.best_score
    return {
        "name": name,
        "n_quads": layout.n_quads,
        "seed": seed,
        "theta_deg": _json_ready(np.rad2deg(layout.theta)),
        "theta_rad": _json_ready(layout.theta),
        "rod_length": layout.rod_length,
        "attachment_points": _json_ready(result.model.mass_props.attachment_points),
        "total_mass": result.model.mass_props.total_mass,
        "d_min": score.d_min,
        "active_component": score.active_component,
        "active_bound": score.active_bound,
        "j_star": result.controller.j_star,
        "feedforward": _json_ready(result.model.u_bar),
        "cost_evaluations": result.total_cost_evaluations,
    }


def _write_optimize_outputs(out: Path, name: str, result: OptimizationResult, seed: int) -> None:
    _write_json(out / "layout.json", _layout_payload(name, result, seed))
    _write_csv(
        out / "gains.csv",
        [f"x{i + 1}" for i in range(12)],
        result.controller.k_gain,
    )
    n = result.best_layout.n_quads
    header = (
        ["restart", "iterations", "final_cost"]
        + [f"init_theta_deg{i + 1}" for i in range(n)]
        + [f"final_theta_deg{i + 1}" for i in range(n)]
    )
    rows = [
        [rec.restart, rec.iterations, rec.final_cost,
         *np.rad2deg(rec.initial_theta), *np.rad2deg(rec.final_theta)]
        for rec in result.restart_history
    ]
    _write_csv(out / "history.csv", header, rows)


def cmd_optimize(cfg: RunConfig, out: Path) -> int:
    result = optimize(cfg.problem, cfg.optimization)
    _write_optimize_outputs(out, cfg.name, result, cfg.optimization.seed)
    log.info(
        "optimum d_min=%.6f theta_deg=%s",
        result.best_score.d_min,
        np.round(np.rad2deg(result.best_layout.theta), 2),
    )
    return EXIT_OK


def _summary_rows(
    labels: list[str], reports: dict[tuple[str, str], SimReport], scenarios: list[Scenario]
) -> list[list]:
    """One row per (scenario, metric) with a value column per layout.

    With exactly two layouts an improvement column (first vs second, percent)
    is appended, mirroring the paired-comparison tables.
    """
    rows = []
    paired = len(labels) == 2
    for scenario in scenarios:
        metrics = list(METRICS) + ["mean_d_m", "saturation_steps", "diverged"]
        if scenario.kind == "ref_step":
            metrics += ["overshoot_x", "settling_time"]
        for metric in metrics:
            row = [scenario.name, metric]
            values = []
            for label in labels:
                rep = reports[(label, scenario.name)]
                if metric in METRICS:
                    v = rep.rmse[metric]
                elif metric == "mean_d_m":
                    v = float(np.mean(rep.d_m)) if len(rep.d_m) else float("nan")
                elif metric == "saturation_steps":
                    v = float(rep.saturation_steps)
                elif metric == "diverged":
                    v = float(rep.diverged)
                elif metric == "overshoot_x":
                    v = step_metrics(rep, axis=0)[0]
                else:
                    v = step_metrics(rep, axis=0)[1]
                values.append(v)
            row.extend(values)
            if paired:
                a, b = values
                row.append(100.0 * (b - a) / b if b not in (0.0,) and np.isfinite(b) else 0.0)
            rows.append(row)
    return rows


def cmd_simulate(cfg: RunConfig, out: Path, theta_override: list[float] | None) -> int:
    if not cfg.scenarios:
        raise ConfigError("scenarios", "simulate needs at least one scenario")

    if theta_override is not None:
        if len(theta_override) != cfg.problem.n_quads:
            raise ConfigError("--theta", f"expected {cfg.problem.n_quads} angles in degrees")
        named = [("cli", np.deg2rad(np.asarray(theta_override)))]
    elif cfg.layouts:
        named = cfg.layouts
    else:
        log.info("no explicit layouts; optimizing first")
        result = optimize(cfg.problem, cfg.optimization)
        _write_json(out / "layout.json", _layout_payload(cfg.name, result, cfg.optimization.seed))
        named = [("optimized", result.best_layout.theta)]

    solved = []
    for label, theta in named:
        model, controller, score = cfg.problem.solve(theta)
        log.info("layout %s: d_min=%.6f", label, score.d_min)
        solved.append((label, model, controller))

    labels = [label for label, *_ in solved]
    reports: dict[tuple[str, str], SimReport] = {}
    if len(solved) == 2:
        table = compare_layouts(
            (solved[0][1], solved[0][2]),
            (solved[1][1], solved[1][2]),
            cfg.scenarios,
            labels=(labels[0], labels[1]),
        )
        reports = table.reports
    else:
        for label, model, controller in solved:
            for scenario in cfg.scenarios:
                reports[(label, scenario.name)] = simulate(model, controller, scenario)

    diverged = False
    for (label, sname), rep in reports.items():
        rep.write_csv(out / f"{label}_{sname}.csv")
        diverged = diverged or rep.diverged

    rows = _summary_rows(labels, reports, cfg.scenarios)
    header = ["scenario", "metric", *labels] + (["improvement_pct"] if len(labels) == 2 else [])
    _write_csv(out / "summary.csv", header, rows)
    _write_json(
        out / "summary.json",
        {
            "name": cfg.name,
            "seed": cfg.seed,
            "layouts": {
                label: _json_ready(np.rad2deg(theta)) for label, theta in named
            },
            "rows": [
                {h: _json_ready(v) for h, v in zip(header, row)} for row in rows
            ],
        },
    )
    if diverged:
        log.warning("at least one run diverged")
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    if not cfg.sweep_cases:
        raise ConfigError("sweep", "sweep needs a non-empty case list")
    index = []
    any_failed = False
    for case_name, problem in cfg.sweep_cases:
        case_dir = out / case_name
        case_dir.mkdir(parents=True, exist_ok=True)
        entry = {"name": case_name, "payload": problem.payload.name, "n_quads": problem.n_quads}
        try:
            result = optimize(problem, cfg.optimization)
        except NoFeasibleLayout as exc:
            entry.update(status="infeasible", error=str(exc))
            any_failed = True
        else:
            _write_optimize_outputs(case_dir, case_name, result, cfg.optimization.seed)
            entry.update(
                status="ok",
                d_min=result.best_score.d_min,
                theta_deg=_json_ready(np.rad2deg(result.best_layout.theta)),
            )
        index.append(entry)
        log.info("case %s: %s", case_name, entry["status"])
    _write_json(out / "index.json", {"name": cfg.name, "cases": index})
    return EXIT_INFEASIBLE if any_failed else EXIT_OK


def _resolve_out_dir(args, cfg: RunConfig) -> Path:
    if args.out:
        return Path(args.out)
    env = os.environ.get("OUTPUT_DIR")
    if env:
        return Path(env)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path("out") / cfg.name


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thrustlayout",
        description="Placement and H2-feedback co-design for multi-quadcopter payload transport",
    )
    parser.add_argument("--log-level", default="INFO", help="logging level (default INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="path to the run configuration (JSON)")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", default=None, help="output directory (also env OUTPUT_DIR)")
    common.add_argument("--jobs", type=int, default=None, help="parallel workers (also env JOBS)")

    sub.add_parser("optimize", parents=[common], help="run the placement optimization")
    p_sim = sub.add_parser("simulate", parents=[common], help="run the scenario suite")
    p_sim.add_argument(
        "--theta",
        default=None,
        help="comma-separated attachment angles in degrees (overrides config layouts)",
    )
    sub.add_parser("sweep", parents=[common], help="optimize a grid of payload/N cases")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.optimization = dataclasses.replace(cfg.optimization, seed=args.seed)
            cfg.scenarios = [
                dataclasses.replace(s, seed=args.seed + i) for i, s in enumerate(cfg.scenarios)
            ]
        jobs = args.jobs if args.jobs is not None else int(os.environ.get("JOBS", "0") or 0)
        if jobs:
            cfg.optimization = dataclasses.replace(cfg.optimization, jobs=jobs)

        out = _resolve_out_dir(args, cfg)
        out.mkdir(parents=True, exist_ok=True)

        theta_override = None
        if getattr(args, "theta", None):
            try:
                theta_override = [float(v) for v in str(args.theta).split(",")]
            except ValueError as exc:
                raise ConfigError("--theta", "expected comma-separated numbers") from exc

        if args.command == "optimize":
            return cmd_optimize(cfg, out)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, theta_override)
        return cmd_sweep(cfg, out)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoFeasibleLayout as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CodesignError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
