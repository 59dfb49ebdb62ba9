"""Command-line entry point.

Subcommands:

    run         scenario/preset -> visibility -> scheduler -> plan + metrics
    linkbudget  print the crosslink budget chain for one or more geometries
    capacity    probe the largest fully servable per-user run count

Exit codes: 0 success, 2 configuration or capability error, 3 infeasible
model, 4 time limit with no incumbent. Failures also emit a machine-readable
error JSON (stderr, plus error.json in the output directory when one is
set). Plan CSV output is byte-stable for a fixed scenario and configuration;
wall-clock timings appear only in the JSON artifacts.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import platform
import sys
from pathlib import Path

from . import __version__
from . import linkbudget as lb
from .errors import (CapabilityError, InfeasibleError, IslPlanError,
                     ScenarioError, SolverLimitError)
from .fcp import FcpScheduler
from .metrics import compute_report
from .presets import normalize_preset_name, preset_names, preset_scenario
from .scenario import Scenario, load_scenario
from .service import IlpScheduler, capacity_probe, run_horizon

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NO_INCUMBENT = 4


def _parse_fsa_range(text: str, horizon: int) -> list:
    """"A..B" (inclusive) or a single index."""
    try:
        if ".." in text:
            lo_s, hi_s = text.split("..", 1)
            lo, hi = int(lo_s), int(hi_s)
        else:
            lo = hi = int(text)
    except ValueError:
        raise ScenarioError(f"bad FSA range {text!r}; expected N or A..B") from None
    if lo > hi:
        raise ScenarioError(f"empty FSA range {text!r}")
    if lo < 0 or hi >= horizon:
        raise ScenarioError(f"FSA range {text!r} outside horizon [0, {horizon})")
    return list(range(lo, hi + 1))


def _load(args) -> Scenario:
    if getattr(args, "preset", None) and getattr(args, "scenario", None):
        raise ScenarioError("give either --scenario or --preset, not both")
    if getattr(args, "preset", None):
        return preset_scenario(args.preset)
    if getattr(args, "scenario", None):
        return load_scenario(args.scenario)
    raise ScenarioError("one of --scenario or --preset is required")


def _apply_solver_overrides(scenario: Scenario, args) -> None:
    updates = {}
    if args.time_limit is not None:
        updates["time_limit_s"] = args.time_limit
    if args.gap is not None:
        updates["gap"] = args.gap
    if updates:
        scenario.ilp = dataclasses.replace(scenario.ilp, **updates)
        scenario.ilp.validate(scenario.grid)


def _manifest(args, scenario: Scenario, fsas: list) -> dict:
    import networkx
    import numpy
    import scipy
    config = {
        "preset": getattr(args, "preset", None),
        "scenario_file": getattr(args, "scenario", None),
        "scenario_name": scenario.name,
        "scheduler": getattr(args, "scheduler", None),
        "fsas": [fsas[0], fsas[-1]] if fsas else [],
        "time_limit_s": scenario.ilp.time_limit_s,
        "gap": scenario.ilp.gap,
        "seed": args.seed,
    }
    digest = hashlib.sha256(
        json.dumps(config, sort_keys=True).encode()).hexdigest()
    return {
        "config": config,
        "config_sha256": digest,
        "versions": {
            "islplan": __version__,
            "python": platform.python_version(),
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "networkx": networkx.__version__,
        },
    }


def _fail(exc: Exception, code: int, out_dir) -> int:
    payload = {
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
        "diagnostics": getattr(exc, "diagnostics", None),
        "fsa": getattr(exc, "fsa_index", None),
        "superframe": getattr(exc, "superframe", None),
    }
    text = json.dumps(payload, indent=2)
    print(text, file=sys.stderr)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "error.json").write_text(text + "\n")
    return code


def cmd_run(args) -> int:
    out_dir = Path(args.out) if args.out else None
    try:
        scenario = _load(args)
        _apply_solver_overrides(scenario, args)
        fsas = _parse_fsa_range(args.fsa, scenario.grid.horizon_fsas)
        if args.scheduler == "fcp":
            scheduler = FcpScheduler()
        else:
            scheduler = IlpScheduler()
        horizon = run_horizon(scenario, scheduler, fsas)
        report = compute_report(horizon, scenario, with_pdop=not args.no_pdop)
    except (ScenarioError, CapabilityError) as exc:
        return _fail(exc, EXIT_CONFIG, out_dir)
    except InfeasibleError as exc:
        return _fail(exc, EXIT_INFEASIBLE, out_dir)
    except SolverLimitError as exc:
        return _fail(exc, EXIT_NO_INCUMBENT, out_dir)

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        horizon.write_csv(out_dir / "plan.csv")
        horizon.write_json(out_dir / "plan.json")
        report.write_json(out_dir / "metrics.json")
        report.write_csv(out_dir / "metrics.csv")
        manifest = _manifest(args, scenario, fsas)
        (out_dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2) + "\n")

    print(f"scenario {scenario.name}: {len(fsas)} FSA state(s), "
          f"{report.solve_count} solve(s), {report.solve_wall_time_s:.1f}s in solver")
    print(f"throughput {report.throughput_total}, "
          f"utilization {report.utilization_overall:.3f}, "
          f"satisfaction {report.satisfaction_overall:.3f}, "
          f"unmet runs {report.unmet_runs_total}")
    if report.pdop_mean_overall is not None:
        print(f"mean PDOP {report.pdop_mean_overall:.3f}, "
              f"max intra-superframe wait {report.wait_max_intra_overall} slots")
    return EXIT_OK


def cmd_linkbudget(args) -> int:
    rows = []
    try:
        for freq in args.frequency:
            for eirp, gain in zip(args.eirp, args.rx_gain):
                rows.append(lb.evaluate(lb.LinkBudgetInput(
                    frequency_ghz=freq, distance_km=args.distance,
                    eirp_dbw=eirp, rx_gain_dbi=gain,
                    t_sys_k=args.t_sys, l_adc_db=args.l_adc)))
    except ScenarioError as exc:
        return _fail(exc, EXIT_CONFIG, None)
    print(json.dumps(rows, indent=2))
    return EXIT_OK


def cmd_capacity(args) -> int:
    try:
        scenario = _load(args)
        _apply_solver_overrides(scenario, args)
        value = capacity_probe(scenario, fsa_index=args.fsa_index,
                               run_slots=args.run_slots,
                               terminal_count=args.terminals)
    except (ScenarioError, CapabilityError, IslPlanError) as exc:
        if isinstance(exc, InfeasibleError):
            return _fail(exc, EXIT_INFEASIBLE, None)
        if isinstance(exc, SolverLimitError):
            return _fail(exc, EXIT_NO_INCUMBENT, None)
        return _fail(exc, EXIT_CONFIG, None)
    print(json.dumps({"scenario": scenario.name, "fsa": args.fsa_index,
                      "run_slots": args.run_slots,
                      "terminals": args.terminals,
                      "max_runs_per_user": value}, indent=2))
    return EXIT_OK


def _add_scenario_args(parser) -> None:
    parser.add_argument("--scenario", help="scenario JSON file")
    parser.add_argument("--preset",
                        help="bundled preset: " + ", ".join(preset_names()),
                        type=normalize_preset_name)
    parser.add_argument("--time-limit", type=float, default=None,
                        help="per-solve time limit in seconds")
    parser.add_argument("--gap", type=float, default=None,
                        help="relative optimality gap tolerance")
    parser.add_argument("--seed", type=int, default=0,
                        help="recorded in the manifest; the pipeline itself "
                             "is deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="islplan",
        description="Contact-plan design for GNSS constellations with "
                    "cislunar users")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="plan a range of FSA states")
    _add_scenario_args(run_p)
    run_p.add_argument("--scheduler", choices=["ilp", "fcp"], default="ilp")
    run_p.add_argument("--fsa", default="0",
                       help="FSA index or inclusive range A..B (default 0)")
    run_p.add_argument("--out", help="directory for plan/metrics/manifest files")
    run_p.add_argument("--no-pdop", action="store_true",
                       help="skip PDOP evaluation (faster)")
    run_p.set_defaults(func=cmd_run)

    lb_p = sub.add_parser("linkbudget", help="print link budget corner values")
    lb_p.add_argument("--frequency", type=float, nargs="+",
                      default=[26.5, 40.0], help="carrier frequencies, GHz")
    lb_p.add_argument("--distance", type=float, default=450000.0,
                      help="slant range, km")
    lb_p.add_argument("--eirp", type=float, nargs="+", default=[48.0, 46.0],
                      help="EIRP values, dBW (paired with --rx-gain)")
    lb_p.add_argument("--rx-gain", type=float, nargs="+", default=[27.0, 25.0],
                      help="receive gains, dBi (paired with --eirp)")
    lb_p.add_argument("--t-sys", type=float, default=290.0)
    lb_p.add_argument("--l-adc", type=float, default=3.0)
    lb_p.set_defaults(func=cmd_linkbudget)

    cap_p = sub.add_parser("capacity",
                           help="largest per-user run count one superframe "
                                "can serve")
    _add_scenario_args(cap_p)
    cap_p.add_argument("--fsa-index", type=int, default=0)
    cap_p.add_argument("--run-slots", type=int, default=1,
                       help="slots per requested run (b)")
    cap_p.add_argument("--terminals", type=int, default=1,
                       help="user terminal count (d)")
    cap_p.set_defaults(func=cmd_capacity)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
