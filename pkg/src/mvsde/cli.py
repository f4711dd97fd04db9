"""Experiment runner.

Subcommands:
    run CONFIG       execute the configured check list, write reports
    list-models      registered model ids
    list-checks      registered check names
    verify-model ID  structural verification of one model

``run`` writes ``results.csv`` (byte-stable for a fixed config and seed),
``summary.json`` (one object per check) and ``meta.json`` (timestamps and
environment, kept out of the CSV so reruns diff clean).  Exit status 0 iff
every executed check passed.
"""

from __future__ import annotations

import argparse
import datetime
import os
import platform
import sys

from . import __version__, models, suites
from .config import ConfigError, ExperimentConfig, load_config
from .reporting import render_svg, write_meta, write_results_csv, write_summary_json

USAGE_ERROR = 2


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mvsde", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a configured experiment")
    run.add_argument("config_path", nargs="?", help="configuration file")
    run.add_argument("--config", dest="config_flag", help="configuration file (alternative to the positional)")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--out", help="override the output directory")
    run.add_argument("--emit-svg", action="store_true", help="render per-check SVG plots")
    run.add_argument("--threads", type=int, help="intra-check parallelism (0 = all cores)")

    sub.add_parser("list-models", help="print registered model ids")
    sub.add_parser("list-checks", help="print registered check names")

    vm = sub.add_parser("verify-model", help="verify one model's structural requirements")
    vm.add_argument("model_id")
    vm.add_argument("--seed", type=int, default=0)
    return ap


def _cmd_run(args) -> int:
    path = args.config_flag or args.config_path
    if not path:
        print("error: no config file given (positional or --config)", file=sys.stderr)
        return USAGE_ERROR
    try:
        cfg = load_config(path)
    except FileNotFoundError:
        print(f"error: config file not found: {path}", file=sys.stderr)
        return USAGE_ERROR
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return USAGE_ERROR
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.threads is not None:
        cfg.threads = args.threads
    if args.emit_svg:
        cfg.emit_svg = True
    try:
        cfg.__post_init__()  # flag overrides must satisfy the same bounds
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return USAGE_ERROR
    unknown = [c for c in cfg.checks if c not in suites.CHECKS]
    if unknown:
        print(f"error: invalid config: unknown checks {unknown}", file=sys.stderr)
        return USAGE_ERROR
    return run_experiment(cfg)


def run_experiment(cfg: ExperimentConfig) -> int:
    """Execute the configured checks in declared order and write reports."""
    os.makedirs(cfg.out, exist_ok=True)
    results = []
    svg_files = []
    for name in cfg.checks:
        res = suites.run_check(name, cfg)
        results.append(res)
        status = "pass" if res.passed else "FAIL"
        print(f"[{status}] {name}")
        if cfg.emit_svg and res.series:
            svg_files += render_svg(cfg.out, name, res.series)
    write_results_csv(
        os.path.join(cfg.out, "results.csv"),
        results,
        seed=cfg.seed,
        dt=cfg.dt,
        n=cfg.n_particles,
        resolution=cfg.resolution,
    )
    write_summary_json(os.path.join(cfg.out, "summary.json"), results)
    write_meta(
        os.path.join(cfg.out, "meta.json"),
        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        version=__version__,
        python=platform.python_version(),
        seed=cfg.seed,
        checks=list(cfg.checks),
        svg_files=[os.path.basename(p) for p in svg_files],
    )
    return 0 if all(r.passed for r in results) else 1


def _cmd_verify_model(args) -> int:
    try:
        model = models.get_model(args.model_id)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    report = models.verify_hypotheses(model, seed=args.seed)
    print(report.summary())
    return 0 if report.verified else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "list-models":
        for name in models.list_models():
            print(name)
        return 0
    if args.command == "list-checks":
        for name in suites.list_checks():
            print(name)
        return 0
    if args.command == "verify-model":
        return _cmd_verify_model(args)
    return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
