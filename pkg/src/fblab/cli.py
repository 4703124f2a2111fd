"""Command-line entry point.

Verbs:
  run             execute a scenario pipeline from a config file or flags
  acceptance      run the acceptance suite (one pass/fail line per criterion)
  export          convert a stored field container to CSV
  list-scenarios  print the known scenario labels

Exit codes: 0 success; 2 config/schema violation; 3 numeric failure (the
manifest is still written in that case). The output directory can be
overridden with the FBLAB_OUT_DIR environment variable.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, DEFAULT_STAGES, RunConfig, STAGES, parse_config
from .scenarios import LABELS


def _add_run_flags(p):
    p.add_argument("--config", type=Path, help="INI config file")
    p.add_argument("--scenario", choices=LABELS)
    p.add_argument("--stages", help="comma-separated stage list")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--nx", type=int, default=None)
    p.add_argument("--nt", type=int, default=None)
    p.add_argument("--eps-min", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--weiss-variant", choices=("paper-def", "proof-2x"),
                   default=None)
    p.add_argument("--solution", type=Path, default=None,
                   help="rerun stages from a stored solution container")
    p.add_argument("--acceptance", action="store_true",
                   help="run the acceptance suite instead of a scenario")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fblab", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run a scenario pipeline")
    _add_run_flags(run)

    acc = sub.add_parser("acceptance", help="run the acceptance suite")
    acc.add_argument("--quick", action="store_true",
                     help="skip the multi-resolution criteria (9, 10)")

    exp = sub.add_parser("export", help="export a field container to CSV")
    exp.add_argument("container", type=Path)
    exp.add_argument("csv", type=Path)

    sub.add_parser("list-scenarios", help="print scenario labels")
    return ap


def _config_from_args(args) -> RunConfig:
    if args.config is not None:
        cfg = parse_config(args.config)
    else:
        if args.scenario is None:
            raise ConfigError("either --config or --scenario is required")
        stages = DEFAULT_STAGES[args.scenario]
        if args.stages:
            stages = tuple(s.strip() for s in args.stages.split(",") if s.strip())
            bad = [s for s in stages if s not in STAGES]
            if bad:
                raise ConfigError(f"unknown stages {bad}", field_name="stages")
        cfg = RunConfig(scenario=args.scenario, stages=stages)
    if getattr(args, "solution", None) is not None:
        cfg.solution_path = str(args.solution)
    for flag, attr in (("stages", None), ("out_dir", "out_dir"), ("nx", "nx"),
                       ("nt", "nt"), ("eps_min", "eps_min"), ("alpha", "alpha"),
                       ("gamma", "gamma"), ("weiss_variant", "weiss_variant")):
        if attr is None:
            continue
        v = getattr(args, flag, None)
        if v is not None:
            setattr(cfg, attr, v)
    if args.config is not None and args.stages:
        stages = tuple(s.strip() for s in args.stages.split(",") if s.strip())
        bad = [s for s in stages if s not in STAGES]
        if bad:
            raise ConfigError(f"unknown stages {bad}", field_name="stages")
        cfg.stages = stages
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.verb == "list-scenarios":
        for label in LABELS:
            print(label)
        return 0

    if args.verb == "export":
        from . import container

        try:
            u = container.read_field(args.container)
        except (OSError, ValueError) as e:
            print(f"export failed: {e}", file=sys.stderr)
            return 3
        container.export_csv(u, args.csv)
        print(args.csv)
        return 0

    if args.verb == "acceptance" or (args.verb == "run" and args.acceptance):
        from .acceptance import run_all

        quick = getattr(args, "quick", False)
        results = run_all(quick=quick)
        return 0 if all(r.passed for r in results) else 3

    # run
    try:
        cfg = _config_from_args(args)
    except ConfigError as e:
        loc = f" (line {e.line})" if getattr(e, "line", None) else ""
        print(f"config error{loc}: {e}", file=sys.stderr)
        return 2
    from .pipeline import run_scenario

    manifest = run_scenario(cfg)
    for stage, rep in manifest["stages"].items():
        print(f"{stage}: {rep['status']}")
    print(f"manifest: {manifest['manifest_path']}")
    return 0 if manifest["ok"] else 3


if __name__ == "__main__":
    raise SystemExit(main())
