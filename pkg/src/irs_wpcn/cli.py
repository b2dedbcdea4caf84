"""Command line front end: config files, sweeps, property checks, CSV diffs.

Subcommands:
  gen-config  write a JSON parameter file for a named profile
  run         execute the sweep described by a JSON spec file
  props       run the property suite; exit 0 only if every check passes
  compare     diff the throughput column of two or more sweep CSVs

Sweeps honor IRS_WPCN_WORKERS for process-level parallelism.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .experiments import AXES, SCHEMES, ExperimentSpec, run_sweep
from .optimizers import ScaOptions
from .properties import run_property_suite
from .scenario import ConfigError, default_config, load_config, save_config

_PROFILES = {
    "desk": dict(num_elements=16, num_devices=4),     # quick desk-scale runs
    "full": dict(num_elements=50, num_devices=10),    # reference-scale geometry
}


def _cmd_gen_config(args) -> int:
    overrides = dict(_PROFILES[args.profile])
    if args.seed is not None:
        overrides["seed"] = args.seed
    save_config(default_config(**overrides), args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_run(args) -> int:
    with open(args.spec) as fh:
        raw = json.load(fh)
    known = {
        "config", "axis", "values", "schemes", "seeds", "output",
        "j_default", "store_plans", "random_trials", "sca",
    }
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown spec keys {unknown}; known keys: {sorted(known)}")
    for key in ("axis", "values", "output"):
        if key not in raw:
            raise ConfigError(f"spec is missing required key {key!r}")
    sca = ScaOptions(**raw["sca"]) if raw.get("sca") else None
    spec = ExperimentSpec(
        base_config=default_config(**raw.get("config", {})),
        axis=raw["axis"],
        values=tuple(raw["values"]),
        schemes=tuple(raw.get("schemes", SCHEMES)),
        seeds=tuple(raw.get("seeds", (0,))),
        output=raw["output"],
        j_default=int(raw.get("j_default", 1)),
        store_plans=bool(raw.get("store_plans", False)),
        random_trials=int(raw.get("random_trials", 100)),
        sca=sca,
    )
    rows = run_sweep(spec)
    print(f"wrote {len(rows)} rows to {spec.output}")
    return 0


def _cmd_props(args) -> int:
    config = load_config(args.config) if args.config else None
    results = run_property_suite(config=config, quick=args.quick, report_path=args.report)
    for r in results:
        print(r.line())
    failed = [r.criterion for r in results if not r.passed]
    if failed:
        print(f"FAILED criteria: {failed}")
        return 1
    print(f"all {len(results)} checks passed")
    return 0


def _read_rows(path: str) -> dict:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return {
            (r["scheme"], r["axis"], r["axis_value"], r["seed"]): float(r["throughput"])
            for r in reader
        }


def _cmd_compare(args) -> int:
    base = _read_rows(args.csvs[0])
    worst = 0.0
    for path in args.csvs[1:]:
        other = _read_rows(path)
        shared = sorted(set(base) & set(other))
        missing = len(base) != len(shared) or len(other) != len(shared)
        if not shared:
            print(f"{path}: no rows in common with {args.csvs[0]}")
            worst = float("inf")
            continue
        rel = [
            abs(other[k] - base[k]) / max(abs(base[k]), 1e-12) for k in shared
        ]
        top = max(rel)
        worst = max(worst, top)
        flag = " (row sets differ)" if missing else ""
        print(f"{path}: {len(shared)} shared rows, max rel throughput diff {top:.3e}{flag}")
    return 0 if worst <= args.tol else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="irs-wpcn",
        description="Joint reflection and time-allocation optimization for "
        "wireless powered networks assisted by a reconfigurable surface.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-config", help="write a JSON parameter file")
    p.add_argument("--profile", choices=sorted(_PROFILES), default="desk")
    p.add_argument("--out", required=True, help="destination JSON path")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_gen_config)

    p = sub.add_parser("run", help="execute a sweep from a JSON spec")
    p.add_argument(
        "spec",
        help="JSON file with axis/values/output plus optional config, schemes, "
        f"seeds, j_default, store_plans, random_trials, sca; axes: {', '.join(AXES)}",
    )
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("props", help="run the property suite")
    p.add_argument("config", nargs="?", default=None, help="optional config JSON")
    p.add_argument("--quick", action="store_true", help="smaller instance counts")
    p.add_argument("--report", default=None, help="write a JSON report here")
    p.set_defaults(func=_cmd_props)

    p = sub.add_parser("compare", help="diff sweep CSVs against the first one")
    p.add_argument("csvs", nargs="+", help="two or more sweep CSV paths")
    p.add_argument("--tol", type=float, default=1e-9, help="max relative diff to accept")
    p.set_defaults(func=_cmd_compare)

    args = parser.parse_args(argv)
    if args.command == "compare" and len(args.csvs) < 2:
        parser.error("compare needs at least two CSV files")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
