"""Batch entry points: synth | ingest | train | compare | predict | whatif | serve.

Usage errors exit 2 (argparse); data errors print a machine-readable JSON
line to stderr and exit 1. Everything is deterministic for a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date
from pathlib import Path

from .dataset import load_snapshot, save_snapshot
from .errors import ClinicapError
from .features import build_training_set
from .forecast import predict_breakdown, run_whatif, scenario_from_json
from .ingest import UnitKind, build_aggregate, clean_counts, load_bundle
from .regress import (
    RegressionModel,
    TreeParams,
    compare_models,
    fit_forest,
    fit_gbt,
    fit_linear,
    fit_tree,
)
from .synth import (
    SynthConfig,
    benchmark_nonlinear_config,
    coupling_config,
    generate_synthetic,
    monotone_config,
)

PRESETS = {
    "default": SynthConfig,
    "benchmark": benchmark_nonlinear_config,
    "monotone": monotone_config,
    "coupling": coupling_config,
}


def _parse_args(argv):
    parser = argparse.ArgumentParser(prog="clinicap")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic CSV bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--preset", choices=sorted(PRESETS), default="default")
    p.add_argument("--lgas", type=int)
    p.add_argument("--days", type=int)
    p.add_argument("--clinics-min", type=int)
    p.add_argument("--clinics-max", type=int)
    p.add_argument("--start", type=date.fromisoformat)
    p.add_argument("--events-people", type=int)

    p = sub.add_parser("ingest", help="build a snapshot from a raw CSV bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--start", type=date.fromisoformat)
    p.add_argument("--end", type=date.fromisoformat)

    p = sub.add_parser("train", help="fit and serialize a model")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=["forest", "gbt", "tree", "linear"], default="forest")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--unit-kind", choices=["lga", "postcode"], default="lga")
    p.add_argument("--window", type=int, default=7)
    p.add_argument("--trees", type=int, default=30)
    p.add_argument("--rounds", type=int, default=80)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--max-depth", type=int, default=14)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("compare", help="model comparison table as CSV")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--split", type=float, default=0.75)
    p.add_argument("--unit-kind", choices=["lga", "postcode"], default="lga")

    p = sub.add_parser("predict", help="per-clinic breakdown for one unit")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--unit", required=True)
    p.add_argument("--from", dest="from_date", type=date.fromisoformat)
    p.add_argument("--to", dest="to_date", type=date.fromisoformat)
    p.add_argument("--unit-kind", choices=["lga", "postcode"], default="lga")
    p.add_argument("--uncalibrated", action="store_true")
    p.add_argument("--out", required=True, help=".json or .csv by extension")

    p = sub.add_parser("whatif", help="run a scenario file against a model")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True, help=".json or .csv by extension")

    p = sub.add_parser("serve", help="start the HTTP API")
    p.add_argument("--config")
    p.add_argument("--snapshot")
    p.add_argument("--model", action="append", default=[],
                   help="name=path, repeatable")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8040)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--unit-kind", choices=["lga", "postcode"], default="lga")
    p.add_argument("--sequences", default="sequences.jsonl")

    return parser.parse_args(argv)


def _cmd_synth(args) -> int:
    base = PRESETS[args.preset]()
    overrides = {}
    if args.lgas is not None:
        overrides["n_lgas"] = args.lgas
    if args.days is not None:
        overrides["n_days"] = args.days
    if args.clinics_min is not None or args.clinics_max is not None:
        lo, hi = base.clinics_per_lga
        overrides["clinics_per_lga"] = (args.clinics_min or lo, args.clinics_max or hi)
    if args.start is not None:
        overrides["start_date"] = args.start
    if args.events_people is not None:
        overrides["events_people"] = args.events_people
    if overrides:
        from dataclasses import asdict
        merged = {**asdict(base), **overrides}
        merged["start_date"] = merged["start_date"] if isinstance(merged["start_date"], date) \
            else date.fromisoformat(merged["start_date"])
        config = SynthConfig(**merged)
    else:
        config = base
    result = generate_synthetic(config, seed=args.seed, out_dir=args.out)
    print(json.dumps(result.accounting, sort_keys=True))
    return 0


def _bundle_period(bundle_dir: Path, start, end):
    manifest = bundle_dir / "manifest.json"
    if start is not None and end is not None:
        return start, end
    if manifest.exists():
        with open(manifest, encoding="utf-8") as fh:
            period = json.load(fh)["accounting"]["period"]
        return (start or date.fromisoformat(period[0]),
                end or date.fromisoformat(period[1]))
    raise ClinicapError("no manifest.json in bundle; pass --start and --end")


def _cmd_ingest(args) -> int:
    bundle_dir = Path(args.bundle)
    period = _bundle_period(bundle_dir, args.start, args.end)
    raw = load_bundle(bundle_dir)
    ds = build_aggregate(
        clean_counts(raw["tests"]),
        clean_counts(raw["cases"]),
        raw["clinics"],
        raw["interventions"],
        raw["demographics"],
        period,
    )
    snap = save_snapshot(ds, args.out)
    print(json.dumps({
        "snapshot": str(args.out),
        "checksum": snap.checksum,
        "region_days": len(ds.region_days),
        "clinics": len(ds.clinics),
        "period": [period[0].isoformat(), period[1].isoformat()],
    }, sort_keys=True))
    return 0


def _cmd_train(args) -> int:
    snap = load_snapshot(args.snapshot)
    ds = snap.dataset
    first, last = ds.period
    matrix = build_training_set(ds, UnitKind(args.unit_kind), first, last,
                                window=args.window)
    params = TreeParams(max_depth=args.max_depth, min_samples_leaf=3)
    if args.kind == "forest":
        model = fit_forest(matrix, params, n_trees=args.trees, seed=args.seed,
                           max_features=None, n_jobs=args.jobs)
    elif args.kind == "gbt":
        model = fit_gbt(matrix, TreeParams(max_depth=min(args.max_depth, 6),
                                           min_samples_leaf=3),
                        n_rounds=args.rounds, learning_rate=args.learning_rate,
                        seed=args.seed)
    elif args.kind == "tree":
        model = fit_tree(matrix, params)
    else:
        model = fit_linear(matrix)
    model.save(args.out)
    print(json.dumps({"model": str(args.out), "kind": model.kind.value,
                      "rows": len(matrix), "schema_hash": model.schema.hash},
                     sort_keys=True))
    return 0


def _cmd_compare(args) -> int:
    snap = load_snapshot(args.snapshot)
    ds = snap.dataset
    first, last = ds.period
    matrix = build_training_set(ds, UnitKind(args.unit_kind), first, last)
    table = compare_models(matrix, split_fraction=args.split, seed=args.seed)
    table.to_csv(args.out)
    print(table.to_csv(), end="")
    return 0


def _cmd_predict(args) -> int:
    snap = load_snapshot(args.snapshot)
    ds = snap.dataset
    model = RegressionModel.load(args.model)
    first, last = ds.period
    d1 = args.from_date or first
    d2 = args.to_date or last
    ps = predict_breakdown(model, ds, args.unit, d1, d2,
                           calibrate=not args.uncalibrated,
                           unit_kind=UnitKind(args.unit_kind))
    out = Path(args.out)
    if out.suffix == ".csv":
        out.write_text(ps.to_csv(), encoding="utf-8")
    else:
        out.write_text(json.dumps(ps.to_payload(), indent=2, sort_keys=True) + "\n",
                       encoding="utf-8")
    print(json.dumps({"out": str(out), "days": len(ps.days),
                      "clinics": len(ps.days[0].clinics) if ps.days else 0},
                     sort_keys=True))
    return 0


def _cmd_whatif(args) -> int:
    snap = load_snapshot(args.snapshot)
    ds = snap.dataset
    model = RegressionModel.load(args.model)
    scenario = scenario_from_json(Path(args.scenario).read_text(encoding="utf-8"))
    result = run_whatif(model, ds, scenario)
    out = Path(args.out)
    if out.suffix == ".csv":
        out.write_text(result.to_csv(), encoding="utf-8")
    else:
        out.write_text(json.dumps(result.to_payload(), indent=2, sort_keys=True) + "\n",
                       encoding="utf-8")
    print(json.dumps({"out": str(out), "cells": len(result.effects),
                      "total_effect": result.total_effect()}, sort_keys=True))
    return 0


def _cmd_serve(args) -> int:
    from .service import AppConfig, serve

    if args.config:
        config = AppConfig.from_file(args.config)
    else:
        if not args.snapshot or not args.model:
            raise ClinicapError("serve needs --config or both --snapshot and --model")
        model_paths = {}
        for spec in args.model:
            name, _, path = spec.partition("=")
            if not path:
                name, path = f"model{len(model_paths) + 1}", name
            model_paths[name] = path
        config = AppConfig(
            snapshot_path=args.snapshot,
            model_paths=model_paths,
            host=args.host,
            port=args.port,
            seed=args.seed,
            default_unit_kind=args.unit_kind,
            sequences_path=args.sequences,
        )
    serve(config)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "ingest": _cmd_ingest,
    "train": _cmd_train,
    "compare": _cmd_compare,
    "predict": _cmd_predict,
    "whatif": _cmd_whatif,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    args = _parse_args(argv if argv is not None else sys.argv[1:])
    try:
        return _COMMANDS[args.command](args)
    except ClinicapError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(json.dumps({"error": "FileNotFound", "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
