"""Command-line interface: run experiments, regenerate reports, score predictions."""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .data import SubgroupKey
from .metrics import LabeledPredictions, compute_report
from .runner import (
    ExperimentConfig,
    emit_report,
    improvement_table,
    read_records_csv,
    region_distribution,
    run_experiment,
    write_manifest,
    wtl_matrix,
    _write_csv,
)


def cmd_run(args) -> int:
    config = ExperimentConfig.from_json(
        args.config,
        base_seed=args.seed,
        repetitions=args.reps,
        output_dir=args.out,
        paper_arch=True if args.paper_arch else None,
    )
    result = run_experiment(config)
    rows = [r.to_row() for r in result.records]
    wtl = wtl_matrix(rows) if any(r.method == "fairhome" for r in result.records) else []
    paths = emit_report(result.records, result.fairea_cases, wtl, config.output_dir)
    paths["manifest"] = write_manifest(config, result.records, config.output_dir)
    failed = [r for r in result.records if r.error]
    for r in failed:
        print(f"FAILED {r.task}/{r.method}/rep{r.repetition}: {r.error}", file=sys.stderr)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 1 if failed else 0


def cmd_report(args) -> int:
    import os

    rows = read_records_csv(args.records)
    os.makedirs(args.out, exist_ok=True)
    _write_csv(os.path.join(args.out, "improvement.csv"), improvement_table(rows),
               ["task", "method", "metric", "original_mean", "method_mean",
                "absolute_change", "relative_change_pct"])
    written = ["improvement.csv"]
    if any(r.get("method") == "fairhome" for r in rows):
        wtl = wtl_matrix(rows)
        fields = ["metric"] + sorted({k for r in wtl for k in r} - {"metric"})
        _write_csv(os.path.join(args.out, "win_tie_loss.csv"), wtl, fields)
        written.append("win_tie_loss.csv")
    if args.regions:
        with open(args.regions, newline="", encoding="utf-8") as fh:
            case_rows = list(csv.DictReader(fh))
        _write_csv(os.path.join(args.out, "region_distribution.csv"),
                   region_distribution(case_rows),
                   ["method", "win-win", "good", "poor", "lose-lose", "inverted",
                    "total", "beats_baseline_pct"])
        written.append("region_distribution.csv")
    for name in written:
        print(f"wrote {args.out}/{name}")
    return 0


def cmd_metrics(args) -> int:
    with open(args.predictions, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if "y_true" not in header or "y_pred" not in header:
            print("predictions CSV needs y_true and y_pred columns", file=sys.stderr)
            return 2
        protected = [c for c in header if c not in ("y_true", "y_pred")]
        if not protected:
            print("predictions CSV needs at least one protected-attribute column",
                  file=sys.stderr)
            return 2
        y_true, y_pred, groups = [], [], {a: [] for a in protected}
        for row in reader:
            y_true.append(int(row["y_true"]))
            y_pred.append(int(row["y_pred"]))
            for a in protected:
                groups[a].append(row[a])

    subgroups = tuple(
        SubgroupKey(tuple((a, groups[a][i]) for a in protected))
        for i in range(len(y_true))
    )
    data = LabeledPredictions(
        y_true=np.array(y_true), y_pred=np.array(y_pred),
        subgroup_of=subgroups, single_group_of={a: tuple(v) for a, v in groups.items()},
    )
    flat = compute_report(data).to_flat_dict()
    if args.json:
        print(json.dumps(flat, indent=2))
    else:
        for key, value in flat.items():
            print(f"{key}={value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairhome",
        description="Inference-time bias mitigation and intersectional fairness evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment matrix from a JSON config")
    run_p.add_argument("--config", required=True, help="experiment config JSON")
    run_p.add_argument("--seed", type=int, default=None, help="override base seed")
    run_p.add_argument("--reps", type=int, default=None, help="override repetition count")
    run_p.add_argument("--out", default=None, help="override output directory")
    run_p.add_argument("--paper-arch", action="store_true",
                       help="use the full (64,32,16,8,4) hidden layout for the mlp")
    run_p.set_defaults(func=cmd_run)

    rep_p = sub.add_parser("report", help="regenerate tables from a stored metrics.csv")
    rep_p.add_argument("--records", required=True, help="metrics.csv from a previous run")
    rep_p.add_argument("--regions", default=None, help="fairea_regions.csv (optional)")
    rep_p.add_argument("--out", required=True, help="output directory")
    rep_p.set_defaults(func=cmd_report)

    met_p = sub.add_parser("metrics", help="score a predictions CSV "
                           "(columns: y_true, y_pred, one per protected attribute)")
    met_p.add_argument("--predictions", required=True)
    met_p.add_argument("--json", action="store_true", help="emit JSON instead of key=value")
    met_p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
