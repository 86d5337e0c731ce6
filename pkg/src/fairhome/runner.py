"""Experiment orchestration: (dataset x model x method x repetition) matrices.

Each repetition re-splits with its own seed and trains one model that every
method shares (REW retrains with weights). Failures are isolated per cell so a
long matrix never loses completed work. All randomness flows from the base
seed, making report CSVs byte-identical across runs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, Schema, load_dataset, protected_domains, split
from .ensemble import EnsembleStrategy, fairhome_predict
from .errors import UsageError
from .fairea import DEFAULT_DEGREES, DEFAULT_REPS, build_baseline, classify_case, mutation_curve
from .metrics import (
    FAIRNESS_METRICS,
    PERFORMANCE_METRICS,
    LabeledPredictions,
    compute_report,
)
from .model import (
    DEFAULT_HIDDEN_LAYERS,
    TrainConfig,
    decisions_matrix,
    fit_logistic,
    fit_mlp,
    reweighting_weights,
)
from .mutate import MutationStrategy, fit_extrapolation_models
from .stats import win_tie_loss

DESK_HIDDEN_LAYERS = (16, 8)

FAIRHOME_VARIANTS = {
    "fairhome": (MutationStrategy.PROTECTED_ONLY, EnsembleStrategy.MAJORITY_VOTE),
    "fairhome1": (MutationStrategy.CORRELATED_FEATURES, EnsembleStrategy.MAJORITY_VOTE),
    "fairhome2": (MutationStrategy.PROTECTED_ONLY, EnsembleStrategy.AVERAGING),
    "fairhome3": (MutationStrategy.PROTECTED_ONLY, EnsembleStrategy.WEIGHTED_AVERAGING),
    "fairhome4": (MutationStrategy.SINGLE_ATTRIBUTE_ONLY, EnsembleStrategy.MAJORITY_VOTE),
    "fairhome5": (MutationStrategy.MULTI_ATTRIBUTE_ONLY, EnsembleStrategy.MAJORITY_VOTE),
}
VALID_METHODS = ("original", *FAIRHOME_VARIANTS, "rew")


@dataclass
class ExperimentConfig:
    dataset_path: str
    schema_path: str
    model_kind: str = "logistic"
    methods: tuple = ("original", "fairhome")
    repetitions: int = 5
    test_fraction: float = 0.3
    base_seed: int = 0
    fairea_degrees: tuple = DEFAULT_DEGREES
    fairea_reps: int = DEFAULT_REPS
    output_dir: str = "out"
    paper_arch: bool = False
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.model_kind not in ("logistic", "mlp"):
            raise UsageError(f"unknown model kind {self.model_kind!r}")
        for m in self.methods:
            if m not in VALID_METHODS:
                raise UsageError(f"unknown method {m!r}; valid: {VALID_METHODS}")
        if self.repetitions < 1:
            raise UsageError("repetitions must be >= 1")
        self.methods = tuple(self.methods)
        self.fairea_degrees = tuple(self.fairea_degrees)

    @property
    def task_id(self) -> str:
        stem = os.path.splitext(os.path.basename(self.dataset_path))[0]
        return f"{stem}-{self.model_kind}"

    def to_dict(self) -> dict:
        return {
            "dataset_path": self.dataset_path,
            "schema_path": self.schema_path,
            "model_kind": self.model_kind,
            "methods": list(self.methods),
            "repetitions": self.repetitions,
            "test_fraction": self.test_fraction,
            "base_seed": self.base_seed,
            "fairea_degrees": list(self.fairea_degrees),
            "fairea_reps": self.fairea_reps,
            "output_dir": self.output_dir,
            "paper_arch": self.paper_arch,
            "train": {
                "learning_rate": self.train.learning_rate,
                "epochs": self.train.epochs,
                "batch_size": self.train.batch_size,
                "l2_penalty": self.train.l2_penalty,
            },
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    @classmethod
    def from_json(cls, path, **overrides) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        train_raw = raw.pop("train", {})
        raw.update({k: v for k, v in overrides.items() if v is not None})
        kwargs = dict(raw)
        kwargs["train"] = TrainConfig(**train_raw)
        if "methods" in kwargs:
            kwargs["methods"] = tuple(kwargs["methods"])
        return cls(**kwargs)


@dataclass
class RunRecord:
    task: str
    method: str
    repetition: int
    seed: int
    model_fingerprint: str = ""
    report: object = None  # MetricReport, None when the cell failed
    duration_s: float = 0.0
    error: str | None = None

    def to_row(self) -> dict:
        row = {
            "task": self.task, "method": self.method, "repetition": self.repetition,
            "seed": self.seed, "model_fingerprint": self.model_fingerprint,
            "status": "ok" if self.error is None else "failed",
            "error": self.error or "",
        }
        if self.report is not None:
            row.update(self.report.to_flat_dict())
        return row


@dataclass
class FaireaCase:
    task: str
    method: str
    repetition: int
    fairness_metric: str
    performance_metric: str
    region: str

    def to_row(self) -> dict:
        return {
            "task": self.task, "method": self.method, "repetition": self.repetition,
            "fairness_metric": self.fairness_metric,
            "performance_metric": self.performance_metric, "region": self.region,
        }


@dataclass
class ExperimentResult:
    records: list
    fairea_cases: list


def _method_predictions(method, model, rew_model, test, domains, corr):
    from .data import encode_matrix

    if method == "original":
        X = encode_matrix(test.instances(), test.schema, model.encoding)
        return decisions_matrix(model, X)
    if method == "rew":
        X = encode_matrix(test.instances(), test.schema, rew_model.encoding)
        return decisions_matrix(rew_model, X)
    mutation, strategy = FAIRHOME_VARIANTS[method]
    if method == "fairhome5" and len(domains.schema.protected) == 2:
        # a single multi-attribute mutant leaves only two voters; vote ties are
        # meaningless there, so fall back to probability averaging
        warnings.warn(
            "fairhome5 with 2 protected attributes yields 2-member ensembles; "
            "using averaging instead of majority vote",
            stacklevel=2,
        )
        strategy = EnsembleStrategy.AVERAGING
    return np.array([
        fairhome_predict(model, inst, domains, mutation, strategy, corr)
        for inst in test.instances()
    ])


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run the full matrix and classify every mitigation case against Fairea."""
    schema = Schema.from_json(config.schema_path)
    dataset = load_dataset(config.dataset_path, schema)
    hidden = DEFAULT_HIDDEN_LAYERS if config.paper_arch else DESK_HIDDEN_LAYERS

    records: list = []
    cases: list = []
    for rep in range(config.repetitions):
        seed = config.base_seed + rep
        train, test = split(dataset, config.test_fraction, seed)
        domains = protected_domains(train)
        cfg = TrainConfig(
            learning_rate=config.train.learning_rate, epochs=config.train.epochs,
            batch_size=config.train.batch_size, l2_penalty=config.train.l2_penalty,
            seed=seed,
        )

        def fit(train_cfg):
            if config.model_kind == "logistic":
                return fit_logistic(train, train_cfg)
            return fit_mlp(train, train_cfg, hidden_layers=hidden)

        try:
            model = fit(cfg)
        except Exception as e:  # every cell of this repetition fails
            for method in config.methods:
                records.append(RunRecord(
                    task=config.task_id, method=method, repetition=rep, seed=seed,
                    error=f"{type(e).__name__}: {e}",
                ))
            continue

        rew_model, rew_error = None, None
        if "rew" in config.methods:
            try:
                rew_model = fit(TrainConfig(
                    learning_rate=cfg.learning_rate, epochs=cfg.epochs,
                    batch_size=cfg.batch_size, l2_penalty=cfg.l2_penalty, seed=seed,
                    instance_weights=reweighting_weights(train, domains),
                ))
            except Exception as e:
                rew_error = f"{type(e).__name__}: {e}"

        corr = None
        if "fairhome1" in config.methods:
            try:
                corr = fit_extrapolation_models(train)
            except UsageError:
                corr = None  # surfaces as a per-cell failure below

        rep_reports: dict = {}
        rep_preds: dict = {}
        for method in config.methods:
            start = time.perf_counter()
            active = rew_model if method == "rew" else model
            record = RunRecord(
                task=config.task_id, method=method, repetition=rep, seed=seed,
                model_fingerprint=active.fingerprint() if active is not None else "",
            )
            try:
                if method == "rew" and rew_error is not None:
                    raise UsageError(f"reweighted training failed: {rew_error}")
                y_pred = _method_predictions(method, model, rew_model, test, domains, corr)
                preds = LabeledPredictions.from_dataset(test, y_pred)
                record.report = compute_report(preds)
                rep_reports[method] = record.report
                rep_preds[method] = preds
            except Exception as e:  # isolate the cell, keep the matrix going
                record.error = f"{type(e).__name__}: {e}"
            record.duration_s = time.perf_counter() - start
            records.append(record)

        if "original" in rep_reports:
            cases.extend(
                _classify_rep(config, rep, rep_reports, rep_preds["original"], seed)
            )
    return ExperimentResult(records=records, fairea_cases=cases)


def _classify_rep(config, rep, rep_reports, original_preds, seed):
    """Fairea-classify every mitigation method of one repetition."""
    curve = mutation_curve(original_preds, config.fairea_degrees, config.fairea_reps, seed)
    original_flat = rep_reports["original"].to_flat_dict()
    cases = []
    for method, report in rep_reports.items():
        if method == "original":
            continue
        flat = report.to_flat_dict()
        for fm in FAIRNESS_METRICS:
            for pm in PERFORMANCE_METRICS:
                baseline = build_baseline(
                    original_preds, fm, pm, config.fairea_degrees,
                    config.fairea_reps, seed, curve=curve,
                )
                method_point = _point(flat, fm, pm)
                original_point = _point(original_flat, fm, pm)
                region = classify_case(method_point, original_point, baseline)
                cases.append(FaireaCase(
                    task=config.task_id, method=method, repetition=rep,
                    fairness_metric=fm, performance_metric=pm, region=region.value,
                ))
    return cases


def _point(flat, fairness_metric, performance_metric):
    from .fairea import TradeoffPoint

    return TradeoffPoint(
        fairness=flat[fairness_metric], performance=flat[performance_metric],
        fairness_metric=fairness_metric, performance_metric=performance_metric,
    )


def improvement_table(rows) -> list:
    """Per (method, metric): mean values and absolute/relative change vs original."""
    ok = [r for r in rows if r.get("status", "ok") == "ok"]
    metric_names = [k for k in (FAIRNESS_METRICS + PERFORMANCE_METRICS) if any(k in r for r in ok)]
    by_method: dict = {}
    for r in ok:
        by_method.setdefault((r["task"], r["method"]), []).append(r)

    table = []
    tasks = sorted({t for t, _ in by_method})
    for task in tasks:
        base = by_method.get((task, "original"))
        methods = sorted({m for t, m in by_method if t == task and m != "original"})
        for method in methods:
            for metric in metric_names:
                vals = [float(r[metric]) for r in by_method[(task, method)] if metric in r]
                if not vals:
                    continue
                mean_m = float(np.mean(vals))
                entry = {
                    "task": task, "method": method, "metric": metric,
                    "method_mean": mean_m, "original_mean": "",
                    "absolute_change": "", "relative_change_pct": "",
                }
                if base:
                    base_vals = [float(r[metric]) for r in base if metric in r]
                    if base_vals:
                        mean_o = float(np.mean(base_vals))
                        entry["original_mean"] = mean_o
                        entry["absolute_change"] = mean_m - mean_o
                        if mean_o != 0:
                            entry["relative_change_pct"] = 100.0 * (mean_m - mean_o) / mean_o
                table.append(entry)
    return table


def wtl_matrix(rows, subject: str = "fairhome", alpha: float = 0.05) -> list:
    """Win/tie/loss counts of ``subject`` vs every other method, per fairness metric."""
    ok = [r for r in rows if r.get("status", "ok") == "ok"]
    by_cell: dict = {}
    for r in ok:
        by_cell.setdefault((r["task"], r["method"]), []).append(r)
    opponents = sorted({m for _, m in by_cell if m != subject})
    tasks = sorted({t for t, _ in by_cell})

    out = []
    for metric in FAIRNESS_METRICS:
        row = {"metric": metric}
        for opp in opponents:
            counts = {"win": 0, "tie": 0, "loss": 0}
            for task in tasks:
                subj_rows = by_cell.get((task, subject), [])
                opp_rows = by_cell.get((task, opp), [])
                subj_vals = [float(r[metric]) for r in subj_rows if metric in r]
                opp_vals = [float(r[metric]) for r in opp_rows if metric in r]
                if not subj_vals or not opp_vals:
                    continue
                outcome = win_tie_loss(subj_vals, opp_vals, alpha=alpha, lower_is_better=True)
                counts[outcome.outcome] += 1
            row[opp] = f"{counts['win']}/{counts['tie']}/{counts['loss']}"
        out.append(row)
    return out


def region_distribution(case_rows) -> list:
    """Count of each trade-off region per method, plus the beats-baseline share."""
    by_method: dict = {}
    for r in case_rows:
        by_method.setdefault(r["method"], []).append(r["region"])
    out = []
    for method in sorted(by_method):
        regions = by_method[method]
        counts = {name: regions.count(name) for name in
                  ("win-win", "good", "poor", "lose-lose", "inverted")}
        total = len(regions)
        beats = counts["win-win"] + counts["good"]
        out.append({
            "method": method, **counts, "total": total,
            "beats_baseline_pct": 100.0 * beats / total if total else 0.0,
        })
    return out


def _write_csv(path, rows, fieldnames) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _record_fieldnames(rows) -> list:
    head = ["task", "method", "repetition", "seed", "model_fingerprint", "status", "error"]
    core = [k for k in FAIRNESS_METRICS + PERFORMANCE_METRICS if any(k in r for r in rows)]
    extra = sorted({k for r in rows for k in r} - set(head) - set(core))
    return head + core + extra


def emit_report(records, fairea_cases, wtl_rows, output_dir) -> dict:
    """Write the per-cell metrics, improvement, win-tie-loss, and region CSVs.

    Returns the paths written. Wall-clock durations go to the manifest only so
    the metric CSVs stay byte-identical across reruns.
    """
    os.makedirs(output_dir, exist_ok=True)
    paths = {}

    rows = [r.to_row() for r in records]
    paths["metrics"] = os.path.join(output_dir, "metrics.csv")
    _write_csv(paths["metrics"], rows, _record_fieldnames(rows))

    imp = improvement_table(rows)
    paths["improvement"] = os.path.join(output_dir, "improvement.csv")
    _write_csv(paths["improvement"], imp,
               ["task", "method", "metric", "original_mean", "method_mean",
                "absolute_change", "relative_change_pct"])

    if wtl_rows:
        paths["wtl"] = os.path.join(output_dir, "win_tie_loss.csv")
        fields = ["metric"] + sorted({k for r in wtl_rows for k in r} - {"metric"})
        _write_csv(paths["wtl"], wtl_rows, fields)

    if fairea_cases:
        case_rows = [c.to_row() for c in fairea_cases]
        paths["fairea_cases"] = os.path.join(output_dir, "fairea_regions.csv")
        _write_csv(paths["fairea_cases"], case_rows,
                   ["task", "method", "repetition", "fairness_metric",
                    "performance_metric", "region"])
        paths["regions"] = os.path.join(output_dir, "region_distribution.csv")
        _write_csv(paths["regions"], region_distribution(case_rows),
                   ["method", "win-win", "good", "poor", "lose-lose", "inverted",
                    "total", "beats_baseline_pct"])
    return paths


def write_manifest(config: ExperimentConfig, records, output_dir) -> str:
    path = os.path.join(output_dir, "manifest.json")
    doc = {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "seeds": sorted({r.seed for r in records}),
        "cells": [
            {"task": r.task, "method": r.method, "repetition": r.repetition,
             "fingerprint": r.model_fingerprint, "duration_s": round(r.duration_s, 4),
             "status": "ok" if r.error is None else "failed"}
            for r in records
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return path


def read_records_csv(path) -> list:
    """Load a metrics.csv back into row dicts (numbers parsed where possible)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = []
        for row in csv.DictReader(fh):
            parsed = {}
            for k, v in row.items():
                if k in ("task", "method", "status", "error", "model_fingerprint",
                         "excluded_subgroups"):
                    parsed[k] = v
                else:
                    try:
                        parsed[k] = float(v)
                    except (TypeError, ValueError):
                        parsed[k] = v
            rows.append(parsed)
        return rows
