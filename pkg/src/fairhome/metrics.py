"""Intersectional fairness metrics, single-attribute group fairness, and ML performance.

Worst-case metrics take the max-minus-min spread across subgroups; average-case
metrics take the mean absolute deviation from the population rate. Subgroups
lacking the rows a term needs (e.g. no positive labels for a TPR) are excluded
from that term and reported, rather than imputed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, SubgroupKey
from .errors import MetricUndefinedError, UsageError

FAIRNESS_METRICS = ("wc_spd", "wc_aod", "wc_eod", "ac_spd", "ac_aod", "ac_eod")
PERFORMANCE_METRICS = ("accuracy", "macro_precision", "macro_recall", "macro_f1", "mcc")


@dataclass
class LabeledPredictions:
    """Parallel truth/prediction vectors with subgroup and per-attribute group keys."""

    y_true: np.ndarray
    y_pred: np.ndarray
    subgroup_of: tuple
    single_group_of: dict

    def __post_init__(self):
        self.y_true = np.asarray(self.y_true, dtype=int)
        self.y_pred = np.asarray(self.y_pred, dtype=int)
        n = len(self.y_true)
        if len(self.y_pred) != n or len(self.subgroup_of) != n:
            raise UsageError("y_true, y_pred, and subgroup_of must have equal lengths")
        for attr, groups in self.single_group_of.items():
            if len(groups) != n:
                raise UsageError(f"group list for {attr!r} has wrong length")
        for arr in (self.y_true, self.y_pred):
            bad = set(np.unique(arr)) - {0, 1}
            if bad:
                raise UsageError(f"labels must be 0/1, found {sorted(bad)}")

    @classmethod
    def from_dataset(cls, test: Dataset, y_pred) -> "LabeledPredictions":
        schema = test.schema
        idx = schema.protected_indices
        subgroups = tuple(
            SubgroupKey.from_combo(schema.protected, tuple(row[i] for i in idx))
            for row in test.rows
        )
        singles = {
            name: tuple(row[i] for row in test.rows)
            for name, i in zip(schema.protected, idx)
        }
        return cls(
            y_true=np.asarray(test.labels), y_pred=np.asarray(y_pred),
            subgroup_of=subgroups, single_group_of=singles,
        )

    def __len__(self) -> int:
        return len(self.y_true)


@dataclass
class _Counts:
    n: int = 0
    n_pos: int = 0
    n_neg: int = 0
    pred_pos: int = 0
    tp: int = 0
    fp: int = 0

    @property
    def rate(self) -> float:
        return self.pred_pos / self.n

    @property
    def tpr(self) -> float:
        return self.tp / self.n_pos

    @property
    def fpr(self) -> float:
        return self.fp / self.n_neg


def _counts_by(keys, y_true, y_pred) -> dict:
    out: dict = {}
    for key, yt, yp in zip(keys, y_true, y_pred):
        c = out.setdefault(key, _Counts())
        c.n += 1
        if yt == 1:
            c.n_pos += 1
            c.tp += int(yp == 1)
        else:
            c.n_neg += 1
            c.fp += int(yp == 1)
        c.pred_pos += int(yp == 1)
    return out


def _key_label(key) -> str:
    return key.label() if isinstance(key, SubgroupKey) else str(key)


def _eligibility(groups: dict):
    """Split group keys into those usable for rate, TPR, and TPR+FPR terms."""
    spd_keys, eod_keys, aod_keys, exclusions = [], [], [], []
    for key, c in groups.items():
        spd_keys.append(key)
        if c.n_pos >= 1:
            eod_keys.append(key)
        else:
            exclusions.append(f"{_key_label(key)}: no positive-label rows (TPR undefined)")
        if c.n_pos >= 1 and c.n_neg >= 1:
            aod_keys.append(key)
        elif c.n_pos >= 1:
            exclusions.append(f"{_key_label(key)}: no negative-label rows (FPR undefined)")
    return spd_keys, eod_keys, aod_keys, exclusions


def _spread(values) -> float:
    return max(values) - min(values)


def worst_case_metrics(data: LabeledPredictions):
    """Max-minus-min of favorable rate, FPR+TPR average, and TPR across subgroups."""
    groups = _counts_by(data.subgroup_of, data.y_true, data.y_pred)
    spd_keys, eod_keys, aod_keys, exclusions = _eligibility(groups)
    if len(spd_keys) < 2:
        raise MetricUndefinedError("fewer than 2 subgroups with test rows", exclusions)
    if len(eod_keys) < 2:
        raise MetricUndefinedError("fewer than 2 subgroups eligible for TPR terms", exclusions)
    if len(aod_keys) < 2:
        raise MetricUndefinedError("fewer than 2 subgroups eligible for FPR terms", exclusions)
    wc_spd = _spread([groups[k].rate for k in spd_keys])
    wc_aod = 0.5 * _spread([groups[k].fpr + groups[k].tpr for k in aod_keys])
    wc_eod = _spread([groups[k].tpr for k in eod_keys])
    return wc_spd, wc_aod, wc_eod


def average_case_metrics(data: LabeledPredictions):
    """Mean absolute deviation of each subgroup's rates from the population's."""
    groups = _counts_by(data.subgroup_of, data.y_true, data.y_pred)
    spd_keys, eod_keys, aod_keys, exclusions = _eligibility(groups)
    pop = _counts_by([None] * len(data), data.y_true, data.y_pred)[None]
    if len(spd_keys) < 1:
        raise MetricUndefinedError("no subgroups with test rows", exclusions)
    if pop.n_pos < 1 or len(eod_keys) < 1:
        raise MetricUndefinedError("no positive-label rows for TPR terms", exclusions)
    if pop.n_neg < 1 or len(aod_keys) < 1:
        raise MetricUndefinedError("no negative-label rows for FPR terms", exclusions)
    ac_spd = float(np.mean([abs(groups[k].rate - pop.rate) for k in spd_keys]))
    ac_aod = float(np.mean([
        0.5 * (abs(groups[k].fpr - pop.fpr) + abs(groups[k].tpr - pop.tpr))
        for k in aod_keys
    ]))
    ac_eod = float(np.mean([abs(groups[k].tpr - pop.tpr) for k in eod_keys]))
    return ac_spd, ac_aod, ac_eod


def group_metrics(data: LabeledPredictions, attribute: str):
    """SPD/AOD/EOD for one protected attribute.

    Two groups give the absolute-difference form; more than two fall back to
    the max-minus-min spread per term.
    """
    if attribute not in data.single_group_of:
        raise UsageError(f"{attribute!r} is not a protected attribute of this data")
    groups = _counts_by(data.single_group_of[attribute], data.y_true, data.y_pred)
    spd_keys, eod_keys, aod_keys, exclusions = _eligibility(groups)
    if len(spd_keys) < 2 or len(eod_keys) < 2 or len(aod_keys) < 2:
        raise MetricUndefinedError(
            f"fewer than 2 eligible groups for attribute {attribute!r}", exclusions
        )
    spd = _spread([groups[k].rate for k in spd_keys])
    aod = 0.5 * (_spread([groups[k].fpr for k in aod_keys])
                 + _spread([groups[k].tpr for k in aod_keys]))
    eod = _spread([groups[k].tpr for k in eod_keys])
    return spd, aod, eod


def performance_metrics(data: LabeledPredictions):
    """Accuracy, macro precision/recall/F1 over both classes, and MCC."""
    if len(data) == 0:
        raise UsageError("need at least one row")
    yt, yp = data.y_true, data.y_pred
    tp = int(np.sum((yt == 1) & (yp == 1)))
    fp = int(np.sum((yt == 0) & (yp == 1)))
    tn = int(np.sum((yt == 0) & (yp == 0)))
    fn = int(np.sum((yt == 1) & (yp == 0)))

    accuracy = (tp + tn) / len(data)

    def prf(tp_c, fp_c, fn_c):
        precision = tp_c / (tp_c + fp_c) if tp_c + fp_c > 0 else 0.0
        recall = tp_c / (tp_c + fn_c) if tp_c + fn_c > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        return precision, recall, f1

    p1, r1, f1_1 = prf(tp, fp, fn)
    p0, r0, f1_0 = prf(tn, fn, fp)  # class 0: predicted-0 rows are its "positives"
    macro_p = (p1 + p0) / 2
    macro_r = (r1 + r0) / 2
    macro_f1 = (f1_1 + f1_0) / 2

    denom = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    mcc = 0.0 if denom == 0 else (tp * tn - fp * fn) / denom
    return accuracy, macro_p, macro_r, macro_f1, mcc


@dataclass
class MetricReport:
    """Six intersectional fairness values plus five ML performance values."""

    wc_spd: float
    wc_aod: float
    wc_eod: float
    ac_spd: float
    ac_aod: float
    ac_eod: float
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    mcc: float
    per_attribute: dict = field(default_factory=dict)
    excluded_subgroups: tuple = ()

    def to_flat_dict(self) -> dict:
        out = {name: getattr(self, name) for name in FAIRNESS_METRICS + PERFORMANCE_METRICS}
        for attr, vals in self.per_attribute.items():
            for metric, v in vals.items():
                out[f"{metric}_{attr}"] = v
        out["excluded_subgroups"] = ";".join(self.excluded_subgroups)
        return out


def compute_report(data: LabeledPredictions) -> MetricReport:
    """Evaluate every fairness and performance metric for one prediction set."""
    wc_spd, wc_aod, wc_eod = worst_case_metrics(data)
    ac_spd, ac_aod, ac_eod = average_case_metrics(data)
    accuracy, macro_p, macro_r, macro_f1, mcc = performance_metrics(data)
    per_attribute = {}
    for attr in data.single_group_of:
        spd, aod, eod = group_metrics(data, attr)
        per_attribute[attr] = {"spd": spd, "aod": aod, "eod": eod}
    groups = _counts_by(data.subgroup_of, data.y_true, data.y_pred)
    exclusions = _eligibility(groups)[3]
    return MetricReport(
        wc_spd=wc_spd, wc_aod=wc_aod, wc_eod=wc_eod,
        ac_spd=ac_spd, ac_aod=ac_aod, ac_eod=ac_eod,
        accuracy=accuracy, macro_precision=macro_p, macro_recall=macro_r,
        macro_f1=macro_f1, mcc=mcc,
        per_attribute=per_attribute, excluded_subgroups=tuple(exclusions),
    )
