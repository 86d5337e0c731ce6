"""Aggregate classifier outputs on an input and its mutants into one decision.

Tie conventions follow the decision rule "below 50% is unfavorable, otherwise
favorable": a probability (or vote split) landing exactly on the boundary
resolves to the favorable class.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import Instance, ProtectedDomains
from .errors import UsageError
from .mutate import CorrelationModel, MutationStrategy, generate_mutants


class EnsembleStrategy(Enum):
    MAJORITY_VOTE = "majority_vote"
    AVERAGING = "averaging"
    WEIGHTED_AVERAGING = "weighted_averaging"


@dataclass(frozen=True)
class EnsembleInputs:
    """Favorable-class probabilities, index 0 = the original input."""

    probabilities: tuple

    def __post_init__(self):
        if len(self.probabilities) == 0:
            raise UsageError("ensemble needs at least one probability")
        for p in self.probabilities:
            if not 0.0 <= p <= 1.0:
                raise UsageError(f"probability {p} outside [0, 1]")

    @property
    def decisions(self) -> tuple:
        return tuple(1 if p >= 0.5 else 0 for p in self.probabilities)


def aggregate(inputs: EnsembleInputs, strategy: EnsembleStrategy) -> int:
    """Combine member probabilities into a single {0,1} decision."""
    p = np.asarray(inputs.probabilities, dtype=float)
    if strategy is EnsembleStrategy.MAJORITY_VOTE:
        unfavorable = int((p < 0.5).sum())
        # unfavorable only when strictly more than half the votes are unfavorable
        return 0 if 2 * unfavorable > len(p) else 1
    if strategy is EnsembleStrategy.AVERAGING:
        return 1 if p.mean() >= 0.5 else 0
    if strategy is EnsembleStrategy.WEIGHTED_AVERAGING:
        w = np.abs(p - 0.5)
        total = w.sum()
        if total == 0.0:  # every member sits on the boundary; weighted mean undefined
            combined = p.mean()
        else:
            combined = float((w * p).sum() / total)
        return 1 if combined >= 0.5 else 0
    raise UsageError(f"unknown ensemble strategy {strategy!r}")


def fairhome_predict(
    classifier,
    instance: Instance,
    domains: ProtectedDomains,
    mutation: MutationStrategy = MutationStrategy.PROTECTED_ONLY,
    ensemble: EnsembleStrategy = EnsembleStrategy.MAJORITY_VOTE,
    corr: CorrelationModel | None = None,
    audit=None,
) -> int:
    """Ensemble decision over the original input and all its mutants.

    ``audit``, when given, is a callable receiving a dict with the member
    probabilities and the final decision (one record per prediction).
    """
    mutant_set = generate_mutants(instance, domains, mutation, corr)
    members = [instance, *mutant_set.mutants]
    probabilities = tuple(classifier.predict_proba(m) for m in members)
    decision = aggregate(EnsembleInputs(probabilities), ensemble)
    if audit is not None:
        audit({
            "probabilities": list(probabilities),
            "strategy": ensemble.value,
            "mutation": mutation.value,
            "decision": decision,
        })
    return decision
