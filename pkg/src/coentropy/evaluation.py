"""Selective-prediction metrics and baseline uncertainty scores.

Orientation convention: higher uncertainty means the answer is more likely
wrong. AUROC is the probability that a uniformly random correct item scores
strictly below a random incorrect one, ties counting one half; it is
computed by the rank-sum formulation, which reproduces the pairwise count
exactly. Rejection curves sort ascending by uncertainty with the item id as
a deterministic tie-break; AURAC is the mean of the retained-accuracy curve
over the n discrete retention points k/n (the step-function integral over
(0, 1], which is what the area under the curve reduces to on a finite set).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .clustering import ResponseSample
from .errors import DataError, DegenerateLabels, MissingField, MissingLogprob

DEFAULT_RETENTION_GRID = (0.80, 0.90, 0.95, 1.00)


@dataclass(frozen=True)
class ScoredItem:
    """One evaluated prediction: an uncertainty score and a correctness label."""

    item_id: str
    uncertainty: float
    correct: bool

    def __post_init__(self):
        if not math.isfinite(self.uncertainty):
            raise DataError(f"item {self.item_id!r}: uncertainty must be finite")


@dataclass(frozen=True)
class EvalSummary:
    auroc: float
    aurac: float
    rejection_accuracy: Mapping[float, float]
    n_items: int


def auroc(items: Sequence[ScoredItem]) -> float:
    """Rank-sum AUROC of the uncertainty score for predicting incorrectness."""
    items = list(items)
    n_wrong = sum(1 for it in items if not it.correct)
    n_right = len(items) - n_wrong
    if n_wrong == 0 or n_right == 0:
        raise DegenerateLabels(
            f"need both labels, got {n_right} correct / {n_wrong} incorrect"
        )
    ranked = sorted(items, key=lambda it: it.uncertainty)
    # average ranks within tie runs (1-based)
    ranks = [0.0] * len(ranked)
    i = 0
    while i < len(ranked):
        j = i
        while j + 1 < len(ranked) and \
                ranked[j + 1].uncertainty == ranked[i].uncertainty:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[k] = avg
        i = j + 1
    rank_sum_wrong = sum(r for r, it in zip(ranks, ranked) if not it.correct)
    u = rank_sum_wrong - n_wrong * (n_wrong + 1) / 2.0
    return u / (n_wrong * n_right)


def _sorted_by_uncertainty(items: Sequence[ScoredItem]) -> list:
    return sorted(items, key=lambda it: (it.uncertainty, it.item_id))


def _keep_count(retention: float, n: int) -> int:
    # ceil(retention*n), guarding against the product landing a hair above
    # an exact integer (0.95 * 200 -> 190.0000000000003)
    k = math.ceil(retention * n - 1e-9)
    return min(max(k, 1), n)


def rejection_accuracy(items: Sequence[ScoredItem], retention: float) -> float:
    """Accuracy over the ceil(retention*n) least uncertain items."""
    items = list(items)
    if not items:
        raise DataError("no items to evaluate")
    if not 0.0 < retention <= 1.0:
        raise DataError(f"retention must lie in (0, 1], got {retention}")
    kept = _sorted_by_uncertainty(items)[: _keep_count(retention, len(items))]
    return sum(1 for it in kept if it.correct) / len(kept)


def aurac(items: Sequence[ScoredItem]) -> float:
    """Area under the retained-accuracy curve over retention (0, 1]."""
    items = _sorted_by_uncertainty(items)
    if not items:
        raise DataError("no items to evaluate")
    total = 0.0
    correct_so_far = 0
    for k, it in enumerate(items, start=1):
        if it.correct:
            correct_so_far += 1
        total += correct_so_far / k
    return total / len(items)


def evaluate(items: Sequence[ScoredItem],
             retention_grid: Sequence[float] = DEFAULT_RETENTION_GRID,
             ) -> EvalSummary:
    """All selective-prediction metrics for one uncertainty score."""
    items = list(items)
    return EvalSummary(
        auroc=auroc(items),
        aurac=aurac(items),
        rejection_accuracy={r: rejection_accuracy(items, r)
                            for r in retention_grid},
        n_items=len(items),
    )


def baseline_mean_se(per_model_se: Sequence[float]) -> float:
    """Arithmetic mean of the per-model semantic entropies.

    Identical to the aleatoric component under uniform weighting; kept as
    its own baseline because it treats the models as unrelated.
    """
    per_model_se = list(per_model_se)
    if not per_model_se:
        raise DataError("need at least one model")
    return sum(per_model_se) / len(per_model_se)


def baseline_regular_entropy(samples: Sequence[ResponseSample]) -> float:
    """Mean negative per-token log-likelihood across one model's samples.

    The raw token distribution is not recoverable from sampled outputs, so
    this Monte-Carlo proxy stands in for token-level predictive entropy.
    """
    samples = list(samples)
    if not samples:
        raise DataError("need at least one sample")
    acc = 0.0
    for s in samples:
        if s.sum_logprob is None or s.token_count is None:
            raise MissingLogprob(
                "regular entropy needs log-probabilities on every sample"
            )
        acc += -(s.sum_logprob / s.token_count)
    return acc / len(samples)


def baseline_p_false(record) -> float:
    """Mean of the per-model self-judged falsehood probabilities.

    A passthrough score: the values were ingested with the dataset, this
    merely averages them across models (the multi-model reporting
    convention shared by all single-model baselines).
    """
    values = []
    for i, model in enumerate(record.models):
        if model.p_false is None:
            raise MissingField(
                f"record {record.question_id!r}: model {i} has no p_false"
            )
        values.append(model.p_false)
    return sum(values) / len(values)
