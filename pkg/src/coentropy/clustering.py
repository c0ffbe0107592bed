"""Semantic clustering of pooled responses via bidirectional entailment.

All models' sampled responses are pooled and partitioned greedily: a sample
joins the first existing cluster whose representative it mutually entails,
otherwise it opens a new cluster. Comparing only against representatives
keeps the oracle budget at O(samples * clusters) instead of all pairs; with
a transitive mutual-entailment relation the result coincides with connected
components (tested against that brute force).

Texts are canonicalized before entailment and deduplication: whitespace
trimmed and collapsed, case folded. Entailment itself is delegated to an
oracle object; two in-process oracles live here, the HTTP client in
``harness_io``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from enum import Enum
from typing import Protocol

from .core import ClusterDistribution, EnsembleState
from .errors import (
    EmptyInput,
    InvalidEnsemble,
    MissingLogprob,
    NoSamplesForModel,
    OracleFailure,
)


def normalize_text(text: str) -> str:
    """Trim, collapse internal whitespace runs, case-fold."""
    return " ".join(text.split()).casefold()


def text_hash(text: str) -> str:
    """Content address of a normalized text (sha256 hex)."""
    return hashlib.sha256(normalize_text(text).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ResponseSample:
    """One sampled output sequence from one model.

    ``sum_logprob`` is the sum of token log-probabilities in nats;
    ``token_count`` the number of tokens. Either both are present or both
    absent (frequency-only data).
    """

    model_index: int
    text: str
    sum_logprob: float | None = None
    token_count: int | None = None

    def __post_init__(self):
        if self.model_index < 0:
            raise InvalidEnsemble("model_index must be non-negative")
        if (self.sum_logprob is None) != (self.token_count is None):
            raise MissingLogprob(
                "sum_logprob and token_count must be present together"
            )
        if self.token_count is not None and self.token_count < 1:
            raise MissingLogprob("token_count must be >= 1")


def length_normalized_prob(s: ResponseSample) -> float:
    """exp(sum_logprob / token_count): per-sequence generation probability
    normalized for length."""
    if s.sum_logprob is None or s.token_count is None:
        raise MissingLogprob(
            "sample carries no log-probability; use frequency mode"
        )
    return math.exp(s.sum_logprob / s.token_count)


class EntailmentOracle(Protocol):
    """Directional entailment judgment; must be reflexive and deterministic
    for fixed inputs within one run."""

    def entails(self, premise: str, hypothesis: str) -> bool: ...


class ExactMatchOracle:
    """Entailment as equality of normalized texts (the default for tests)."""

    def entails(self, premise: str, hypothesis: str) -> bool:
        return normalize_text(premise) == normalize_text(hypothesis)


class MatrixOracle:
    """Entailment read from a precomputed boolean table keyed by text hashes.

    A missing pair is an oracle failure: the table was built offline and
    cannot answer questions it never saw. Reflexive pairs are always true.
    """

    def __init__(self, table):
        # table: mapping (hash_a, hash_b) -> bool
        self._table = dict(table)

    def entails(self, premise: str, hypothesis: str) -> bool:
        ha, hb = text_hash(premise), text_hash(hypothesis)
        if ha == hb:
            return True
        try:
            return self._table[(ha, hb)]
        except KeyError:
            raise OracleFailure(
                f"entailment table has no entry for pair ({ha[:12]}…, {hb[:12]}…)"
            ) from None


@dataclass(frozen=True)
class ClusterSpace:
    """Shared semantic clusters induced over the pooled samples.

    ``assignments[i]`` is the cluster id of pooled sample i;
    ``representatives[j]`` the lowest sample index belonging to cluster j.
    """

    n_clusters: int
    representatives: tuple
    assignments: tuple

    def __post_init__(self):
        if self.n_clusters < 1 or len(self.representatives) != self.n_clusters:
            raise InvalidEnsemble("one representative per cluster required")
        if any(not 0 <= c < self.n_clusters for c in self.assignments):
            raise InvalidEnsemble("assignment references an unknown cluster")
        firsts = {}
        for idx, c in enumerate(self.assignments):
            firsts.setdefault(c, idx)
        if len(firsts) != self.n_clusters:
            raise InvalidEnsemble("every cluster must be non-empty")
        for c, rep in enumerate(self.representatives):
            if firsts[c] != rep:
                raise InvalidEnsemble(
                    "representative must be the lowest-indexed member"
                )


class ProbMode(Enum):
    LOGPROB = "logprob"
    FREQUENCY = "frequency"


def cluster_pool(samples, oracle: EntailmentOracle) -> ClusterSpace:
    """Greedy sequential clustering of the pooled samples.

    Deterministic given the oracle and the input order. Directional oracle
    results are memoized per call on the normalized text pair; identical
    normalized texts short-circuit to true (reflexivity).
    """
    samples = list(samples)
    if not samples:
        raise EmptyInput("no samples to cluster")
    texts = []
    for i, s in enumerate(samples):
        t = normalize_text(s.text)
        if not t:
            raise EmptyInput(f"sample {i} is blank after trimming")
        texts.append(t)

    memo: dict = {}

    def entails(a: str, b: str) -> bool:
        if a == b:
            return True
        key = (a, b)
        hit = memo.get(key)
        if hit is None:
            hit = bool(oracle.entails(a, b))
            memo[key] = hit
        return hit

    representatives: list = []
    assignments: list = []
    for i, t in enumerate(texts):
        assigned = None
        for c, rep in enumerate(representatives):
            r = texts[rep]
            if entails(t, r) and entails(r, t):
                assigned = c
                break
        if assigned is None:
            representatives.append(i)
            assigned = len(representatives) - 1
        assignments.append(assigned)
    return ClusterSpace(
        n_clusters=len(representatives),
        representatives=tuple(representatives),
        assignments=tuple(assignments),
    )


def model_distribution(space: ClusterSpace, samples, model_index: int,
                       mode: ProbMode = ProbMode.LOGPROB) -> ClusterDistribution:
    """One model's probability vector over the shared clusters.

    Frequency mode: cluster counts over the model's sample count, duplicates
    included (the counts are the estimator). Logprob mode: the model's
    samples are first deduplicated by normalized text (a sequence's
    probability mass must not be counted twice), then each cluster gets the
    summed length-normalized probabilities of its distinct sequences,
    normalized over the model's total. Clusters without any sample from this
    model get exactly zero.
    """
    samples = list(samples)
    if len(samples) != len(space.assignments):
        raise InvalidEnsemble(
            "cluster space was built from a different sample list"
        )
    mine = [(i, s) for i, s in enumerate(samples)
            if s.model_index == model_index]
    if not mine:
        raise NoSamplesForModel(f"model {model_index} has no samples")

    mass = [0.0] * space.n_clusters
    if mode is ProbMode.FREQUENCY:
        for i, _ in mine:
            mass[space.assignments[i]] += 1.0
    else:
        seen: set = set()
        for i, s in mine:
            key = normalize_text(s.text)
            if key in seen:
                continue
            seen.add(key)
            mass[space.assignments[i]] += length_normalized_prob(s)
    total = sum(mass)
    return ClusterDistribution([m / total for m in mass])


def build_ensemble(samples, oracle: EntailmentOracle, *,
                   mode: ProbMode = ProbMode.LOGPROB, weights=None,
                   query_id: str = ""):
    """Cluster the pooled samples and assemble the ensemble state.

    Models are indexed 0..max(model_index); each must contribute at least
    one sample. Returns ``(space, ensemble)``.
    """
    samples = list(samples)
    space = cluster_pool(samples, oracle)
    n_models = max(s.model_index for s in samples) + 1
    dists = [model_distribution(space, samples, i, mode)
             for i in range(n_models)]
    return space, EnsembleState(dists, weights, query_id)
