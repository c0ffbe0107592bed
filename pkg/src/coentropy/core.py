"""Cluster-space distributions and the collaborative-entropy decomposition.

The system-level uncertainty of an ensemble of answerers splits into an
aleatoric part (mean per-model entropy over the shared semantic clusters)
and an epistemic part (weighted divergence of each model from the ensemble
mean). Everything here is a pure function over immutable value types and is
safe to call from any thread.

All entropies and KL-family divergences are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .divergences import CostMatrix, DivergenceKind, evaluate_divergence
from .errors import InvalidDistribution, InvalidEnsemble

# Constructor policy for simplex vectors: deviations up to this are
# renormalized away, anything larger is rejected as a data error.
SIMPLEX_ATOL = 1e-6

# Default fractions of the quadrant maxima (ln(#clusters), ln(#models))
# above which a component counts as "high".
DEFAULT_TAU_A = 0.5
DEFAULT_TAU_E = 0.5


class Quadrant(Enum):
    """The four regimes on the (aleatoric, epistemic) plane."""

    WE_DO_NOT_KNOW = "WeDoNotKnow"            # high A, high E
    CONFIDENT_DISAGREE = "ConfidentDisagree"  # low A, high E
    VERY_SURE = "VerySure"                    # low A, low E
    MULTIPLE_REASONABLE = "MultipleReasonable"  # high A, low E


def _as_simplex(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidDistribution(f"{what} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise InvalidDistribution(f"{what} contains non-finite entries")
    if np.any(arr < 0.0):
        raise InvalidDistribution(f"{what} contains negative entries")
    total = float(arr.sum())
    if total == 0.0:
        raise InvalidDistribution(f"{what} is identically zero")
    if abs(total - 1.0) > SIMPLEX_ATOL:
        raise InvalidDistribution(
            f"{what} sums to {total!r}, more than {SIMPLEX_ATOL} away from 1"
        )
    arr = arr / total
    arr.flags.writeable = False
    return arr


class ClusterDistribution:
    """One model's probability vector over the shared semantic clusters.

    Entries are non-negative and sum to one; small input deviations are
    renormalized on construction, larger ones rejected.
    """

    __slots__ = ("_probs",)

    def __init__(self, probs):
        self._probs = _as_simplex(probs, "cluster distribution")

    @classmethod
    def delta(cls, index: int, n_clusters: int) -> "ClusterDistribution":
        """Point mass on one cluster."""
        if not 0 <= index < n_clusters:
            raise InvalidDistribution(
                f"delta index {index} out of range for {n_clusters} clusters"
            )
        probs = np.zeros(n_clusters)
        probs[index] = 1.0
        return cls(probs)

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def n_clusters(self) -> int:
        return self._probs.shape[0]

    def is_delta(self) -> bool:
        return bool(np.any(self._probs == 1.0))

    def argmax(self) -> int:
        """Index of the most probable cluster; ties go to the lowest index."""
        return int(np.argmax(self._probs))

    def __len__(self) -> int:
        return self.n_clusters

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClusterDistribution):
            return NotImplemented
        return np.array_equal(self._probs, other._probs)

    def __repr__(self) -> str:
        return f"ClusterDistribution({self._probs.tolist()!r})"


class EnsembleState:
    """Cluster distributions of all models plus their ensemble weights.

    All distributions live on one shared cluster space. Weights default to
    uniform; they are validated and normalized like any simplex vector.
    """

    __slots__ = ("_distributions", "_weights", "_stack", "query_id")

    def __init__(self, distributions, weights=None, query_id: str = ""):
        dists = tuple(distributions)
        if not dists:
            raise InvalidEnsemble("ensemble needs at least one model")
        n_clusters = dists[0].n_clusters
        for d in dists:
            if not isinstance(d, ClusterDistribution):
                raise InvalidEnsemble(
                    "ensemble members must be ClusterDistribution instances"
                )
            if d.n_clusters != n_clusters:
                raise InvalidEnsemble(
                    "all ensemble members must share one cluster space"
                )
        if weights is None:
            w = np.full(len(dists), 1.0 / len(dists))
            w.flags.writeable = False
        else:
            w = _as_simplex(weights, "weight vector")
            if w.shape[0] != len(dists):
                raise InvalidEnsemble(
                    f"{w.shape[0]} weights for {len(dists)} models"
                )
        self._distributions = dists
        self._weights = w
        stack = np.ascontiguousarray(np.stack([d.probs for d in dists]))
        stack.flags.writeable = False
        self._stack = stack
        self.query_id = query_id

    @property
    def distributions(self) -> tuple:
        return self._distributions

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def n_models(self) -> int:
        return len(self._distributions)

    @property
    def n_clusters(self) -> int:
        return self._distributions[0].n_clusters

    def __repr__(self) -> str:
        return (
            f"EnsembleState(n_models={self.n_models}, "
            f"n_clusters={self.n_clusters}, query_id={self.query_id!r})"
        )


@dataclass(frozen=True)
class CoEReport:
    """Decomposed collaborative entropy for one ensemble and one divergence."""

    u_aleatoric: float
    u_epistemic: float
    u_coe: float
    per_model_se: tuple
    per_model_div: tuple
    divergence_kind: DivergenceKind
    quadrant: Quadrant

    def __post_init__(self):
        if self.u_coe != self.u_aleatoric + self.u_epistemic:
            raise InvalidEnsemble("report total must be the exact sum of parts")
        if min(self.u_aleatoric, self.u_epistemic, self.u_coe) < -1e-9:
            raise InvalidEnsemble("uncertainty components must be non-negative")


def semantic_entropy(d: ClusterDistribution) -> float:
    """Shannon entropy of a cluster distribution, in nats.

    Zero exactly for a point mass, at most ln(n_clusters).
    """
    return kernels.entropy(d.probs)


def u_aleatoric(e: EnsembleState) -> float:
    """Mean per-model semantic entropy (the intra-model component).

    Plain unweighted mean: ensemble weights deliberately play no role here.
    """
    acc = 0.0
    for d in e.distributions:
        acc += kernels.entropy(d.probs)
    return acc / e.n_models


def ensemble_mean(e: EnsembleState) -> ClusterDistribution:
    """Weight-convex combination of the member distributions."""
    return ClusterDistribution(kernels.mixture(e._stack, e.weights))


def _epistemic_terms(e: EnsembleState, kind: DivergenceKind,
                     cost: CostMatrix | None):
    """Ensemble mean plus each model's divergence from it.

    Zero-weight models are never evaluated (their support may exceed the
    mean's) and report a divergence of 0.0.
    """
    mean = ensemble_mean(e)
    w = e.weights
    divs = []
    for i, d in enumerate(e.distributions):
        if w[i] == 0.0:
            divs.append(0.0)
        else:
            divs.append(evaluate_divergence(kind, d, mean, cost=cost))
    return mean, divs


def u_epistemic(e: EnsembleState, kind: DivergenceKind = DivergenceKind.KL,
                *, cost: CostMatrix | None = None) -> float:
    """Weighted divergence of each model from the ensemble mean.

    For KL the result is always finite: the mean covers the support of every
    positively weighted member.
    """
    _, divs = _epistemic_terms(e, kind, cost)
    w = e.weights
    acc = 0.0
    for i, div in enumerate(divs):
        if w[i] != 0.0:
            acc += w[i] * div
    return acc


def classify_quadrant(u_a: float, u_e: float, n_models: int, n_clusters: int,
                      *, tau_a: float = DEFAULT_TAU_A,
                      tau_e: float = DEFAULT_TAU_E) -> Quadrant:
    """Threshold the two components against fractions of their maxima.

    A component is "high" when it strictly exceeds tau * ln(max-count); with
    one model (or one cluster) the respective axis can only be low.
    """
    high_a = u_a > tau_a * math.log(n_clusters)
    high_e = u_e > tau_e * math.log(n_models)
    if high_a and high_e:
        return Quadrant.WE_DO_NOT_KNOW
    if high_e:
        return Quadrant.CONFIDENT_DISAGREE
    if high_a:
        return Quadrant.MULTIPLE_REASONABLE
    return Quadrant.VERY_SURE


def coe(e: EnsembleState, kind: DivergenceKind = DivergenceKind.KL, *,
        cost: CostMatrix | None = None, tau_a: float = DEFAULT_TAU_A,
        tau_e: float = DEFAULT_TAU_E) -> CoEReport:
    """Full collaborative-entropy report for one ensemble.

    The total is the floating-point sum of the two components exactly as
    ``u_aleatoric`` and ``u_epistemic`` compute them, so recomputing either
    side separately reproduces the report bit for bit.
    """
    per_model_se = tuple(kernels.entropy(d.probs) for d in e.distributions)
    u_a = u_aleatoric(e)
    _, divs = _epistemic_terms(e, kind, cost)
    w = e.weights
    u_e = 0.0
    for i, div in enumerate(divs):
        if w[i] != 0.0:
            u_e += w[i] * div
    return CoEReport(
        u_aleatoric=u_a,
        u_epistemic=u_e,
        u_coe=u_a + u_e,
        per_model_se=per_model_se,
        per_model_div=tuple(divs),
        divergence_kind=kind,
        quadrant=classify_quadrant(u_a, u_e, e.n_models, e.n_clusters,
                                   tau_a=tau_a, tau_e=tau_e),
    )
