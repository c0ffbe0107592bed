"""Post-hoc coordination heuristic guided by collaborative entropy.

Each iteration collapses every model's distribution onto its most probable
cluster, reweights models in proportion to how certain they have become
(factor 1 - entropy, clamped at a configurable floor), refreshes the
ensemble mean and recomputes the total uncertainty; the loop stops once the
total changes by less than epsilon or the iteration budget runs out.

Because the collapse step is idempotent and collapsed models all carry the
reweighting factor 1, the loop reaches a fixed point after one pass: traces
show at most two iterations for any positive epsilon. The per-model update
is pluggable for callers who want a softer inner step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import ClusterDistribution, EnsembleState, u_aleatoric, u_epistemic
from .divergences import CostMatrix, DivergenceKind
from .errors import ConfigError, DegenerateWeights


@dataclass(frozen=True)
class CoordinationConfig:
    """Knobs of the coordination loop.

    ``weight_floor`` bounds the reweighting factor from below (must stay
    under 1/n_models so it cannot invert the weight ordering).
    ``normalized_entropy`` switches the factor to 1 - entropy/ln(n_clusters),
    which is guaranteed to lie in [0, 1] for any cluster count; the default
    keeps the plain 1 - entropy factor.
    """

    epsilon: float = 1e-6
    t_max: int = 10
    divergence_kind: DivergenceKind = DivergenceKind.KL
    weight_floor: float = 0.0
    normalized_entropy: bool = False
    cost: CostMatrix | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be > 0")
        if self.t_max < 1:
            raise ConfigError("t_max must be >= 1")
        if not 0.0 <= self.weight_floor < 1.0:
            raise ConfigError("weight_floor must lie in [0, 1)")


@dataclass(frozen=True)
class IterationRecord:
    """State after one iteration (index 0 is the initial state)."""

    distributions: tuple
    weights: tuple
    u_coe: float


@dataclass(frozen=True)
class CoordinationTrace:
    steps: tuple
    final: EnsembleState
    converged: bool
    iterations_used: int
    consensus_cluster: int | None = field(default=None)


def greedy_delta(d: ClusterDistribution) -> ClusterDistribution:
    """Point mass on the most probable cluster; ties go to the lowest index.

    Idempotent: a delta maps to itself.
    """
    return ClusterDistribution.delta(d.argmax(), d.n_clusters)


def weight_update(e: EnsembleState, floor: float = 0.0, *,
                  normalized: bool = False) -> np.ndarray:
    """Entropy-proportional reweighting, renormalized to sum one.

    Each weight is scaled by max(floor, 1 - entropy_i); with the plain
    factor an entropy above 1 nat would go negative, which the floor
    clamps away. Raises when every factor clamps to a zero floor and the
    weights cannot renormalize.
    """
    log_l = np.log(e.n_clusters) if e.n_clusters > 1 else 1.0
    raw = []
    for d in e.distributions:
        se = kernels.entropy(d.probs)
        factor = 1.0 - se / log_l if normalized else 1.0 - se
        raw.append(max(floor, factor))
    new = np.array([w * f for w, f in zip(e.weights, raw)])
    total = float(new.sum())
    if total <= 0.0:
        raise DegenerateWeights(
            "all reweighting factors clamped to zero (every model's entropy "
            ">= 1 nat and no weight floor configured)"
        )
    return new / total


def _u_coe(e: EnsembleState, cfg: CoordinationConfig) -> float:
    return u_aleatoric(e) + u_epistemic(e, cfg.divergence_kind, cost=cfg.cost)


def coordinate(e: EnsembleState, cfg: CoordinationConfig | None = None, *,
               per_model_update=greedy_delta) -> CoordinationTrace:
    """Run the coordination loop and return its full trace.

    The trace records the initial state as step 0 and one record per
    iteration. ``consensus_cluster`` is set only when every terminal
    distribution is a delta on one shared cluster.
    """
    if cfg is None:
        cfg = CoordinationConfig()
    if cfg.weight_floor >= 1.0 / e.n_models:
        raise ConfigError(
            f"weight_floor must be < 1/{e.n_models} for this ensemble"
        )

    dists = list(e.distributions)
    weights = e.weights
    u_prev = _u_coe(e, cfg)
    steps = [IterationRecord(tuple(dists), tuple(weights.tolist()), u_prev)]

    converged = False
    iterations = 0
    while iterations < cfg.t_max:
        iterations += 1
        dists = [per_model_update(d) for d in dists]
        interim = EnsembleState(dists, weights, e.query_id)
        weights = weight_update(interim, cfg.weight_floor,
                                normalized=cfg.normalized_entropy)
        state = EnsembleState(dists, weights, e.query_id)
        u_cur = _u_coe(state, cfg)
        steps.append(IterationRecord(tuple(dists), tuple(weights.tolist()),
                                     u_cur))
        if abs(u_cur - u_prev) < cfg.epsilon:
            converged = True
            break
        u_prev = u_cur

    final = EnsembleState(dists, weights, e.query_id)
    consensus = None
    if all(d.is_delta() for d in dists):
        tops = {d.argmax() for d in dists}
        if len(tops) == 1:
            consensus = tops.pop()
    return CoordinationTrace(
        steps=tuple(steps),
        final=final,
        converged=converged,
        iterations_used=iterations,
        consensus_cluster=consensus,
    )
