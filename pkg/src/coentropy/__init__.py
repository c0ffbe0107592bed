"""Collaborative entropy for ensembles of probabilistic answerers.

Semantic clustering of sampled responses, the aleatoric/epistemic
uncertainty decomposition over the shared cluster space, four divergence
instantiations, a coordination heuristic, a regime simulator and a
selective-prediction evaluation harness.
"""

from .core import (
    ClusterDistribution,
    CoEReport,
    EnsembleState,
    Quadrant,
    classify_quadrant,
    coe,
    ensemble_mean,
    semantic_entropy,
    u_aleatoric,
    u_epistemic,
)
from .divergences import CostMatrix, DivergenceKind
from .clustering import (
    ClusterSpace,
    EntailmentOracle,
    ExactMatchOracle,
    MatrixOracle,
    ProbMode,
    ResponseSample,
    build_ensemble,
    cluster_pool,
    length_normalized_prob,
    model_distribution,
    normalize_text,
    text_hash,
)
from .coordination import (
    CoordinationConfig,
    CoordinationTrace,
    coordinate,
    greedy_delta,
    weight_update,
)
from .evaluation import (
    EvalSummary,
    ScoredItem,
    aurac,
    auroc,
    baseline_mean_se,
    baseline_p_false,
    baseline_regular_entropy,
    evaluate,
    rejection_accuracy,
)
from .simulator import RegimeQuadrant, RegimeSpec, regime_sweep, sample_ensemble

__version__ = "0.1.0"

__all__ = [
    "ClusterDistribution",
    "ClusterSpace",
    "CoEReport",
    "CoordinationConfig",
    "CoordinationTrace",
    "CostMatrix",
    "DivergenceKind",
    "EnsembleState",
    "EntailmentOracle",
    "EvalSummary",
    "ExactMatchOracle",
    "MatrixOracle",
    "ProbMode",
    "Quadrant",
    "RegimeQuadrant",
    "RegimeSpec",
    "ResponseSample",
    "ScoredItem",
    "aurac",
    "auroc",
    "baseline_mean_se",
    "baseline_p_false",
    "baseline_regular_entropy",
    "build_ensemble",
    "classify_quadrant",
    "cluster_pool",
    "coe",
    "coordinate",
    "ensemble_mean",
    "evaluate",
    "greedy_delta",
    "length_normalized_prob",
    "model_distribution",
    "normalize_text",
    "regime_sweep",
    "rejection_accuracy",
    "sample_ensemble",
    "semantic_entropy",
    "text_hash",
    "u_aleatoric",
    "u_epistemic",
    "weight_update",
]
