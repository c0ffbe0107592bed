from __future__ import annotations

import numpy as np
import pytest

from coentropy import ClusterDistribution, EnsembleState


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_ensemble(rng, n_models=None, n_clusters=None, *,
                    uniform_weights=False, alpha=0.6) -> EnsembleState:
    """Dirichlet-random ensemble with random (or uniform) weights."""
    k = int(n_models if n_models is not None else rng.integers(1, 7))
    l = int(n_clusters if n_clusters is not None else rng.integers(2, 11))
    dists = [ClusterDistribution(rng.dirichlet(np.full(l, alpha)))
             for _ in range(k)]
    if uniform_weights:
        return EnsembleState(dists)
    weights = rng.dirichlet(np.ones(k))
    return EnsembleState(dists, weights)
