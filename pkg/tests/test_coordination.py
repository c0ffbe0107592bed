from __future__ import annotations

import math

import numpy as np
import pytest

from coentropy import (
    ClusterDistribution,
    CoordinationConfig,
    DivergenceKind,
    EnsembleState,
    coordinate,
    greedy_delta,
    u_aleatoric,
    weight_update,
)
from coentropy.errors import ConfigError, DegenerateWeights

from conftest import random_ensemble


def terminal_total_oracle(state, kind=DivergenceKind.KL) -> float:
    """Independent re-evaluation of the decomposition on a final state."""
    k = state.n_models
    mean = [math.fsum(w * d.probs[j] for w, d in
                      zip(state.weights, state.distributions))
            for j in range(state.n_clusters)]
    total = float(sum(mean))
    mean = [m / total for m in mean]
    u_a = math.fsum(
        math.fsum(-p * math.log(p) for p in d.probs if p > 0) for d in
        state.distributions
    ) / k
    u_e = 0.0
    for w, d in zip(state.weights, state.distributions):
        if w == 0.0:
            continue
        u_e += w * math.fsum(p * math.log(p / mean[j])
                             for j, p in enumerate(d.probs) if p > 0)
    return u_a + u_e


class TestGreedyDelta:
    def test_unique_argmax(self):
        d = greedy_delta(ClusterDistribution([0.2, 0.5, 0.3]))
        assert d.probs.tolist() == [0.0, 1.0, 0.0]

    def test_tie_breaks_low_index(self):
        d = greedy_delta(ClusterDistribution([0.5, 0.5]))
        assert d.probs.tolist() == [1.0, 0.0]

    def test_idempotent(self, rng):
        for _ in range(50):
            d = ClusterDistribution(rng.dirichlet(np.ones(5)))
            once = greedy_delta(d)
            assert greedy_delta(once) == once


class TestWeightUpdate:
    def test_all_deltas_unchanged(self):
        e = EnsembleState([ClusterDistribution.delta(i % 2, 3)
                           for i in range(3)], weights=[0.5, 0.3, 0.2])
        assert weight_update(e).tolist() == pytest.approx([0.5, 0.3, 0.2],
                                                          abs=1e-12)

    def test_worked_example(self):
        # factors: delta -> 1, (0.7,0.2,0.1) -> 1 - 0.801819 = 0.198181
        e = EnsembleState([ClusterDistribution([1, 0, 0]),
                           ClusterDistribution([0.7, 0.2, 0.1])])
        w = weight_update(e)
        assert w.tolist() == pytest.approx([0.834598, 0.165402], abs=1e-6)

    def test_negative_factor_clamps_to_floor_zero(self):
        # entropy ln(4) > 1 nat makes the raw factor negative
        e = EnsembleState([ClusterDistribution([1, 0, 0, 0]),
                           ClusterDistribution([0.25] * 4)])
        assert weight_update(e, floor=0.0).tolist() == [1.0, 0.0]

    def test_degenerate_when_all_clamp(self):
        e = EnsembleState([ClusterDistribution([0.25] * 4)] * 2)
        with pytest.raises(DegenerateWeights):
            weight_update(e, floor=0.0)

    def test_floor_keeps_weights_alive(self):
        e = EnsembleState([ClusterDistribution([0.25] * 4)] * 2)
        assert weight_update(e, floor=0.1).tolist() == [0.5, 0.5]

    def test_normalized_mode_stays_in_unit_interval(self, rng):
        for _ in range(50):
            e = random_ensemble(rng, uniform_weights=True)
            w = weight_update(e, normalized=True)
            assert np.all(w >= 0) and float(w.sum()) == pytest.approx(1.0)

    def test_lower_entropy_never_loses_relative_weight(self, rng):
        checked = 0
        while checked < 50:
            e = random_ensemble(rng, n_models=3, uniform_weights=True)
            se = [float(-(d.probs[d.probs > 0]
                          * np.log(d.probs[d.probs > 0])).sum())
                  for d in e.distributions]
            try:
                w = weight_update(e, floor=0.0)
            except DegenerateWeights:
                continue  # every entropy >= 1 nat; nothing to rank
            checked += 1
            for i in range(3):
                for j in range(3):
                    if se[i] < se[j]:
                        assert w[i] >= w[j] - 1e-12


class TestCoordinate:
    def test_consensus_converges_first_iteration(self):
        e = EnsembleState([ClusterDistribution([0, 1, 0])] * 3)
        trace = coordinate(e)
        assert trace.converged
        assert trace.iterations_used == 1
        assert trace.steps[-1].u_coe == 0.0
        assert trace.consensus_cluster == 1

    def test_peaked_disagreement_case_b(self):
        e = EnsembleState([ClusterDistribution([0.8, 0.2]),
                           ClusterDistribution([0.1, 0.9])])
        trace = coordinate(e)
        assert trace.steps[-1].u_coe == pytest.approx(math.log(2), abs=1e-12)
        assert trace.consensus_cluster is None
        assert all(d.is_delta() for d in trace.final.distributions)

    def test_at_most_two_iterations(self, rng):
        for _ in range(100):
            e = random_ensemble(rng)
            trace = coordinate(e, CoordinationConfig(epsilon=1e-6))
            assert trace.iterations_used <= 2
            assert trace.converged

    def test_aleatoric_zero_after_first_iteration(self, rng):
        for _ in range(50):
            e = random_ensemble(rng)
            trace = coordinate(e)
            first = EnsembleState(trace.steps[1].distributions,
                                  trace.steps[1].weights)
            assert u_aleatoric(first) == 0.0

    def test_terminal_zero_iff_shared_cluster(self, rng):
        for _ in range(100):
            e = random_ensemble(rng)
            trace = coordinate(e)
            tops = {d.argmax() for d in trace.final.distributions}
            if trace.steps[-1].u_coe == pytest.approx(0.0, abs=1e-12):
                assert len(tops) == 1
                assert trace.consensus_cluster is not None
            else:
                assert len(tops) > 1
                assert trace.consensus_cluster is None

    def test_terminal_matches_case_b_closed_form(self, rng):
        # -sum_i w_i ln(mean(top_i)) where mean aggregates delta weights
        for _ in range(100):
            e = random_ensemble(rng)
            trace = coordinate(e)
            tops = [d.argmax() for d in trace.final.distributions]
            w = trace.final.weights
            mean = [0.0] * e.n_clusters
            for wi, j in zip(w, tops):
                mean[j] += wi
            expected = -math.fsum(wi * math.log(mean[j])
                                  for wi, j in zip(w, tops) if wi > 0)
            assert trace.steps[-1].u_coe == pytest.approx(expected, abs=1e-9)

    def test_terminal_matches_brute_force_decomposition(self, rng):
        for _ in range(100):
            e = random_ensemble(rng)
            trace = coordinate(e)
            assert trace.steps[-1].u_coe == pytest.approx(
                terminal_total_oracle(trace.final), abs=1e-12)

    def test_weights_stay_simplex_every_iteration(self, rng):
        for _ in range(50):
            e = random_ensemble(rng)
            trace = coordinate(e)
            for step in trace.steps:
                ws = np.array(step.weights)
                assert np.all(ws >= 0)
                assert float(ws.sum()) == pytest.approx(1.0, abs=1e-9)

    def test_trace_constant_from_second_iteration(self, rng):
        for _ in range(50):
            e = random_ensemble(rng)
            trace = coordinate(e, CoordinationConfig(epsilon=1e-300, t_max=5))
            totals = [s.u_coe for s in trace.steps[1:]]
            assert all(t == totals[0] for t in totals)

    def test_t_max_caps_iterations(self, rng):
        e = random_ensemble(rng)
        trace = coordinate(e, CoordinationConfig(epsilon=1e-300, t_max=3))
        assert trace.iterations_used <= 3

    def test_pluggable_update_is_used(self):
        e = EnsembleState([ClusterDistribution([0.6, 0.4])])
        trace = coordinate(e, per_model_update=lambda d: d)
        assert trace.final.distributions[0] == e.distributions[0]
        assert trace.consensus_cluster is None  # identity never collapses

    def test_weight_floor_validated_against_ensemble(self):
        e = EnsembleState([ClusterDistribution([1, 0])] * 4)
        with pytest.raises(ConfigError):
            coordinate(e, CoordinationConfig(weight_floor=0.3))


class TestCoordinationConfig:
    def test_rejects_bad_values(self):
        with pytest.raises(ConfigError):
            CoordinationConfig(epsilon=0.0)
        with pytest.raises(ConfigError):
            CoordinationConfig(t_max=0)
        with pytest.raises(ConfigError):
            CoordinationConfig(weight_floor=1.0)

    def test_defaults(self):
        cfg = CoordinationConfig()
        assert cfg.epsilon == 1e-6
        assert cfg.t_max == 10
        assert cfg.divergence_kind is DivergenceKind.KL
