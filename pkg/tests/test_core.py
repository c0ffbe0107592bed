from __future__ import annotations

import math

import numpy as np
import pytest

from coentropy import (
    ClusterDistribution,
    DivergenceKind,
    EnsembleState,
    Quadrant,
    classify_quadrant,
    coe,
    ensemble_mean,
    semantic_entropy,
    u_aleatoric,
    u_epistemic,
)
from coentropy.errors import InvalidDistribution, InvalidEnsemble

from conftest import random_ensemble

ALL_KINDS = list(DivergenceKind)


def entropy_oracle(probs) -> float:
    """Independent reference: -sum(p*ln(p)) via fsum."""
    return math.fsum(-p * math.log(p) for p in probs if p > 0.0)


class TestClusterDistribution:
    def test_normalizes_small_deviation(self):
        d = ClusterDistribution([0.5, 0.5 + 5e-7])
        assert math.isclose(float(d.probs.sum()), 1.0, abs_tol=1e-9)

    def test_rejects_large_deviation(self):
        with pytest.raises(InvalidDistribution):
            ClusterDistribution([0.5, 0.6])

    def test_rejects_all_zero(self):
        with pytest.raises(InvalidDistribution):
            ClusterDistribution([0.0, 0.0])

    def test_rejects_negative(self):
        with pytest.raises(InvalidDistribution):
            ClusterDistribution([1.1, -0.1])

    def test_rejects_empty_and_nan(self):
        with pytest.raises(InvalidDistribution):
            ClusterDistribution([])
        with pytest.raises(InvalidDistribution):
            ClusterDistribution([float("nan"), 1.0])

    def test_immutable(self):
        d = ClusterDistribution([0.25, 0.75])
        with pytest.raises(ValueError):
            d.probs[0] = 0.9

    def test_delta_constructor(self):
        d = ClusterDistribution.delta(1, 3)
        assert d.probs.tolist() == [0.0, 1.0, 0.0]
        assert d.is_delta() and d.argmax() == 1


class TestEnsembleState:
    def test_uniform_default_weights(self):
        e = EnsembleState([ClusterDistribution([1, 0])] * 4)
        assert np.allclose(e.weights, 0.25)

    def test_rejects_mismatched_dimensions(self):
        with pytest.raises(InvalidEnsemble):
            EnsembleState([ClusterDistribution([1, 0]),
                           ClusterDistribution([1, 0, 0])])

    def test_rejects_wrong_weight_count(self):
        with pytest.raises(InvalidEnsemble):
            EnsembleState([ClusterDistribution([1, 0])], weights=[0.5, 0.5])

    def test_rejects_empty(self):
        with pytest.raises(InvalidEnsemble):
            EnsembleState([])


class TestSemanticEntropy:
    def test_delta_is_zero(self):
        assert semantic_entropy(ClusterDistribution([1, 0, 0])) == 0.0

    def test_uniform_is_log_count(self):
        d = ClusterDistribution([0.25] * 4)
        assert semantic_entropy(d) == pytest.approx(math.log(4), abs=1e-12)

    def test_worked_example(self):
        d = ClusterDistribution([0.7, 0.2, 0.1])
        assert semantic_entropy(d) == pytest.approx(0.8018185525433373,
                                                    abs=1e-12)
        assert semantic_entropy(d) == pytest.approx(
            entropy_oracle([0.7, 0.2, 0.1]), abs=1e-12)

    def test_range(self, rng):
        for _ in range(100):
            l = int(rng.integers(1, 12))
            d = ClusterDistribution(rng.dirichlet(np.full(l, 0.4)))
            se = semantic_entropy(d)
            assert 0.0 <= se <= math.log(l) + 1e-12


class TestAleatoric:
    def test_deltas_give_zero(self):
        e = EnsembleState([ClusterDistribution([1, 0]),
                           ClusterDistribution([0, 1])])
        assert u_aleatoric(e) == 0.0

    def test_worked_example(self):
        e = EnsembleState([ClusterDistribution([0.7, 0.2, 0.1]),
                           ClusterDistribution([1 / 3, 1 / 3, 1 / 3])])
        expected = (entropy_oracle([0.7, 0.2, 0.1]) + math.log(3)) / 2
        assert u_aleatoric(e) == pytest.approx(expected, abs=1e-9)
        assert u_aleatoric(e) == pytest.approx(0.950215, abs=1e-6)

    def test_single_model_reduction(self, rng):
        d = ClusterDistribution(rng.dirichlet(np.ones(5)))
        e = EnsembleState([d])
        assert u_aleatoric(e) == semantic_entropy(d)

    def test_ignores_weights(self):
        dists = [ClusterDistribution([1, 0]), ClusterDistribution([0.5, 0.5])]
        skewed = EnsembleState(dists, weights=[0.9, 0.1])
        uniform = EnsembleState(dists)
        assert u_aleatoric(skewed) == u_aleatoric(uniform)


class TestEnsembleMean:
    def test_symmetric_deltas(self):
        e = EnsembleState([ClusterDistribution([1, 0]),
                           ClusterDistribution([0, 1])])
        assert ensemble_mean(e).probs.tolist() == [0.5, 0.5]

    def test_identical_fixed_point(self, rng):
        d = ClusterDistribution(rng.dirichlet(np.ones(4)))
        e = EnsembleState([d, d, d], weights=[0.2, 0.5, 0.3])
        assert np.allclose(ensemble_mean(e).probs, d.probs, atol=1e-12)

    def test_weighted_sum(self):
        e = EnsembleState([ClusterDistribution([1, 0]),
                           ClusterDistribution([0, 1])],
                          weights=[0.25, 0.75])
        assert np.allclose(ensemble_mean(e).probs, [0.25, 0.75], atol=1e-12)


class TestEpistemic:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_identical_distributions_zero(self, kind, rng):
        d = ClusterDistribution(rng.dirichlet(np.ones(5)))
        e = EnsembleState([d, d, d])
        assert u_epistemic(e, kind) == pytest.approx(0.0, abs=1e-12)

    def test_two_disjoint_deltas_kl(self):
        e = EnsembleState([ClusterDistribution([1, 0]),
                           ClusterDistribution([0, 1])])
        assert u_epistemic(e, DivergenceKind.KL) == pytest.approx(
            math.log(2), abs=1e-12)

    def test_three_disjoint_deltas_kl(self):
        e = EnsembleState([ClusterDistribution.delta(i, 3) for i in range(3)])
        assert u_epistemic(e, DivergenceKind.KL) == pytest.approx(
            math.log(3), abs=1e-12)

    def test_zero_weight_model_skipped(self):
        # the third model's support is outside the weighted mean's; with a
        # zero weight it must not be evaluated (KL would blow up)
        e = EnsembleState(
            [ClusterDistribution([1, 0, 0]), ClusterDistribution([1, 0, 0]),
             ClusterDistribution([0, 0, 1])],
            weights=[0.5, 0.5, 0.0],
        )
        assert u_epistemic(e, DivergenceKind.KL) == 0.0


class TestCoeReport:
    def test_consensus_deltas(self):
        e = EnsembleState([ClusterDistribution([0, 1, 0])] * 3)
        report = coe(e, DivergenceKind.KL)
        assert report.u_coe == 0.0
        assert report.quadrant is Quadrant.VERY_SURE

    def test_distinct_deltas_confident_disagree(self):
        e = EnsembleState([ClusterDistribution.delta(i, 4) for i in range(4)])
        report = coe(e, DivergenceKind.KL)
        assert report.u_aleatoric == 0.0
        assert report.u_coe == pytest.approx(math.log(4), abs=1e-12)
        assert report.u_coe == report.u_epistemic
        assert report.quadrant is Quadrant.CONFIDENT_DISAGREE

    def test_all_uniform_multiple_reasonable(self):
        d = ClusterDistribution([0.25] * 4)
        report = coe(EnsembleState([d, d]), DivergenceKind.KL)
        assert report.u_epistemic == pytest.approx(0.0, abs=1e-12)
        assert report.u_aleatoric == pytest.approx(math.log(4), abs=1e-12)
        assert report.quadrant is Quadrant.MULTIPLE_REASONABLE

    def test_per_model_fields(self, rng):
        e = random_ensemble(rng, n_models=3)
        report = coe(e, DivergenceKind.JS)
        assert len(report.per_model_se) == 3
        assert len(report.per_model_div) == 3
        assert report.divergence_kind is DivergenceKind.JS


class TestQuadrantClassifier:
    def test_axes(self):
        log3 = math.log(3)
        assert classify_quadrant(0.9 * log3, 0.9 * log3, 3, 3) \
            is Quadrant.WE_DO_NOT_KNOW
        assert classify_quadrant(0.1 * log3, 0.9 * log3, 3, 3) \
            is Quadrant.CONFIDENT_DISAGREE
        assert classify_quadrant(0.1 * log3, 0.1 * log3, 3, 3) \
            is Quadrant.VERY_SURE
        assert classify_quadrant(0.9 * log3, 0.1 * log3, 3, 3) \
            is Quadrant.MULTIPLE_REASONABLE

    def test_single_model_axis_is_low(self):
        # ln(1) = 0, strict threshold: epistemic can only be "low"
        assert classify_quadrant(0.0, 0.0, 1, 4) is Quadrant.VERY_SURE

    def test_custom_thresholds(self):
        assert classify_quadrant(0.2, 0.2, 3, 3, tau_a=0.1, tau_e=0.1) \
            is Quadrant.WE_DO_NOT_KNOW


class TestInvariants:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_non_negativity(self, kind, rng):
        for _ in range(200):
            e = random_ensemble(rng)
            report = coe(e, kind)
            assert report.u_aleatoric >= -1e-12
            assert report.u_epistemic >= -1e-12
            assert report.u_coe >= -1e-12

    def test_zero_iff_consensus_forward(self, rng):
        for _ in range(20):
            l = int(rng.integers(2, 9))
            target = int(rng.integers(l))
            e = EnsembleState(
                [ClusterDistribution.delta(target, l)] * int(rng.integers(1, 5))
            )
            assert coe(e, DivergenceKind.KL).u_coe == 0.0

    def test_zero_iff_consensus_reverse(self, rng):
        # any ensemble at least 1e-3 total variation away from a consensus
        # delta must score strictly positive
        for _ in range(100):
            e = random_ensemble(rng)
            deltas = [d.is_delta() for d in e.distributions]
            tops = {d.argmax() for d in e.distributions}
            consensus = all(deltas) and len(tops) == 1
            if not consensus:
                tv_from_consensus = min(
                    0.5 * sum(abs(p - (1.0 if j == c else 0.0))
                              for j, p in enumerate(d.probs))
                    for d in e.distributions for c in range(e.n_clusters)
                )
                if tv_from_consensus >= 1e-3 or len(tops) > 1:
                    assert coe(e, DivergenceKind.KL).u_coe > 0.0

    def test_mixture_identity_kl(self, rng):
        # independent oracle: sum_i w_i KL(p_i || mean) equals
        # H(mean) - sum_i w_i H(p_i)
        for _ in range(200):
            e = random_ensemble(rng)
            u_e = u_epistemic(e, DivergenceKind.KL)
            mean = ensemble_mean(e)
            rhs = entropy_oracle(mean.probs) - math.fsum(
                w * entropy_oracle(d.probs)
                for w, d in zip(e.weights, e.distributions)
            )
            assert u_e == pytest.approx(rhs, abs=1e-9)

    def test_weight_entropy_bound_kl(self, rng):
        for _ in range(200):
            e = random_ensemble(rng)
            bound = math.fsum(-w * math.log(w) for w in e.weights if w > 0)
            assert u_epistemic(e, DivergenceKind.KL) <= bound + 1e-9
            assert bound <= math.log(e.n_models) + 1e-12

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_additivity_is_bitwise(self, kind, rng):
        for _ in range(25):
            e = random_ensemble(rng)
            report = coe(e, kind)
            assert report.u_coe == u_aleatoric(e) + u_epistemic(e, kind)
            assert report.u_aleatoric == u_aleatoric(e)
            assert report.u_epistemic == u_epistemic(e, kind)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_permutation_equivariance(self, kind, rng):
        for _ in range(25):
            e = random_ensemble(rng, n_clusters=6)
            perm = rng.permutation(6)
            permuted = EnsembleState(
                [ClusterDistribution(d.probs[perm]) for d in e.distributions],
                e.weights,
            )
            a, b = coe(e, kind), coe(permuted, kind)
            assert a.u_aleatoric == pytest.approx(b.u_aleatoric, abs=1e-12)
            assert a.u_epistemic == pytest.approx(b.u_epistemic, abs=1e-12)
            assert a.u_coe == pytest.approx(b.u_coe, abs=1e-12)
