"""Label model: moments, triplet recovery, and exact posterior checks."""

import math

import numpy as np
import pytest
from _oracles import bayes_posterior_oracle

from lfrefine.data import (
    DependencyStructure,
    TaskConfig,
    ValidationError,
    VoteMatrix,
)
from lfrefine.labelmodel import (
    LabelModelParams,
    PosteriorLabels,
    fit,
    fit_timer,
    majority_vote,
    predict,
    second_moments,
    triplet_accuracies,
)


def _names(m):
    return tuple(f"lf{i}" for i in range(m))


def _cfg(prior=0.5):
    return TaskConfig("t", ("n", "p"), prior)


def _params(p, beta=None, prior=0.5, components=None):
    """Independent-LF params with prescribed conditional accuracies."""
    p = np.asarray(p, dtype=np.float64)
    m = p.shape[0]
    beta = np.ones(m) if beta is None else np.asarray(beta, dtype=np.float64)
    a = beta * (2 * p - 1)
    comps = components if components is not None else tuple((i,) for i in range(m))
    return LabelModelParams(
        survivors=tuple(range(m)),
        accuracy_moment=np.abs(a),
        propensity=beta,
        conditional_accuracy=p,
        weight=np.log(p / (1 - p)),
        class_prior=prior,
        components=comps,
        m_total=m,
    )


class TestSecondMoments:
    def test_matches_direct_product(self):
        rng = np.random.default_rng(0)
        raw = rng.integers(-1, 2, size=(50, 4))
        votes = VoteMatrix(raw, _names(4))
        m2 = second_moments(votes)
        expected = (raw.astype(float).T @ raw.astype(float)) / 50
        np.testing.assert_allclose(m2, expected, atol=1e-15)

    def test_diagonal_is_vote_rate(self):
        raw = np.array([[1, 0], [-1, 0], [1, 1], [0, -1]])
        m2 = second_moments(VoteMatrix(raw, _names(2)))
        np.testing.assert_allclose(np.diag(m2), [0.75, 0.5])


class TestTripletAccuracies:
    def test_exact_on_factorized_moments(self):
        a = np.array([0.7, 0.5, 0.3, 0.6, 0.8, 0.45])
        m2 = np.outer(a, a)
        np.fill_diagonal(m2, 1.0)
        est = triplet_accuracies(m2)
        np.testing.assert_allclose(est, a, atol=1e-12)

    def test_exact_with_abstention_scaling(self):
        gap = np.array([0.6, 0.4, 0.5, 0.7])
        cov = np.array([0.9, 0.5, 1.0, 0.8])
        a = cov * gap
        m2 = np.outer(a, a)
        np.fill_diagonal(m2, cov)
        est = triplet_accuracies(m2)
        np.testing.assert_allclose(est, a, atol=1e-12)

    def test_edges_shield_contaminated_pairs(self):
        a = np.array([0.6, 0.5, 0.4, 0.7])
        m2 = np.outer(a, a)
        np.fill_diagonal(m2, 1.0)
        m2[0, 1] = m2[1, 0] = 0.9  # correlated pair reports an inflated moment
        with_edge = triplet_accuracies(m2, edges=[(0, 1)])
        np.testing.assert_allclose(with_edge, a, atol=1e-12)
        naive = triplet_accuracies(m2)
        assert np.abs(naive - a).max() > 0.05

    def test_eps_excludes_tiny_denominators(self):
        a = np.array([0.5, 0.4, 1e-6, 0.6])
        m2 = np.outer(a, a)
        np.fill_diagonal(m2, 1.0)
        # pairs touching LF 2 have near-zero moments and must be skipped
        est = triplet_accuracies(m2, eps=1e-3)
        np.testing.assert_allclose(est[[0, 1, 3]], a[[0, 1, 3]], atol=1e-9)

    def test_blocked_lf_falls_back_to_peer_median(self):
        a = np.array([0.6, 0.5, 0.4, 0.7])
        m2 = np.outer(a, a)
        np.fill_diagonal(m2, 1.0)
        est = triplet_accuracies(m2, edges=[(1, 2), (1, 3), (2, 3)])
        # LF 0 keeps no (j, k) pair, so it inherits its peers' median
        others = est[[1, 2, 3]]
        assert est[0] == pytest.approx(np.median(others))

    def test_all_blocked_defaults_to_half(self):
        m2 = np.full((3, 3), 0.25)
        np.fill_diagonal(m2, 1.0)
        est = triplet_accuracies(m2, edges=[(0, 1), (0, 2), (1, 2)])
        np.testing.assert_allclose(est, [0.5, 0.5, 0.5])

    def test_rejects_bad_edge(self):
        with pytest.raises(ValidationError, match="out of range"):
            triplet_accuracies(np.eye(3), edges=[(0, 5)])


class TestFit:
    def test_accuracy_moment_never_exceeds_propensity(self):
        rng = np.random.default_rng(5)
        raw = rng.integers(-1, 2, size=(200, 6))
        votes = VoteMatrix(raw, _names(6))
        model = fit(votes, DependencyStructure.trivial(6), _cfg())
        assert (model.accuracy_moment <= model.propensity + 1e-12).all()
        assert (model.conditional_accuracy >= 0.01).all()
        assert (model.conditional_accuracy <= 0.99).all()

    def test_removed_lfs_are_ignored(self):
        rng = np.random.default_rng(6)
        raw = rng.integers(-1, 2, size=(100, 5))
        votes = VoteMatrix(raw, _names(5))
        structure = DependencyStructure((0,), (1, 2, 3, 4), None, ())
        model = fit(votes, structure, _cfg())
        sub_model = fit(
            votes.restrict([1, 2, 3, 4]), DependencyStructure.trivial(4), _cfg()
        )
        np.testing.assert_allclose(model.weight, sub_model.weight)
        assert model.survivors == (1, 2, 3, 4)
        assert model.m_total == 5

    def test_structure_size_mismatch_rejected(self):
        votes = VoteMatrix([[1, -1]], _names(2))
        with pytest.raises(ValidationError, match="columns"):
            fit(votes, DependencyStructure.trivial(3), _cfg())

    def test_components_carried_over(self):
        rng = np.random.default_rng(7)
        raw = rng.integers(-1, 2, size=(50, 4))
        votes = VoteMatrix(raw, _names(4))
        structure = DependencyStructure((), (0, 1, 2, 3), None, ((0, 1),))
        model = fit(votes, structure, _cfg())
        assert model.components == ((0, 1), (2,), (3,))


class TestPredictExactBayes:
    def test_single_lf_spec_example(self):
        params = _params([0.8])
        pred = predict(params, VoteMatrix([[1], [-1], [0]], _names(1)))
        np.testing.assert_allclose(pred.p_pos, [0.8, 0.2, 0.5], atol=1e-12)
        np.testing.assert_array_equal(pred.hard, [1, -1, 1])
        np.testing.assert_array_equal(pred.voted, [1, 1, 0])

    def test_two_lfs_agreeing_spec_example(self):
        params = _params([0.8, 0.8])
        pred = predict(params, VoteMatrix([[1, 1]], _names(2)))
        assert pred.p_pos[0] == pytest.approx(16 / 17, abs=1e-12)

    def test_enumeration_one_lf(self):
        for p in (0.55, 0.7, 0.9):
            for prior in (0.3, 0.5, 0.8):
                for beta in (1.0, 0.6):
                    params = _params([p], beta=[beta], prior=prior)
                    votes = VoteMatrix([[1], [-1], [0]], _names(1))
                    pred = predict(params, votes)
                    for k, lam in enumerate([[1], [-1], [0]]):
                        expected = bayes_posterior_oracle(lam, [p], [beta], prior)
                        assert pred.p_pos[k] == pytest.approx(expected, abs=1e-9)

    def test_enumeration_two_lfs(self):
        p = [0.75, 0.6]
        beta = [0.9, 0.7]
        prior = 0.4
        params = _params(p, beta=beta, prior=prior)
        patterns = [[a, b] for a in (-1, 0, 1) for b in (-1, 0, 1)]
        pred = predict(params, VoteMatrix(patterns, _names(2)))
        for k, lam in enumerate(patterns):
            expected = bayes_posterior_oracle(lam, p, beta, prior)
            assert pred.p_pos[k] == pytest.approx(expected, abs=1e-9)

    def test_all_abstain_scores_prior(self):
        params = _params([0.8, 0.7], prior=0.32)
        pred = predict(params, VoteMatrix([[0, 0]], _names(2)))
        assert pred.p_pos[0] == pytest.approx(0.32, abs=1e-12)


class TestPredictComponents:
    def test_duplicates_in_component_count_once(self):
        # two clones sharing a component contribute like one LF
        dup = _params([0.8, 0.8], components=((0, 1),))
        single = _params([0.8])
        p_dup = predict(dup, VoteMatrix([[1, 1]], _names(2))).p_pos[0]
        p_one = predict(single, VoteMatrix([[1]], _names(1))).p_pos[0]
        assert p_dup == pytest.approx(p_one, abs=1e-12)

    def test_partial_abstention_in_component_averages_active(self):
        dup = _params([0.8, 0.8], components=((0, 1),))
        p = predict(dup, VoteMatrix([[1, 0]], _names(2))).p_pos[0]
        assert p == pytest.approx(0.8, abs=1e-12)

    def test_best_mode_uses_top_member_only(self):
        params = _params([0.6, 0.9], components=((0, 1),))
        votes = VoteMatrix([[1, -1]], _names(2))
        pred = predict(params, votes, dependency_mode="best")
        # best member (p=0.9) voted -1, the other is ignored
        assert pred.p_pos[0] == pytest.approx(0.1, abs=1e-12)

    def test_unknown_mode_rejected(self):
        params = _params([0.6])
        with pytest.raises(ValidationError, match="dependency_mode"):
            predict(params, VoteMatrix([[1]], _names(1)), dependency_mode="sum")

    def test_monotone_in_positive_weight_votes(self):
        rng = np.random.default_rng(8)
        raw = rng.integers(-1, 2, size=(40, 5))
        votes = VoteMatrix(raw, _names(5))
        model = fit(votes, DependencyStructure.trivial(5), _cfg())
        base = predict(model, votes)
        for i in range(5):
            if model.weight[i] <= 0:
                continue
            rows = np.nonzero(raw[:, i] == -1)[0]
            if rows.size == 0:
                continue
            x = int(rows[0])
            flipped = raw.copy()
            flipped[x, i] = 1
            new_p = predict(model, VoteMatrix(flipped, _names(5))).p_pos[x]
            assert new_p >= base.p_pos[x] - 1e-12


class TestMajorityVote:
    def test_counts_and_probability(self):
        votes = VoteMatrix([[1, 1, -1], [-1, -1, 1], [1, -1, 0]], _names(3))
        pred = majority_vote(votes, _cfg())
        np.testing.assert_array_equal(pred.hard, [1, -1, 1])
        np.testing.assert_allclose(pred.p_pos, [2 / 3, 1 / 3, 0.5])

    def test_tie_follows_prior(self):
        votes = VoteMatrix([[1, -1]], _names(2))
        assert majority_vote(votes, _cfg(0.6)).hard[0] == 1
        assert majority_vote(votes, _cfg(0.4)).hard[0] == -1
        assert majority_vote(votes, _cfg(0.5)).hard[0] == 1

    def test_all_abstain_uses_prior(self):
        votes = VoteMatrix([[0, 0]], _names(2))
        pred = majority_vote(votes, _cfg(0.2))
        assert pred.p_pos[0] == pytest.approx(0.2)
        assert pred.hard[0] == -1
        assert pred.voted[0] == 0


class TestPosteriorLabels:
    def test_rejects_probability_outside_unit_interval(self):
        with pytest.raises(ValidationError, match="p_pos"):
            PosteriorLabels(
                p_pos=np.array([1.4]),
                hard=np.array([1]),
                score=np.array([0.0]),
                voted=np.array([1]),
            )

    def test_rejects_bad_hard_label(self):
        with pytest.raises(ValidationError, match="hard"):
            PosteriorLabels(
                p_pos=np.array([0.5]),
                hard=np.array([0]),
                score=np.array([0.0]),
                voted=np.array([1]),
            )


class TestLabelModelParams:
    def test_rejects_component_partition_violation(self):
        with pytest.raises(ValidationError, match="partition"):
            _params([0.6, 0.7], components=((0,),))

    def test_rejects_survivor_out_of_range(self):
        with pytest.raises(ValidationError, match="out of range"):
            LabelModelParams(
                survivors=(0, 5),
                accuracy_moment=np.array([0.1, 0.1]),
                propensity=np.array([1.0, 1.0]),
                conditional_accuracy=np.array([0.6, 0.6]),
                weight=np.array([0.4, 0.4]),
                class_prior=0.5,
                components=((0,), (5,)),
                m_total=3,
            )


class TestFitTimer:
    def test_returns_positive_median(self):
        rng = np.random.default_rng(9)
        raw = rng.integers(-1, 2, size=(100, 5))
        votes = VoteMatrix(raw, _names(5))
        seconds = fit_timer(votes, DependencyStructure.trivial(5), _cfg(), repeats=3)
        assert seconds > 0
        assert seconds < 5

    def test_rejects_zero_repeats(self):
        votes = VoteMatrix([[1]], _names(1))
        with pytest.raises(ValidationError, match="repeats"):
            fit_timer(votes, DependencyStructure.trivial(1), repeats=0)
