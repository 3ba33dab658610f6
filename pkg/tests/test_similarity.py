"""Similarity matrices against brute-force counting oracles."""

import numpy as np
import pytest
from _oracles import (
    agreement_oracle,
    cosine_oracle,
    double_fault_oracle,
    spearman_oracle,
)

from lfrefine.data import EmbeddingSet, GoldLabels, ValidationError, VoteMatrix
from lfrefine.similarity import (
    agreement_matrix,
    cosine_matrix,
    double_fault_matrix,
    matrix_rank_correlation,
)


def _names(m):
    return tuple(f"lf{i}" for i in range(m))


class TestCosine:
    def test_identical_vectors_score_one(self):
        emb = EmbeddingSet([[1.0, 2.0], [2.0, 4.0]], _names(2))
        sim = cosine_matrix(emb)
        assert sim.values[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_vectors_score_zero(self):
        emb = EmbeddingSet([[1.0, 0.0], [0.0, 3.0]], _names(2))
        assert cosine_matrix(emb).values[0, 1] == 0.0

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(11)
        vectors = rng.normal(size=(5, 8))
        sim = cosine_matrix(EmbeddingSet(vectors, _names(5)))
        expected = np.array(cosine_oracle(vectors.tolist()))
        np.testing.assert_allclose(sim.values, expected, atol=1e-12)

    def test_diagonal_exactly_one(self):
        rng = np.random.default_rng(3)
        sim = cosine_matrix(EmbeddingSet(rng.normal(size=(6, 4)), _names(6)))
        assert (np.diag(sim.values) == 1.0).all()

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(5)
        vectors = rng.normal(size=(7, 5))
        perm = rng.permutation(7)
        base = cosine_matrix(EmbeddingSet(vectors, _names(7))).values
        permuted = cosine_matrix(
            EmbeddingSet(vectors[perm], tuple(f"lf{i}" for i in perm))
        ).values
        np.testing.assert_allclose(permuted, base[np.ix_(perm, perm)], atol=1e-12)

    def test_scale_invariance(self):
        rng = np.random.default_rng(9)
        vectors = rng.normal(size=(4, 6))
        scaled = vectors * np.array([[2.0], [0.5], [13.0], [1e-3]])
        a = cosine_matrix(EmbeddingSet(vectors, _names(4))).values
        b = cosine_matrix(EmbeddingSet(scaled, _names(4))).values
        np.testing.assert_allclose(a, b, atol=1e-12)


class TestAgreement:
    def test_identical_always_voting_columns(self):
        votes = VoteMatrix([[1, 1], [-1, -1], [1, 1]], _names(2))
        assert agreement_matrix(votes).values[0, 1] == 1.0

    def test_disjoint_coverage_scores_zero(self):
        votes = VoteMatrix([[1, 0], [0, 1], [-1, 0]], _names(2))
        assert agreement_matrix(votes).values[0, 1] == 0.0

    def test_matches_counting_oracle(self):
        rng = np.random.default_rng(21)
        raw = rng.integers(-1, 2, size=(100, 4))
        sim = agreement_matrix(VoteMatrix(raw, _names(4)))
        expected = np.array(agreement_oracle(raw.tolist()))
        np.testing.assert_allclose(sim.values, expected, atol=0)


class TestDoubleFault:
    def test_perfect_lfs_score_zero(self):
        y = [1, -1, 1]
        votes = VoteMatrix([[1, 1], [-1, -1], [1, 1]], _names(2))
        sim = double_fault_matrix(votes, GoldLabels.complete(y))
        np.testing.assert_array_equal(sim.values, np.zeros((2, 2)))

    def test_always_wrong_pair_scores_one(self):
        y = [1, 1, -1]
        votes = VoteMatrix([[-1, -1], [-1, -1], [1, 1]], _names(2))
        sim = double_fault_matrix(votes, GoldLabels.complete(y))
        assert sim.values[0, 1] == 1.0

    @pytest.mark.parametrize("per_covote", [False, True])
    def test_matches_counting_oracle(self, per_covote):
        rng = np.random.default_rng(33)
        raw = rng.integers(-1, 2, size=(80, 5))
        y = np.where(rng.random(80) < 0.5, 1, -1)
        sim = double_fault_matrix(
            VoteMatrix(raw, _names(5)), GoldLabels.complete(y), per_covote=per_covote
        )
        expected = np.array(double_fault_oracle(raw.tolist(), y.tolist(), per_covote))
        np.testing.assert_allclose(sim.values, expected, atol=0)

    def test_requires_complete_gold(self):
        votes = VoteMatrix([[1], [1]], _names(1))
        gold = GoldLabels(np.array([1, 0]), np.array([True, False]))
        with pytest.raises(ValidationError, match="missing gold"):
            double_fault_matrix(votes, gold)


class TestRankCorrelation:
    def _random_sym(self, rng, m):
        raw = rng.random((m, m))
        vals = (raw + raw.T) / 2
        np.fill_diagonal(vals, 1.0)
        return vals

    def test_identity_is_one(self):
        rng = np.random.default_rng(2)
        a = self._random_sym(rng, 5)
        assert matrix_rank_correlation(a, a) == pytest.approx(1.0)

    def test_reversal_is_minus_one(self):
        rng = np.random.default_rng(4)
        a = self._random_sym(rng, 5)
        assert matrix_rank_correlation(a, -a) == pytest.approx(-1.0)

    def test_matches_manual_rank_oracle(self):
        rng = np.random.default_rng(8)
        a = self._random_sym(rng, 6)
        b = self._random_sym(rng, 6)
        iu = np.triu_indices(6, k=1)
        expected = spearman_oracle(a[iu].tolist(), b[iu].tolist())
        assert matrix_rank_correlation(a, b) == pytest.approx(expected, abs=1e-12)

    def test_ties_handled_like_oracle(self):
        a = np.array([[1.0, 0.5, 0.5, 0.2], [0.5, 1, 0.7, 0.5], [0.5, 0.7, 1, 0.9], [0.2, 0.5, 0.9, 1]])
        b = np.array([[1.0, 0.1, 0.4, 0.4], [0.1, 1, 0.4, 0.8], [0.4, 0.4, 1, 0.2], [0.4, 0.8, 0.2, 1]])
        iu = np.triu_indices(4, k=1)
        expected = spearman_oracle(a[iu].tolist(), b[iu].tolist())
        assert matrix_rank_correlation(a, b) == pytest.approx(expected, abs=1e-12)

    def test_small_m_rejected(self):
        a = np.eye(2)
        with pytest.raises(ValidationError, match="at least 3"):
            matrix_rank_correlation(a, a)

    def test_constant_values_rejected(self):
        a = np.full((4, 4), 0.5)
        np.fill_diagonal(a, 1.0)
        with pytest.raises(ValidationError, match="constant"):
            matrix_rank_correlation(a, a)
