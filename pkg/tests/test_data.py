"""Domain type invariants and cross-type validation."""

import numpy as np
import pytest

from lfrefine.data import (
    Bundle,
    DependencyStructure,
    EmbeddingSet,
    GoldLabels,
    SimilarityMatrix,
    TaskConfig,
    ValidationError,
    VoteMatrix,
    validate_bundle,
)


class TestTaskConfig:
    def test_accepts_valid(self):
        cfg = TaskConfig("spam", ("ham", "spam"), 0.488, "accuracy")
        assert cfg.class_prior == 0.488

    @pytest.mark.parametrize("prior", [0.0, 1.0, -0.2, 1.5])
    def test_rejects_prior_outside_open_interval(self, prior):
        with pytest.raises(ValidationError, match="class_prior"):
            TaskConfig("t", ("a", "b"), prior)

    def test_rejects_identical_label_names(self):
        with pytest.raises(ValidationError, match="distinct"):
            TaskConfig("t", ("x", "x"), 0.5)

    def test_rejects_unknown_metric(self):
        with pytest.raises(ValidationError, match="metric"):
            TaskConfig("t", ("a", "b"), 0.5, metric="auc")


class TestVoteMatrix:
    def test_roundtrip_and_freeze(self):
        vm = VoteMatrix([[1, 0], [-1, 1]], ("a", "b"))
        assert vm.n == 2 and vm.m == 2
        assert vm.votes.dtype == np.int8
        with pytest.raises(ValueError):
            vm.votes[0, 0] = 5

    def test_rejects_out_of_range_vote(self):
        with pytest.raises(ValidationError, match="out-of-range vote 2"):
            VoteMatrix([[1, 2]], ("a", "b"))

    def test_rejects_duplicate_names(self):
        with pytest.raises(ValidationError, match="duplicate"):
            VoteMatrix([[1, 0]], ("a", "a"))

    def test_rejects_name_count_mismatch(self):
        with pytest.raises(ValidationError, match="mismatch"):
            VoteMatrix([[1, 0]], ("a",))

    def test_restrict_keeps_requested_order(self):
        vm = VoteMatrix([[1, 0, -1], [0, 1, 1]], ("a", "b", "c"))
        sub = vm.restrict([2, 0])
        assert sub.lf_names == ("c", "a")
        np.testing.assert_array_equal(sub.votes, [[-1, 1], [1, 0]])


class TestGoldLabels:
    def test_complete_constructor(self):
        g = GoldLabels.complete([1, -1, 1])
        assert g.all_present
        np.testing.assert_array_equal(g.require_complete(), [1, -1, 1])

    def test_partial_gold_zeroes_missing(self):
        g = GoldLabels(np.array([1, 7, -1]), np.array([True, False, True]))
        assert g.labels[1] == 0
        assert not g.all_present
        with pytest.raises(ValidationError, match="missing gold"):
            g.require_complete()

    def test_rejects_bad_label_where_present(self):
        with pytest.raises(ValidationError, match="-1 or \\+1"):
            GoldLabels(np.array([2]), np.array([True]))


class TestEmbeddingSet:
    def test_rejects_zero_vector(self):
        with pytest.raises(ValidationError, match="zero embedding"):
            EmbeddingSet([[0.0, 0.0], [1.0, 0.0]], ("a", "b"))

    def test_restrict(self):
        emb = EmbeddingSet([[1.0, 0.0], [0.0, 2.0]], ("a", "b"))
        sub = emb.restrict([1])
        assert sub.lf_names == ("b",)
        assert sub.dim == 2


class TestSimilarityMatrix:
    def test_rejects_asymmetry(self):
        vals = np.array([[1.0, 0.5], [0.2, 1.0]])
        with pytest.raises(ValidationError, match="symmetric"):
            SimilarityMatrix(vals, "cosine")

    def test_cosine_requires_unit_diagonal(self):
        vals = np.array([[0.9, 0.5], [0.5, 1.0]])
        with pytest.raises(ValidationError, match="diagonal"):
            SimilarityMatrix(vals, "cosine")

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValidationError, match="kind"):
            SimilarityMatrix(np.eye(2), "euclid")

    def test_restrict_selects_rows_and_columns(self):
        vals = np.array([[1.0, 0.2, 0.8], [0.2, 1.0, 0.4], [0.8, 0.4, 1.0]])
        sub = SimilarityMatrix(vals, "cosine").restrict([0, 2])
        np.testing.assert_allclose(sub.values, [[1.0, 0.8], [0.8, 1.0]])


class TestDependencyStructure:
    def test_trivial(self):
        st = DependencyStructure.trivial(4)
        assert st.surviving == (0, 1, 2, 3)
        assert st.anchors is None and st.edges == ()
        assert st.m == 4

    def test_partition_enforced(self):
        with pytest.raises(ValidationError, match="partition"):
            DependencyStructure((5,), (0, 1), None, ())

    def test_overlap_rejected(self):
        with pytest.raises(ValidationError, match="overlap"):
            DependencyStructure((1,), (0, 1), None, ())

    def test_removal_order_preserved_but_survivors_sorted(self):
        st = DependencyStructure((3, 1), (0, 2, 4), None, ())
        assert st.removed == (3, 1)
        with pytest.raises(ValidationError, match="ascending"):
            DependencyStructure((3, 1), (2, 0, 4), None, ())

    def test_edges_must_avoid_anchors(self):
        with pytest.raises(ValidationError, match="anchor"):
            DependencyStructure((), (0, 1, 2, 3, 4, 5), (0, 1), ((0, 2),))

    def test_edge_ordering_and_duplicates(self):
        with pytest.raises(ValidationError, match="i < j"):
            DependencyStructure((), (0, 1, 2), None, ((2, 1),))
        with pytest.raises(ValidationError, match="duplicate edge"):
            DependencyStructure((), (0, 1, 2), None, ((0, 1), (0, 1)))

    def test_edge_cap_with_anchors(self):
        # 5 survivors with 2 anchors leave C(3, 2) = 3 eligible pairs;
        # the structure accepts exactly that many distinct edges
        surviving = tuple(range(5))
        edges = ((2, 3), (2, 4), (3, 4))
        st = DependencyStructure((), surviving, (0, 1), edges)
        assert len(st.edges) == 3

    def test_edge_cap_without_anchors_is_all_pairs(self):
        edges = tuple((i, j) for i in range(4) for j in range(i + 1, 4))
        st = DependencyStructure((), (0, 1, 2, 3), None, edges)
        assert len(st.edges) == 6

    def test_local_index_and_edges(self):
        st = DependencyStructure((1,), (0, 2, 3), None, ((2, 3),))
        assert st.local_index() == {0: 0, 2: 1, 3: 2}
        assert st.local_edges() == ((1, 2),)

    def test_components_union_find(self):
        st = DependencyStructure(
            (), tuple(range(6)), (4, 5), ((0, 1), (1, 2))
        )
        assert st.components() == ((0, 1, 2), (3,), (4,), (5,))


class TestValidateBundle:
    def _parts(self):
        votes = VoteMatrix([[1, 0], [0, -1]], ("a", "b"))
        emb = EmbeddingSet([[1.0, 0.0], [0.0, 1.0]], ("a", "b"))
        gold = GoldLabels.complete([1, -1])
        cfg = TaskConfig("t", ("n", "p"), 0.5)
        return votes, emb, gold, cfg

    def test_accepts_aligned_parts(self):
        bundle = validate_bundle(*self._parts(), provenance="synthetic")
        assert isinstance(bundle, Bundle)
        assert bundle.provenance == "synthetic"

    def test_rejects_name_mismatch(self):
        votes, _, gold, cfg = self._parts()
        emb = EmbeddingSet([[1.0, 0.0], [0.0, 1.0]], ("a", "c"))
        with pytest.raises(ValidationError, match="lf_names"):
            validate_bundle(votes, emb, gold, cfg)

    def test_rejects_gold_length_mismatch(self):
        votes, emb, _, cfg = self._parts()
        with pytest.raises(ValidationError, match="example axis"):
            validate_bundle(votes, emb, GoldLabels.complete([1]), cfg)

    def test_gold_optional(self):
        votes, emb, _, cfg = self._parts()
        bundle = validate_bundle(votes, emb, None, cfg)
        assert bundle.gold is None
