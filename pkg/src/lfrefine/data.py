"""Shared domain types, index conventions, and cross-type validation.

Conventions used throughout the package:

* Votes are integers in {-1, 0, +1}; 0 means the labeling function (LF)
  abstained, -1 votes the negative class, +1 the positive class.
* LFs are indexed 0-based. Removal lists, survivor lists, anchor pairs,
  and dependency edges all refer to these original 0-based indices.
* All containers are immutable after construction and safe to share
  across threads. Wrapped numpy arrays are marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SIMILARITY_KINDS = ("cosine", "agreement", "double_fault")
METRICS = ("accuracy", "f1-positive")


class ValidationError(ValueError):
    """Raised when a domain invariant or cross-type contract is violated."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TaskConfig:
    """Binary classification task description.

    label_names is (negative, positive); class_prior is P(y = +1).
    """

    task_name: str
    label_names: tuple[str, str]
    class_prior: float
    metric: str = "accuracy"

    def __post_init__(self):
        if not 0.0 < self.class_prior < 1.0:
            raise ValidationError(
                f"class_prior must lie in (0, 1), got {self.class_prior}"
            )
        if len(self.label_names) != 2 or self.label_names[0] == self.label_names[1]:
            raise ValidationError("label_names must be two distinct strings")
        if self.metric not in METRICS:
            raise ValidationError(f"metric must be one of {METRICS}, got {self.metric!r}")
        object.__setattr__(self, "label_names", tuple(self.label_names))


@dataclass(frozen=True)
class VoteMatrix:
    """n x m matrix of LF votes with 0-valued abstentions."""

    votes: np.ndarray
    lf_names: tuple[str, ...]

    def __post_init__(self):
        votes = np.asarray(self.votes)
        if votes.ndim != 2:
            raise ValidationError(f"votes must be 2-dimensional, got shape {votes.shape}")
        bad = ~np.isin(votes, (-1, 0, 1))
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise ValidationError(
                f"out-of-range vote {votes[i, j]} at example {i}, LF {j}; "
                "votes must be -1, 0, or +1"
            )
        names = tuple(self.lf_names)
        if len(names) != votes.shape[1]:
            raise ValidationError(
                f"dimension mismatch on LF axis: {len(names)} lf_names for "
                f"{votes.shape[1]} vote columns"
            )
        if len(set(names)) != len(names):
            dup = next(x for x in names if names.count(x) > 1)
            raise ValidationError(f"duplicate LF name {dup!r}")
        object.__setattr__(self, "votes", _freeze(votes.astype(np.int8)))
        object.__setattr__(self, "lf_names", names)

    @property
    def n(self) -> int:
        return self.votes.shape[0]

    @property
    def m(self) -> int:
        return self.votes.shape[1]

    def restrict(self, indices: Sequence[int]) -> "VoteMatrix":
        """Column selection by original LF indices, order preserved."""
        idx = list(indices)
        return VoteMatrix(self.votes[:, idx], tuple(self.lf_names[i] for i in idx))


@dataclass(frozen=True)
class GoldLabels:
    """Ground-truth labels in {-1, +1}, optionally covering only part of the data.

    present[i] is False for examples with no gold label; labels[i] is 0 there.
    """

    labels: np.ndarray
    present: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int8)
        present = np.asarray(self.present, dtype=bool)
        if labels.shape != present.shape or labels.ndim != 1:
            raise ValidationError("labels and present must be equal-length 1-d arrays")
        if not np.isin(labels[present], (-1, 1)).all():
            raise ValidationError("gold labels must be -1 or +1 where present")
        labels = labels.copy()
        labels[~present] = 0
        object.__setattr__(self, "labels", _freeze(labels))
        object.__setattr__(self, "present", _freeze(present))

    @classmethod
    def complete(cls, labels: Sequence[int]) -> "GoldLabels":
        arr = np.asarray(labels, dtype=np.int8)
        return cls(arr, np.ones(arr.shape, dtype=bool))

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def all_present(self) -> bool:
        return bool(self.present.all())

    def require_complete(self) -> np.ndarray:
        if not self.all_present:
            missing = int((~self.present).sum())
            raise ValidationError(f"missing gold labels for {missing} examples")
        return self.labels


@dataclass(frozen=True)
class EmbeddingSet:
    """One real-valued vector per LF, aligned to VoteMatrix column order."""

    vectors: np.ndarray
    lf_names: tuple[str, ...]

    def __post_init__(self):
        vec = np.asarray(self.vectors, dtype=np.float64)
        if vec.ndim != 2:
            raise ValidationError(f"vectors must be 2-dimensional, got shape {vec.shape}")
        if vec.shape[1] < 1:
            raise ValidationError("embedding dimension must be at least 1")
        norms = np.linalg.norm(vec, axis=1)
        if (norms == 0).any():
            i = int(np.argmax(norms == 0))
            raise ValidationError(f"zero embedding vector for LF {i}")
        names = tuple(self.lf_names)
        if len(names) != vec.shape[0]:
            raise ValidationError(
                f"dimension mismatch on LF axis: {len(names)} lf_names for "
                f"{vec.shape[0]} embedding vectors"
            )
        if len(set(names)) != len(names):
            dup = next(x for x in names if names.count(x) > 1)
            raise ValidationError(f"duplicate LF name {dup!r}")
        object.__setattr__(self, "vectors", _freeze(vec))
        object.__setattr__(self, "lf_names", names)

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def restrict(self, indices: Sequence[int]) -> "EmbeddingSet":
        idx = list(indices)
        return EmbeddingSet(self.vectors[idx], tuple(self.lf_names[i] for i in idx))


@dataclass(frozen=True)
class SimilarityMatrix:
    """m x m symmetric matrix of pairwise LF scores.

    kind "cosine" has unit diagonal and entries in [-1, 1]; "agreement"
    and "double_fault" have entries in [0, 1].
    """

    values: np.ndarray
    kind: str

    SYMMETRY_TOL = 1e-9

    def __post_init__(self):
        if self.kind not in SIMILARITY_KINDS:
            raise ValidationError(
                f"kind must be one of {SIMILARITY_KINDS}, got {self.kind!r}"
            )
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise ValidationError(f"similarity matrix must be square, got {vals.shape}")
        if not np.allclose(vals, vals.T, atol=self.SYMMETRY_TOL, rtol=0):
            raise ValidationError("similarity matrix is not symmetric")
        if self.kind == "cosine":
            if not (np.abs(vals) <= 1.0 + 1e-12).all():
                raise ValidationError("cosine entries must lie in [-1, 1]")
            if not (np.diag(vals) == 1.0).all():
                raise ValidationError("cosine diagonal must be exactly 1")
        else:
            if vals.min() < -1e-12 or vals.max() > 1.0 + 1e-12:
                raise ValidationError(f"{self.kind} entries must lie in [0, 1]")
        object.__setattr__(self, "values", _freeze(vals))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def restrict(self, indices: Sequence[int]) -> "SimilarityMatrix":
        """Row/column selection by original LF indices (no recomputation)."""
        idx = list(indices)
        return SimilarityMatrix(self.values[np.ix_(idx, idx)], self.kind)


@dataclass(frozen=True)
class DependencyStructure:
    """Outcome of structure refinement over m original LFs.

    removed preserves removal order; surviving is ascending. anchors, when
    set, are two surviving LFs treated as mutually independent and barred
    from every edge. Edges are unordered pairs of surviving LFs, stored
    (i, j) with i < j in generation order. All indices are original.
    """

    removed: tuple[int, ...]
    surviving: tuple[int, ...]
    anchors: Optional[tuple[int, int]]
    edges: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        removed = tuple(int(i) for i in self.removed)
        surviving = tuple(int(i) for i in self.surviving)
        m = len(removed) + len(surviving)
        if set(removed) & set(surviving):
            raise ValidationError("removed and surviving sets overlap")
        if set(removed) | set(surviving) != set(range(m)):
            raise ValidationError("removed and surviving must partition 0..m-1")
        if surviving != tuple(sorted(surviving)):
            raise ValidationError("surviving indices must be ascending")
        anchors = self.anchors
        if anchors is not None:
            anchors = (int(anchors[0]), int(anchors[1]))
            if anchors[0] == anchors[1] or not set(anchors) <= set(surviving):
                raise ValidationError("anchors must be two distinct surviving LFs")
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        seen = set()
        for a, b in edges:
            if a == b:
                raise ValidationError(f"self-loop edge ({a}, {a})")
            if a > b:
                raise ValidationError(f"edge ({a}, {b}) must be stored with i < j")
            if not {a, b} <= set(surviving):
                raise ValidationError(f"edge ({a}, {b}) touches a removed LF")
            if anchors is not None and (a in anchors or b in anchors):
                raise ValidationError(f"edge ({a}, {b}) touches an anchor")
            if (a, b) in seen:
                raise ValidationError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))
        s = len(surviving)
        # Anchor exclusion caps the edge count; without anchors every
        # surviving pair is eligible (planted structures use that form).
        cap = (s - 2) * (s - 3) // 2 if anchors is not None else s * (s - 1) // 2
        if len(edges) > max(cap, 0):
            raise ValidationError(f"{len(edges)} edges exceed the cap of {max(cap, 0)}")
        object.__setattr__(self, "removed", removed)
        object.__setattr__(self, "surviving", surviving)
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "edges", edges)

    @property
    def m(self) -> int:
        return len(self.removed) + len(self.surviving)

    @classmethod
    def trivial(cls, m: int) -> "DependencyStructure":
        """All LFs survive, no anchors, no edges."""
        return cls((), tuple(range(m)), None, ())

    def local_index(self) -> dict[int, int]:
        """Map original surviving index -> position in the surviving list."""
        return {orig: pos for pos, orig in enumerate(self.surviving)}

    def local_edges(self) -> tuple[tuple[int, int], ...]:
        """Edges re-expressed in surviving-list positions."""
        loc = self.local_index()
        return tuple((loc[a], loc[b]) for a, b in self.edges)

    def components(self) -> tuple[tuple[int, ...], ...]:
        """Connected components of the surviving set under the edge set.

        Components are sorted internally and ordered by smallest member;
        anchor and edge-free LFs form singletons. Original indices.
        """
        parent = {i: i for i in self.surviving}

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.edges:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        groups: dict[int, list[int]] = {}
        for i in self.surviving:
            groups.setdefault(find(i), []).append(i)
        return tuple(tuple(sorted(g)) for _, g in sorted(groups.items()))


@dataclass(frozen=True)
class Bundle:
    """A validated (votes, embeddings, gold, config) quadruple."""

    votes: VoteMatrix
    embeddings: EmbeddingSet
    gold: Optional[GoldLabels]
    config: TaskConfig
    provenance: str = "ingested"


def validate_bundle(
    votes: VoteMatrix,
    emb: EmbeddingSet,
    gold: Optional[GoldLabels],
    cfg: TaskConfig,
    provenance: str = "ingested",
) -> Bundle:
    """Check cross-type alignment and return the bundle.

    Deterministic and side-effect-free; per-type invariants were already
    enforced at construction, so only the cross-type contracts are checked
    here: equal LF counts, identical LF names in order, matching n for
    gold labels.
    """
    if emb.m != votes.m:
        raise ValidationError(
            f"dimension mismatch on LF axis: {votes.m} vote columns but "
            f"{emb.m} embedding vectors"
        )
    if emb.lf_names != votes.lf_names:
        raise ValidationError("embedding lf_names do not match vote lf_names")
    if gold is not None and gold.n != votes.n:
        raise ValidationError(
            f"dimension mismatch on example axis: {votes.n} vote rows but "
            f"{gold.n} gold labels"
        )
    return Bundle(votes, emb, gold, cfg, provenance)
