"""Greedy structure refinement over labeling-function similarity matrices.

Two passes over a symmetric similarity matrix:

* removal: repeatedly find the most similar active pair and drop the
  higher-indexed member, shrinking the voting set,
* edge generation: on the surviving set, reserve the least similar pair
  as conditionally independent anchors, then connect the most similar
  remaining pairs as correlation edges.

Ties always resolve to the lexicographically smallest (i, j) with i < j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import DependencyStructure, SimilarityMatrix, ValidationError

__all__ = [
    "RefineParams",
    "resolve_removal_count",
    "greedy_removal",
    "greedy_edges",
    "refine_structure",
    "empirical_structure",
]


def resolve_removal_count(rate: float, m: int) -> int:
    """Turn a removal rate into a count via banker's rounding of rate * m."""
    if not isinstance(m, (int, np.integer)) or isinstance(m, bool):
        raise ValidationError(f"m must be an integer, got {type(m).__name__}")
    if m < 0:
        raise ValidationError(f"m must be non-negative, got {m}")
    if not 0.0 <= rate < 1.0:
        raise ValidationError(f"removal rate must lie in [0, 1), got {rate}")
    return int(round(rate * m))


def _resolve_edge_count(rate: float, cap: int) -> int:
    if not 0.0 <= rate <= 1.0:
        raise ValidationError(f"edge rate must lie in [0, 1], got {rate}")
    return int(round(rate * cap))


@dataclass(frozen=True)
class RefineParams:
    """How many labeling functions to drop and how many edges to add.

    Counts and rates are mutually exclusive per knob. Rates resolve
    against the matrix size at refinement time; the edge rate is a
    fraction of the post-removal edge budget.
    """

    removal_count: int | None = None
    removal_rate: float | None = None
    edge_count: int | None = None
    edge_rate: float | None = None

    def __post_init__(self) -> None:
        if self.removal_count is not None and self.removal_rate is not None:
            raise ValidationError("give removal_count or removal_rate, not both")
        if self.edge_count is not None and self.edge_rate is not None:
            raise ValidationError("give edge_count or edge_rate, not both")
        if self.removal_count is not None and self.removal_count < 0:
            raise ValidationError(f"removal_count must be >= 0, got {self.removal_count}")
        if self.edge_count is not None and self.edge_count < 0:
            raise ValidationError(f"edge_count must be >= 0, got {self.edge_count}")
        if self.removal_rate is not None and not 0.0 <= self.removal_rate < 1.0:
            raise ValidationError(f"removal_rate must lie in [0, 1), got {self.removal_rate}")
        if self.edge_rate is not None and not 0.0 <= self.edge_rate <= 1.0:
            raise ValidationError(f"edge_rate must lie in [0, 1], got {self.edge_rate}")

    def resolve(self, m: int) -> tuple[int, int]:
        """Resolve to concrete (removal count, edge count) for m functions."""
        if self.removal_count is not None:
            m_r = self.removal_count
        elif self.removal_rate is not None:
            m_r = resolve_removal_count(self.removal_rate, m)
        else:
            m_r = 0
        if m_r > max(0, m - 1):
            raise ValidationError(
                f"cannot remove {m_r} of {m} labeling functions; at most {max(0, m - 1)}"
            )
        cap = edge_budget(m - m_r)
        if self.edge_count is not None:
            m_e = self.edge_count
        elif self.edge_rate is not None:
            m_e = _resolve_edge_count(self.edge_rate, cap)
        else:
            m_e = 0
        if m_e > cap:
            raise ValidationError(
                f"edge count {m_e} exceeds budget {cap} for {m - m_r} surviving functions"
            )
        return m_r, m_e


def edge_budget(m_surviving: int) -> int:
    """Largest admissible edge count once 2 of m_surviving become anchors."""
    return max(0, (m_surviving - 2) * (m_surviving - 3) // 2)


def _as_square_sym(matrix) -> np.ndarray:
    values = np.asarray(matrix, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValidationError(f"similarity matrix must be square, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValidationError("similarity matrix must be finite")
    if not np.allclose(values, values.T, atol=1e-9, rtol=0.0):
        raise ValidationError("similarity matrix must be symmetric")
    return np.ascontiguousarray(values)


def greedy_removal(matrix, m_r: int) -> tuple[list[int], list[int]]:
    """Drop m_r functions, one per round, highest similarity pair first.

    Each round selects the most similar still-active pair (i, j) with
    i < j and deactivates j. Returns (removed in removal order,
    survivors ascending).
    """
    values = _as_square_sym(matrix)
    m = values.shape[0]
    if not 0 <= m_r <= max(0, m - 1):
        raise ValidationError(f"removal count {m_r} out of range for {m} functions")
    removed = _kernels.greedy_removal(values, m_r)
    removed_list = [int(k) for k in removed]
    gone = set(removed_list)
    survivors = [k for k in range(m) if k not in gone]
    return removed_list, survivors


def greedy_edges(matrix, m_e: int) -> tuple[tuple[int, int], list[tuple[int, int]]]:
    """Pick anchors plus m_e correlation edges on a similarity matrix.

    The least similar pair becomes the anchors and never receives an
    edge. Each subsequent round connects the most similar unused pair
    among non-anchor functions; a function may appear in several edges.
    Returns (anchors, edges in selection order), all index pairs i < j.
    """
    values = _as_square_sym(matrix)
    m = values.shape[0]
    if m < 2:
        raise ValidationError(f"need at least 2 functions to pick anchors, got {m}")
    if not 0 <= m_e <= edge_budget(m):
        raise ValidationError(f"edge count {m_e} out of range; budget is {edge_budget(m)}")
    anchors, pairs = _kernels.greedy_edges(values, m_e)
    return (int(anchors[0]), int(anchors[1])), [(int(i), int(j)) for i, j in pairs]


def _refine(matrix: SimilarityMatrix, params: RefineParams) -> DependencyStructure:
    m = matrix.values.shape[0]
    m_r, m_e = params.resolve(m)
    removed, survivors = greedy_removal(matrix.values, m_r)
    anchors: tuple[int, int] | None = None
    edges: list[tuple[int, int]] = []
    if len(survivors) >= 2:
        sub = matrix.restrict(survivors)
        local_anchors, local_edges = greedy_edges(sub.values, m_e)
        anchors = (survivors[local_anchors[0]], survivors[local_anchors[1]])
        edges = [(survivors[i], survivors[j]) for i, j in local_edges]
    return DependencyStructure(
        removed=tuple(removed),
        surviving=tuple(survivors),
        anchors=anchors,
        edges=tuple(edges),
    )


def refine_structure(matrix: SimilarityMatrix, params: RefineParams) -> DependencyStructure:
    """Run removal then edge generation on a cosine similarity matrix."""
    if not isinstance(matrix, SimilarityMatrix):
        raise ValidationError("refine_structure expects a SimilarityMatrix")
    if matrix.kind != "cosine":
        raise ValidationError(f"refine_structure expects cosine similarity, got {matrix.kind!r}")
    return _refine(matrix, params)


def empirical_structure(matrix: SimilarityMatrix, params: RefineParams) -> DependencyStructure:
    """Same greedy passes, driven by a vote agreement matrix instead."""
    if not isinstance(matrix, SimilarityMatrix):
        raise ValidationError("empirical_structure expects a SimilarityMatrix")
    if matrix.kind != "agreement":
        raise ValidationError(
            f"empirical_structure expects agreement similarity, got {matrix.kind!r}"
        )
    return _refine(matrix, params)
