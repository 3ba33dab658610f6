"""Pure-numpy implementations of the greedy selection loops.

Semantics are identical to the compiled extension, including tie handling:
every scan considers off-diagonal pairs (i, j) with i < j and resolves
equal values in favor of the lexicographically smallest pair. Entries of
removed LFs, anchor LFs, and already-selected edges are excluded from
later scans (masking with +-inf rather than zeroing, so negative
similarity values cannot resurrect an excluded pair).
"""

from __future__ import annotations

import numpy as np


def _masked_upper(matrix: np.ndarray, fill: float) -> np.ndarray:
    """Copy of the matrix with the diagonal and lower triangle masked."""
    m = matrix.shape[0]
    work = np.array(matrix, dtype=np.float64, copy=True)
    work[np.tril_indices(m)] = fill
    return work


def greedy_removal(matrix: np.ndarray, m_r: int) -> np.ndarray:
    """Remove m_r LFs, each step dropping the larger index of the most
    similar remaining pair. Returns removal order as original indices."""
    m = matrix.shape[0]
    work = _masked_upper(matrix, -np.inf)
    removed = np.empty(m_r, dtype=np.intp)
    for t in range(m_r):
        i, j = divmod(int(np.argmax(work)), m)
        removed[t] = j
        work[j, :] = -np.inf
        work[:, j] = -np.inf
    return removed


def greedy_edges(matrix: np.ndarray, m_e: int) -> tuple[tuple[int, int], np.ndarray]:
    """Pick the least-similar pair as anchors, then greedily select m_e
    edges by descending similarity. Returns (anchors, edges in order)."""
    m = matrix.shape[0]
    work = _masked_upper(matrix, np.inf)
    a0, a1 = divmod(int(np.argmin(work)), m)
    work[np.tril_indices(m)] = -np.inf
    for k in (a0, a1):
        work[k, :] = -np.inf
        work[:, k] = -np.inf
    edges = np.empty((m_e, 2), dtype=np.intp)
    for t in range(m_e):
        i, j = divmod(int(np.argmax(work)), m)
        edges[t, 0] = i
        edges[t, 1] = j
        work[i, j] = -np.inf
    return (a0, a1), edges
