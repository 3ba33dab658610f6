"""Similarity matrices over labeling functions.

Three views of how alike two labeling functions are: cosine similarity
of their prompt embeddings, empirical agreement of their votes, and
double-fault rate against gold labels. All produce symmetric m x m
matrices wrapped as SimilarityMatrix.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy import stats

from .data import (
    EmbeddingSet,
    GoldLabels,
    SimilarityMatrix,
    ValidationError,
    VoteMatrix,
)

__all__ = [
    "cosine_matrix",
    "agreement_matrix",
    "double_fault_matrix",
    "matrix_rank_correlation",
]


def cosine_matrix(embeddings: EmbeddingSet) -> SimilarityMatrix:
    """Pairwise cosine similarity of the embedding rows."""
    if not isinstance(embeddings, EmbeddingSet):
        raise ValidationError("cosine_matrix expects an EmbeddingSet")
    vectors = embeddings.vectors
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    unit = vectors / norms
    sim = np.clip(unit @ unit.T, -1.0, 1.0)
    # mirror the upper triangle so float noise cannot break symmetry
    upper = np.triu(sim, k=1)
    sim = upper + upper.T
    np.fill_diagonal(sim, 1.0)
    return SimilarityMatrix(values=sim, kind="cosine")


def agreement_matrix(votes: VoteMatrix) -> SimilarityMatrix:
    """Fraction of co-voted samples on which two functions agree.

    Samples where either function abstains are ignored; a pair that
    never co-votes scores 0. Diagonal is fixed at 1.
    """
    if not isinstance(votes, VoteMatrix):
        raise ValidationError("agreement_matrix expects a VoteMatrix")
    v = votes.votes.astype(np.int64)
    active = (v != 0).astype(np.int64)
    covote = active.T @ active
    # per co-voted sample the vote product is +1 on agreement, -1 otherwise
    agree = (covote + v.T @ v) // 2
    sim = agree / np.maximum(1, covote)
    np.fill_diagonal(sim, 1.0)
    return SimilarityMatrix(values=sim, kind="agreement")


def double_fault_matrix(
    votes: VoteMatrix, gold: GoldLabels, per_covote: bool = False
) -> SimilarityMatrix:
    """Rate at which two functions are wrong on the same sample.

    A function is wrong on a sample when it votes and disagrees with
    the gold label. By default the joint-fault count is divided by the
    number of samples; with per_covote=True it is divided by the number
    of samples both functions vote on.
    """
    if not isinstance(votes, VoteMatrix):
        raise ValidationError("double_fault_matrix expects a VoteMatrix")
    if not isinstance(gold, GoldLabels):
        raise ValidationError("double_fault_matrix expects GoldLabels")
    gold.require_complete()
    v = votes.votes
    n = v.shape[0]
    if gold.labels.shape[0] != n:
        raise ValidationError(
            f"gold has {gold.labels.shape[0]} labels but votes cover {n} samples"
        )
    wrong = ((v != 0) & (v != gold.labels[:, None])).astype(np.int64)
    faults = wrong.T @ wrong
    if per_covote:
        active = (v != 0).astype(np.int64)
        covote = active.T @ active
        sim = faults / np.maximum(1, covote)
    else:
        sim = faults / max(1, n)
    return SimilarityMatrix(values=sim, kind="double_fault")


def _upper_entries(matrix) -> np.ndarray:
    values = matrix.values if isinstance(matrix, SimilarityMatrix) else np.asarray(matrix)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {values.shape}")
    m = values.shape[0]
    iu = np.triu_indices(m, k=1)
    return values[iu]


def matrix_rank_correlation(a, b) -> float:
    """Spearman rank correlation of two matrices' above-diagonal entries."""
    xa = _upper_entries(a)
    xb = _upper_entries(b)
    if xa.shape != xb.shape:
        raise ValidationError("matrices must have the same shape")
    if xa.shape[0] < 3:
        raise ValidationError("need at least 3 labeling functions for rank correlation")
    with warnings.catch_warnings():
        # constant input makes scipy warn and return nan; the nan is
        # turned into a ValidationError below, so the warning is noise
        warnings.simplefilter("ignore")
        result = stats.spearmanr(xa, xb)
    rho = float(getattr(result, "statistic", getattr(result, "correlation", np.nan)))
    if np.isnan(rho):
        raise ValidationError("rank correlation undefined: constant similarity values")
    return rho
