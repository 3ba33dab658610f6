"""Structure-aware probabilistic label model plus a majority-vote baseline.

Accuracies are recovered from vote second moments by the triplet method:
for three mutually independent functions the pairwise moments factor, so
|a_i| = sqrt(|M[i,j]| * |M[i,k]| / |M[j,k]|). Triplets that cross a
dependency edge are skipped, estimates are aggregated by median, and
correlated functions share a connected component whose contribution is
averaged at prediction time so redundant votes are not double counted.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import expit, logit

from .data import (
    DependencyStructure,
    TaskConfig,
    ValidationError,
    VoteMatrix,
    _freeze,
)

__all__ = [
    "PosteriorLabels",
    "LabelModelParams",
    "second_moments",
    "triplet_accuracies",
    "fit",
    "predict",
    "majority_vote",
    "fit_timer",
]

ACCURACY_FLOOR = 0.02
ACCURACY_CEIL = 0.98
PROB_FLOOR = 0.01
PROB_CEIL = 0.99
DEPENDENCY_MODES = ("average", "best")


@dataclass(frozen=True)
class PosteriorLabels:
    """Per-example label estimates.

    p_pos is P(y = +1), score its log-odds, hard the committed label in
    {-1, +1}, and voted the number of non-abstaining functions consulted.
    """

    p_pos: np.ndarray
    hard: np.ndarray
    score: np.ndarray
    voted: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p_pos, dtype=np.float64)
        hard = np.asarray(self.hard, dtype=np.int8)
        score = np.asarray(self.score, dtype=np.float64)
        voted = np.asarray(self.voted, dtype=np.int64)
        if not (p.ndim == 1 and p.shape == hard.shape == score.shape == voted.shape):
            raise ValidationError("p_pos, hard, score, voted must be equal-length 1-d arrays")
        if p.size and (p.min() < 0.0 or p.max() > 1.0):
            raise ValidationError("p_pos entries must lie in [0, 1]")
        if not np.isin(hard, (-1, 1)).all():
            raise ValidationError("hard labels must be -1 or +1")
        if not np.isfinite(score).all():
            raise ValidationError("scores must be finite")
        if voted.size and voted.min() < 0:
            raise ValidationError("voted counts must be non-negative")
        object.__setattr__(self, "p_pos", _freeze(p))
        object.__setattr__(self, "hard", _freeze(hard))
        object.__setattr__(self, "score", _freeze(score))
        object.__setattr__(self, "voted", _freeze(voted))

    @property
    def n(self) -> int:
        return self.p_pos.shape[0]


@dataclass(frozen=True)
class LabelModelParams:
    """Fitted model state, aligned to the surviving-LF order.

    accuracy_moment holds |E[vote * y]| estimates after clamping,
    propensity the vote rates, conditional_accuracy P(correct | voted),
    and weight the log-odds each vote contributes. components partitions
    the survivors into correlated groups (original indices).
    """

    survivors: tuple[int, ...]
    accuracy_moment: np.ndarray
    propensity: np.ndarray
    conditional_accuracy: np.ndarray
    weight: np.ndarray
    class_prior: float
    components: tuple[tuple[int, ...], ...]
    m_total: int

    def __post_init__(self):
        survivors = tuple(int(i) for i in self.survivors)
        if not survivors:
            raise ValidationError("model needs at least one surviving LF")
        if survivors != tuple(sorted(set(survivors))):
            raise ValidationError("survivors must be ascending and unique")
        if survivors[0] < 0 or survivors[-1] >= self.m_total:
            raise ValidationError("survivor index out of range for m_total")
        s = len(survivors)
        a = np.asarray(self.accuracy_moment, dtype=np.float64)
        beta = np.asarray(self.propensity, dtype=np.float64)
        p = np.asarray(self.conditional_accuracy, dtype=np.float64)
        w = np.asarray(self.weight, dtype=np.float64)
        for name, arr in (
            ("accuracy_moment", a),
            ("propensity", beta),
            ("conditional_accuracy", p),
            ("weight", w),
        ):
            if arr.shape != (s,):
                raise ValidationError(f"{name} must have shape ({s},), got {arr.shape}")
        if beta.min() < 0.0 or beta.max() > 1.0:
            raise ValidationError("propensity entries must lie in [0, 1]")
        if p.min() <= 0.0 or p.max() >= 1.0:
            raise ValidationError("conditional_accuracy entries must lie in (0, 1)")
        if not np.isfinite(w).all():
            raise ValidationError("weights must be finite")
        if not 0.0 < self.class_prior < 1.0:
            raise ValidationError(f"class_prior must lie in (0, 1), got {self.class_prior}")
        comps = tuple(tuple(int(i) for i in c) for c in self.components)
        flat = [i for c in comps for i in c]
        if sorted(flat) != list(survivors):
            raise ValidationError("components must partition the surviving set")
        object.__setattr__(self, "survivors", survivors)
        object.__setattr__(self, "accuracy_moment", _freeze(a))
        object.__setattr__(self, "propensity", _freeze(beta))
        object.__setattr__(self, "conditional_accuracy", _freeze(p))
        object.__setattr__(self, "weight", _freeze(w))
        object.__setattr__(self, "components", comps)


def second_moments(votes: VoteMatrix) -> np.ndarray:
    """Empirical vote second-moment matrix (V^T V) / n.

    Off-diagonal entries estimate E[vote_i * vote_j]; the diagonal is
    each function's vote rate since non-abstaining votes square to 1.
    """
    if not isinstance(votes, VoteMatrix):
        raise ValidationError("second_moments expects a VoteMatrix")
    if votes.n == 0:
        raise ValidationError("cannot estimate moments from 0 examples")
    v = votes.votes.astype(np.float64)
    return (v.T @ v) / votes.n


def triplet_accuracies(
    moments: np.ndarray,
    edges: Iterable[tuple[int, int]] = (),
    eps: float = 1e-3,
) -> np.ndarray:
    """Accuracy-moment magnitudes |E[vote * y]| from second moments.

    For each function i, every pair (j, k) of other functions forms a
    candidate triplet; triplets containing a dependency edge or with
    |moments[j, k]| < eps are skipped. Per-triplet estimates are reduced
    by median. Functions with no usable triplet fall back to the median
    of their peers' estimates, or 0.5 if nobody has one.
    """
    m2 = np.asarray(moments, dtype=np.float64)
    if m2.ndim != 2 or m2.shape[0] != m2.shape[1]:
        raise ValidationError(f"moments must be square, got shape {m2.shape}")
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    s = m2.shape[0]
    blocked = np.zeros((s, s), dtype=bool)
    for a, b in edges:
        if not (0 <= a < s and 0 <= b < s):
            raise ValidationError(f"edge ({a}, {b}) out of range for {s} functions")
        blocked[a, b] = blocked[b, a] = True
    np.fill_diagonal(blocked, True)
    absm = np.abs(m2)
    usable_pair = ~blocked & (absm >= eps)
    estimates = np.full(s, np.nan)
    for i in range(s):
        allowed = ~blocked[i]
        allowed[i] = False
        pair_ok = np.triu(np.outer(allowed, allowed) & usable_pair, k=1)
        js, ks = np.nonzero(pair_ok)
        if js.size == 0:
            continue
        vals = np.sqrt(absm[i, js] * absm[i, ks] / absm[js, ks])
        estimates[i] = np.median(vals)
    have = np.isfinite(estimates)
    if not have.all():
        fill = float(np.median(estimates[have])) if have.any() else 0.5
        estimates[~have] = fill
    return estimates


def fit(
    votes: VoteMatrix,
    structure: DependencyStructure,
    cfg: TaskConfig,
    eps: float = 1e-3,
) -> LabelModelParams:
    """Estimate per-LF accuracies and weights under a dependency structure.

    Removed functions are dropped before moment estimation, edges gate
    the triplet selection, and the estimated accuracy moments are
    clamped to [0.02, 0.98] and to each function's vote rate before
    conversion to conditional accuracies in [0.01, 0.99].
    """
    if not isinstance(votes, VoteMatrix):
        raise ValidationError("fit expects a VoteMatrix")
    if not isinstance(structure, DependencyStructure):
        raise ValidationError("fit expects a DependencyStructure")
    if structure.m != votes.m:
        raise ValidationError(
            f"structure covers {structure.m} LFs but votes have {votes.m} columns"
        )
    if not structure.surviving:
        raise ValidationError("structure leaves no surviving LFs to fit")
    sub = votes.restrict(structure.surviving)
    m2 = second_moments(sub)
    beta = np.diag(m2).copy()
    raw = triplet_accuracies(m2, structure.local_edges(), eps=eps)
    a = np.minimum(np.clip(raw, ACCURACY_FLOOR, ACCURACY_CEIL), beta)
    p = np.clip((1.0 + a / np.maximum(beta, eps)) / 2.0, PROB_FLOOR, PROB_CEIL)
    w = np.log(p / (1.0 - p))
    return LabelModelParams(
        survivors=structure.surviving,
        accuracy_moment=a,
        propensity=beta,
        conditional_accuracy=p,
        weight=w,
        class_prior=cfg.class_prior,
        components=structure.components(),
        m_total=votes.m,
    )


def predict(
    params: LabelModelParams,
    votes: VoteMatrix,
    dependency_mode: str = "average",
) -> PosteriorLabels:
    """Posterior P(y = +1) per example from weighted surviving votes.

    Each correlated component contributes once: mode "average" divides
    the component's summed weighted votes by its number of active
    members, mode "best" consults only the component's most accurate
    member. Components never voting on an example contribute nothing,
    so an all-abstain example scores the class prior.
    """
    if dependency_mode not in DEPENDENCY_MODES:
        raise ValidationError(
            f"dependency_mode must be one of {DEPENDENCY_MODES}, got {dependency_mode!r}"
        )
    if not isinstance(votes, VoteMatrix):
        raise ValidationError("predict expects a VoteMatrix")
    if votes.m != params.m_total:
        raise ValidationError(
            f"model was fit on {params.m_total} LFs but votes have {votes.m} columns"
        )
    sub = votes.restrict(params.survivors)
    v = sub.votes.astype(np.float64)
    position = {orig: k for k, orig in enumerate(params.survivors)}
    score = np.full(votes.n, float(logit(params.class_prior)))
    for comp in params.components:
        cols = [position[i] for i in comp]
        vc = v[:, cols]
        wc = params.weight[cols]
        if dependency_mode == "average":
            active = (vc != 0).sum(axis=1)
            score += (vc @ wc) / np.maximum(1, active)
        else:
            best = int(np.argmax(params.conditional_accuracy[cols]))
            score += vc[:, best] * wc[best]
    p_pos = expit(score)
    hard = np.where(p_pos >= 0.5, 1, -1)
    voted = (sub.votes != 0).sum(axis=1)
    return PosteriorLabels(p_pos=p_pos, hard=hard, score=score, voted=voted)


def majority_vote(votes: VoteMatrix, cfg: TaskConfig) -> PosteriorLabels:
    """Unweighted baseline over all functions.

    p_pos is the positive share of cast votes (the class prior when all
    abstain); ties commit to +1 when the prior is at least one half,
    otherwise to -1.
    """
    if not isinstance(votes, VoteMatrix):
        raise ValidationError("majority_vote expects a VoteMatrix")
    v = votes.votes
    pos = (v == 1).sum(axis=1)
    neg = (v == -1).sum(axis=1)
    total = pos + neg
    tie = 1 if cfg.class_prior >= 0.5 else -1
    hard = np.where(pos > neg, 1, np.where(neg > pos, -1, tie))
    p_pos = np.where(total > 0, pos / np.maximum(1, total), cfg.class_prior)
    score = logit(np.clip(p_pos, 1e-12, 1.0 - 1e-12))
    return PosteriorLabels(p_pos=p_pos, hard=hard, score=score, voted=total)


def fit_timer(
    votes: VoteMatrix,
    structure: DependencyStructure,
    cfg: Optional[TaskConfig] = None,
    repeats: int = 3,
) -> float:
    """Median wall-clock seconds to fit the model, over repeats runs."""
    if repeats < 1:
        raise ValidationError(f"repeats must be >= 1, got {repeats}")
    if cfg is None:
        cfg = TaskConfig("timing", ("neg", "pos"), 0.5, "accuracy")
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fit(votes, structure, cfg)
        times.append(time.perf_counter() - start)
    return float(np.median(times))
