"""Synthetic vote/embedding generator with known ground truth.

Labeling functions come in groups. Each group shares a latent vote: per
example the latent equals the true label with probability `accuracy`.
A member copies the latent with probability `correlation` and otherwise
casts its own flip of the label at the same accuracy, then abstains
with probability 1 - coverage. Embeddings cluster around a per-group
center with isotropic noise, so embedding similarity mirrors the vote
correlation structure and every derived quantity has a closed form:

* accuracy moment   E[vote_i * y] = coverage * (2 * accuracy - 1)
* same-group moment E[v_i v_j]   = rho^2 + (1 - rho^2) * (2p - 1)^2
* cross-group       E[v_i v_j]   = (2p_g - 1) * (2p_h - 1)
* with abstention   E[l_i l_j]   = coverage_i * coverage_j * E[v_i v_j]

Randomness is drawn from SeedSequence(seed).spawn(2 + G + m) in the
fixed order [labels, embeddings, one stream per group latent, one
stream per LF]. The embeddings stream first draws unspecified group
centers (group order), then per-LF noise (global LF order). Each LF
stream draws, in order, the copy-latent, own-flip, and vote indicators.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import (
    DependencyStructure,
    EmbeddingSet,
    GoldLabels,
    TaskConfig,
    ValidationError,
    VoteMatrix,
    _freeze,
)

__all__ = [
    "GroupSpec",
    "SynthSpec",
    "SynthData",
    "generate",
    "closed_form_moments",
    "inject_redundancy",
    "task_config",
    "spec_from_dict",
    "load_spec",
]


@dataclass(frozen=True)
class GroupSpec:
    """One correlated group of labeling functions.

    size members share a latent vote of the given accuracy; correlation
    is the probability a member copies the latent instead of flipping
    the label on its own. coverage is each member's vote probability.
    center optionally pins the group's embedding center (else a random
    unit vector is drawn).
    """

    size: int
    accuracy: float
    correlation: float
    coverage: float = 1.0
    center: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.size < 1:
            raise ValidationError(f"group size must be >= 1, got {self.size}")
        if not 0.0 < self.accuracy < 1.0:
            raise ValidationError(f"accuracy must lie in (0, 1), got {self.accuracy}")
        if not 0.0 <= self.correlation <= 1.0:
            raise ValidationError(f"correlation must lie in [0, 1], got {self.correlation}")
        if not 0.0 < self.coverage <= 1.0:
            raise ValidationError(f"coverage must lie in (0, 1], got {self.coverage}")
        if self.center is not None:
            center = tuple(float(x) for x in self.center)
            if not any(center):
                raise ValidationError("group center must be non-zero")
            object.__setattr__(self, "center", center)


@dataclass(frozen=True)
class SynthSpec:
    """Full recipe for one synthetic dataset."""

    n_samples: int
    class_prior: float
    groups: tuple[GroupSpec, ...]
    embed_dim: int = 16
    embed_noise: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValidationError(f"n_samples must be >= 1, got {self.n_samples}")
        if not 0.0 < self.class_prior < 1.0:
            raise ValidationError(f"class_prior must lie in (0, 1), got {self.class_prior}")
        groups = tuple(self.groups)
        if not groups:
            raise ValidationError("need at least one group")
        if self.embed_dim < 1:
            raise ValidationError(f"embed_dim must be >= 1, got {self.embed_dim}")
        if self.embed_noise < 0:
            raise ValidationError(f"embed_noise must be >= 0, got {self.embed_noise}")
        for g in groups:
            if g.center is not None and len(g.center) != self.embed_dim:
                raise ValidationError(
                    f"group center has length {len(g.center)}, expected embed_dim "
                    f"{self.embed_dim}"
                )
        object.__setattr__(self, "groups", groups)

    @property
    def m(self) -> int:
        return sum(g.size for g in self.groups)


@dataclass(frozen=True)
class SynthData:
    """Generated dataset plus the ground truth behind it.

    structure is the planted dependency graph: no removals, no anchors,
    an edge for every within-group pair of a correlated group.
    accuracy_moments holds each LF's closed-form E[vote * y].
    """

    votes: VoteMatrix
    gold: GoldLabels
    embeddings: EmbeddingSet
    structure: DependencyStructure
    group_index: tuple[int, ...]
    accuracy_moments: np.ndarray
    spec: SynthSpec

    def __post_init__(self):
        object.__setattr__(
            self, "accuracy_moments", _freeze(np.asarray(self.accuracy_moments, np.float64))
        )
        object.__setattr__(self, "group_index", tuple(int(g) for g in self.group_index))


def _lf_names(m: int) -> tuple[str, ...]:
    width = max(2, len(str(m - 1)))
    return tuple(f"lf{i:0{width}d}" for i in range(m))


def _group_layout(spec: SynthSpec) -> tuple[list[int], list[range]]:
    group_of: list[int] = []
    members: list[range] = []
    start = 0
    for gi, g in enumerate(spec.groups):
        members.append(range(start, start + g.size))
        group_of.extend([gi] * g.size)
        start += g.size
    return group_of, members


def planted_structure(spec: SynthSpec) -> DependencyStructure:
    """The true dependency graph: edges between members of correlated groups."""
    _, members = _group_layout(spec)
    edges = []
    for g, rng in zip(spec.groups, members):
        if g.correlation > 0 and g.size >= 2:
            ids = list(rng)
            edges.extend(
                (ids[a], ids[b]) for a in range(len(ids)) for b in range(a + 1, len(ids))
            )
    return DependencyStructure(
        removed=(), surviving=tuple(range(spec.m)), anchors=None, edges=tuple(edges)
    )


def generate(spec: SynthSpec) -> SynthData:
    """Draw one dataset from the spec. Deterministic in spec.seed."""
    m = spec.m
    n = spec.n_samples
    group_count = len(spec.groups)
    group_of, _ = _group_layout(spec)

    children = np.random.SeedSequence(spec.seed).spawn(2 + group_count + m)
    rng_labels = np.random.default_rng(children[0])
    rng_embed = np.random.default_rng(children[1])
    rng_groups = [np.random.default_rng(children[2 + g]) for g in range(group_count)]
    rng_lfs = [np.random.default_rng(children[2 + group_count + i]) for i in range(m)]

    y = np.where(rng_labels.random(n) < spec.class_prior, 1, -1).astype(np.int8)

    centers = []
    for g in spec.groups:
        if g.center is not None:
            centers.append(np.asarray(g.center, dtype=np.float64))
        else:
            raw = rng_embed.normal(size=spec.embed_dim)
            centers.append(raw / np.linalg.norm(raw))
    vectors = np.empty((m, spec.embed_dim))
    for i in range(m):
        noise = rng_embed.normal(size=spec.embed_dim)
        vectors[i] = centers[group_of[i]] + spec.embed_noise * noise

    latents = []
    for gi, g in enumerate(spec.groups):
        correct = rng_groups[gi].random(n) < g.accuracy
        latents.append(np.where(correct, y, -y).astype(np.int8))

    votes = np.zeros((n, m), dtype=np.int8)
    for i in range(m):
        g = spec.groups[group_of[i]]
        rng = rng_lfs[i]
        use_latent = rng.random(n) < g.correlation
        own_correct = rng.random(n) < g.accuracy
        casts = rng.random(n) < g.coverage
        own = np.where(own_correct, y, -y)
        votes[:, i] = np.where(casts, np.where(use_latent, latents[group_of[i]], own), 0)

    moments = np.array(
        [spec.groups[gi].coverage * (2.0 * spec.groups[gi].accuracy - 1.0) for gi in group_of]
    )
    names = _lf_names(m)
    return SynthData(
        votes=VoteMatrix(votes, names),
        gold=GoldLabels.complete(y),
        embeddings=EmbeddingSet(vectors, names),
        structure=planted_structure(spec),
        group_index=tuple(group_of),
        accuracy_moments=moments,
        spec=spec,
    )


def closed_form_moments(spec: SynthSpec) -> np.ndarray:
    """Exact second-moment matrix E[vote_i * vote_j] implied by the spec."""
    group_of, _ = _group_layout(spec)
    cov = np.array([spec.groups[g].coverage for g in group_of])
    gap = np.array([2.0 * spec.groups[g].accuracy - 1.0 for g in group_of])
    rho = np.array([spec.groups[g].correlation for g in group_of])
    gid = np.array(group_of)

    moments = np.outer(cov * gap, cov * gap)
    same = gid[:, None] == gid[None, :]
    # within a group the shared latent adds rho^2 * (1 - (2p - 1)^2)
    within = rho[:, None] * rho[None, :] + (1.0 - rho[:, None] * rho[None, :]) * np.outer(
        gap, gap
    )
    moments = np.where(same, np.outer(cov, cov) * within, moments)
    np.fill_diagonal(moments, cov)
    return moments


def inject_redundancy(
    embeddings: EmbeddingSet,
    votes: VoteMatrix,
    copies: int = 1,
    emb_noise: float = 0.01,
    vote_flip: float = 0.05,
    seed: int = 0,
) -> tuple[EmbeddingSet, VoteMatrix, tuple[tuple[int, int], ...]]:
    """Append near-duplicates of every LF and report the provenance pairs.

    For each source LF, `copies` clones are appended (source order first,
    copy number second): the clone embedding is the source plus isotropic
    noise, the clone votes are the source votes with each cast vote
    flipped with probability vote_flip. One rng seeded by `seed` draws,
    per clone, the embedding noise and then the flip indicators. Returns
    the widened embeddings, votes, and (source_index, clone_index) pairs.
    """
    if copies < 1:
        raise ValidationError(f"copies must be >= 1, got {copies}")
    if emb_noise < 0 or not 0.0 <= vote_flip <= 1.0:
        raise ValidationError("emb_noise must be >= 0 and vote_flip in [0, 1]")
    if embeddings.lf_names != votes.lf_names:
        raise ValidationError("embedding lf_names do not match vote lf_names")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    m, d = embeddings.m, embeddings.dim
    n = votes.n
    new_vectors = [embeddings.vectors]
    new_votes = [votes.votes]
    new_names = list(votes.lf_names)
    pairs = []
    clone_idx = m
    for src in range(m):
        for c in range(1, copies + 1):
            vec = embeddings.vectors[src] + emb_noise * rng.normal(size=d)
            flips = rng.random(n) < vote_flip
            col = votes.votes[:, src].copy()
            col[flips & (col != 0)] *= -1
            new_vectors.append(vec[None, :])
            new_votes.append(col[:, None])
            new_names.append(f"{votes.lf_names[src]}_dup{c}")
            pairs.append((src, clone_idx))
            clone_idx += 1
    return (
        EmbeddingSet(np.vstack(new_vectors), tuple(new_names)),
        VoteMatrix(np.hstack(new_votes), tuple(new_names)),
        tuple(pairs),
    )


def task_config(spec: SynthSpec, task_name: str = "synthetic") -> TaskConfig:
    """TaskConfig matching the spec's class prior."""
    return TaskConfig(
        task_name=task_name,
        label_names=("neg", "pos"),
        class_prior=spec.class_prior,
        metric="accuracy",
    )


def spec_from_dict(payload: dict) -> SynthSpec:
    """Build a SynthSpec from parsed JSON, rejecting unknown keys."""
    allowed = {"n_samples", "class_prior", "groups", "embed_dim", "embed_noise", "seed"}
    unknown = set(payload) - allowed
    if unknown:
        raise ValidationError(f"unknown spec keys: {sorted(unknown)}")
    for key in ("n_samples", "class_prior", "groups"):
        if key not in payload:
            raise ValidationError(f"spec is missing required key {key!r}")
    group_allowed = {"size", "accuracy", "correlation", "coverage", "center"}
    groups = []
    for k, entry in enumerate(payload["groups"]):
        unknown = set(entry) - group_allowed
        if unknown:
            raise ValidationError(f"unknown keys in group {k}: {sorted(unknown)}")
        entry = dict(entry)
        if "center" in entry and entry["center"] is not None:
            entry["center"] = tuple(entry["center"])
        groups.append(GroupSpec(**entry))
    return SynthSpec(
        n_samples=int(payload["n_samples"]),
        class_prior=float(payload["class_prior"]),
        groups=tuple(groups),
        embed_dim=int(payload.get("embed_dim", 16)),
        embed_noise=float(payload.get("embed_noise", 0.05)),
        seed=int(payload.get("seed", 0)),
    )


def load_spec(path) -> SynthSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ValidationError(f"spec file {path} must hold a JSON object")
    return spec_from_dict(payload)
