"""Embedding providers for prompted labeling functions.

A prompted labeling function is a natural-language template plus a map
from answers to a vote. This module turns a list of them into an
EmbeddingSet, either by reading precomputed vectors from a JSON file
(verbatim, no normalization) or by POSTing the raw template strings to
an embedding service. By default the template is embedded with its
placeholder tokens left in place; substitution happens only through
render_prompt.

HTTP wire format: POST {"texts": [...]} returns {"embeddings": [[...]]}.
A service may return one vector per text or a list of per-token vectors,
which are pooled (mean, first, or last) into one vector. Requests go out
in input order, one batch at a time, so output order equals input order.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import requests

from .data import EmbeddingSet, ValidationError

__all__ = [
    "ProviderError",
    "PromptedLF",
    "ProviderConfig",
    "render_prompt",
    "embed_prompts",
    "load_prompted_lfs",
    "lf_display_names",
]

PLACEHOLDERS = ("[TEXT]", "[PERSON1]", "[PERSON2]")
POOLINGS = ("mean", "first", "last")


class ProviderError(RuntimeError):
    """Raised when an embedding source fails or returns unusable data."""


@dataclass(frozen=True)
class PromptedLF:
    """A prompt template with its answer-to-vote map.

    Answers in positive_answers map to target_label; anything else
    abstains. The template must contain at least one placeholder token.
    """

    template: str
    target_label: int
    positive_answers: frozenset[str]
    name: Optional[str] = None

    def __post_init__(self):
        if self.target_label not in (-1, 1):
            raise ValidationError(f"target_label must be -1 or +1, got {self.target_label}")
        answers = frozenset(self.positive_answers)
        if not answers:
            raise ValidationError("positive_answers must be non-empty")
        if not any(tok in self.template for tok in PLACEHOLDERS):
            raise ValidationError(
                f"template contains none of the placeholders {PLACEHOLDERS}"
            )
        object.__setattr__(self, "positive_answers", answers)


@dataclass(frozen=True)
class ProviderConfig:
    """Where embeddings come from and how to fetch them.

    kind "file" reads vectors verbatim from a JSON file at `location`;
    kind "http" POSTs to the URL. pooling applies only when an HTTP
    service returns per-token vectors. Auth, when configured, is a
    bearer token read from the named environment variable.
    """

    kind: str
    location: str
    auth_header_env_var: Optional[str] = None
    pooling: str = "mean"
    timeout_seconds: float = 30.0
    batch_size: int = 32

    def __post_init__(self):
        if self.kind not in ("file", "http"):
            raise ValidationError(f"kind must be 'file' or 'http', got {self.kind!r}")
        if not self.location:
            raise ValidationError("location must be non-empty")
        if self.pooling not in POOLINGS:
            raise ValidationError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")
        if self.timeout_seconds <= 0:
            raise ValidationError(f"timeout_seconds must be > 0, got {self.timeout_seconds}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")

    @classmethod
    def from_uri(cls, uri: str, **kwargs) -> "ProviderConfig":
        """Parse 'file:<path>' or an http(s) URL."""
        if uri.startswith("file:"):
            return cls(kind="file", location=uri[len("file:") :], **kwargs)
        if uri.startswith(("http://", "https://")):
            return cls(kind="http", location=uri, **kwargs)
        raise ValidationError(
            f"provider must be 'file:<path>' or an http(s) URL, got {uri!r}"
        )


def render_prompt(
    lf: PromptedLF,
    text: str,
    person1: Optional[str] = None,
    person2: Optional[str] = None,
) -> str:
    """Substitute placeholders; every other character passes through.

    A template without [TEXT] is returned with only the person slots
    filled, and a warning is emitted.
    """
    rendered = lf.template
    if "[TEXT]" not in rendered:
        warnings.warn(
            f"template for {lf.name or 'unnamed LF'} has no [TEXT] placeholder; "
            "text was not inserted",
            stacklevel=2,
        )
    rendered = rendered.replace("[TEXT]", text)
    if person1 is not None:
        rendered = rendered.replace("[PERSON1]", person1)
    if person2 is not None:
        rendered = rendered.replace("[PERSON2]", person2)
    return rendered


def lf_display_names(lfs: Sequence[PromptedLF]) -> tuple[str, ...]:
    """Explicit names where given, positional fallbacks elsewhere."""
    return tuple(lf.name if lf.name else f"lf{i}" for i, lf in enumerate(lfs))


def _pool(entry, pooling: str, index: int) -> np.ndarray:
    try:
        arr = np.asarray(entry, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ProviderError(f"malformed embedding for text {index}: {exc}") from None
    if arr.ndim == 1:
        return arr
    if arr.ndim == 2:
        if pooling == "mean":
            return arr.mean(axis=0)
        if pooling == "first":
            return arr[0]
        return arr[-1]
    raise ProviderError(
        f"embedding for text {index} has {arr.ndim} dimensions; expected 1 or 2"
    )


def _embed_from_file(lfs: Sequence[PromptedLF], cfg: ProviderConfig) -> list[np.ndarray]:
    try:
        with open(cfg.location, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise ProviderError(f"embeddings file not found: {cfg.location}") from None
    except json.JSONDecodeError as exc:
        raise ProviderError(f"malformed JSON in {cfg.location}: {exc}") from None
    if not isinstance(payload, dict) or "vectors" not in payload:
        raise ProviderError(f"{cfg.location} must hold a JSON object with 'vectors'")
    vectors = payload["vectors"]
    if len(vectors) != len(lfs):
        raise ProviderError(
            f"{cfg.location} holds {len(vectors)} vectors for {len(lfs)} LFs"
        )
    return [_pool(v, cfg.pooling, i) for i, v in enumerate(vectors)]


def _embed_from_http(lfs: Sequence[PromptedLF], cfg: ProviderConfig) -> list[np.ndarray]:
    headers = {}
    if cfg.auth_header_env_var:
        token = os.environ.get(cfg.auth_header_env_var)
        if not token:
            raise ProviderError(
                f"auth environment variable {cfg.auth_header_env_var} is not set"
            )
        headers["Authorization"] = f"Bearer {token}"
    texts = [lf.template for lf in lfs]
    out: list[np.ndarray] = []
    for start in range(0, len(texts), cfg.batch_size):
        batch = texts[start : start + cfg.batch_size]
        try:
            resp = requests.post(
                cfg.location,
                json={"texts": batch},
                headers=headers,
                timeout=cfg.timeout_seconds,
            )
        except requests.Timeout:
            raise ProviderError(
                f"embedding request timed out after {cfg.timeout_seconds}s"
            ) from None
        except requests.RequestException as exc:
            raise ProviderError(f"embedding request failed: {exc}") from None
        if resp.status_code >= 400:
            raise ProviderError(f"embedding service returned HTTP {resp.status_code}")
        try:
            payload = resp.json()
        except ValueError as exc:
            raise ProviderError(f"embedding service sent malformed JSON: {exc}") from None
        if not isinstance(payload, dict) or "embeddings" not in payload:
            raise ProviderError("embedding response missing 'embeddings' field")
        entries = payload["embeddings"]
        if len(entries) != len(batch):
            raise ProviderError(
                f"embedding service returned {len(entries)} vectors for "
                f"{len(batch)} texts"
            )
        out.extend(_pool(e, cfg.pooling, start + k) for k, e in enumerate(entries))
    return out


def embed_prompts(
    lfs: Sequence[PromptedLF],
    cfg: ProviderConfig,
    lf_names: Optional[Sequence[str]] = None,
) -> EmbeddingSet:
    """One embedding vector per LF, in input order."""
    if not lfs:
        raise ValidationError("need at least one prompted LF")
    names = tuple(lf_names) if lf_names is not None else lf_display_names(lfs)
    if len(names) != len(lfs):
        raise ValidationError(f"{len(names)} names for {len(lfs)} LFs")
    vectors = (
        _embed_from_file(lfs, cfg) if cfg.kind == "file" else _embed_from_http(lfs, cfg)
    )
    dims = {v.shape[0] for v in vectors}
    if len(dims) != 1:
        raise ProviderError(f"dimension disagreement across LFs: got sizes {sorted(dims)}")
    return EmbeddingSet(np.vstack(vectors), names)


def load_prompted_lfs(path) -> list[PromptedLF]:
    """Read {"lfs": [{template, target_label, positive_answers, name?}]}."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(payload, dict) or "lfs" not in payload:
        raise ValidationError(f"{path} must hold a JSON object with an 'lfs' list")
    lfs = []
    for k, entry in enumerate(payload["lfs"]):
        try:
            lfs.append(
                PromptedLF(
                    template=entry["template"],
                    target_label=int(entry["target_label"]),
                    positive_answers=frozenset(entry["positive_answers"]),
                    name=entry.get("name"),
                )
            )
        except KeyError as exc:
            raise ValidationError(f"LF {k} in {path} is missing key {exc}") from None
    if not lfs:
        raise ValidationError(f"{path} lists no LFs")
    return lfs
