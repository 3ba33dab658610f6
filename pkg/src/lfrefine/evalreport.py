"""Metrics, savings accounting, sweep orchestration, and report rendering.

Scores are computed on examples with gold labels; coverage reflects how
many examples received at least one vote. Savings arithmetic counts the
queries and tokens avoided by dropping labeling functions. The sweep
runs the refine -> fit -> predict -> score pipeline over a grid of
removal and edge rates and emits plot-ready rows; grid points are
independent, so they may run in parallel and merge in grid order.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np

from .data import Bundle, GoldLabels, TaskConfig, ValidationError
from .labelmodel import PosteriorLabels, fit, fit_timer, majority_vote, predict
from .refine import RefineParams, refine_structure
from .similarity import cosine_matrix
from .data import DependencyStructure

__all__ = [
    "score",
    "headline_metric",
    "prompts_saved",
    "tokens_saved",
    "sweep",
    "sweep_point",
    "remove_one_toy",
    "render_rows",
]

DEFAULT_REMOVAL_RATES = (0.0, 0.1, 0.3, 0.5, 0.7)
DEFAULT_EDGE_RATES = (0.0, 0.05, 0.25)


def score(pred: PosteriorLabels, gold: GoldLabels, cfg: TaskConfig) -> dict:
    """Accuracy, positive-class precision/recall/F1, and vote coverage.

    Metrics use the examples with gold labels; coverage is the fraction
    of all examples on which at least one function voted.
    """
    if not isinstance(pred, PosteriorLabels):
        raise ValidationError("score expects PosteriorLabels")
    if not isinstance(gold, GoldLabels):
        raise ValidationError("score expects GoldLabels")
    if pred.n != gold.n:
        raise ValidationError(
            f"predictions cover {pred.n} examples but gold has {gold.n}"
        )
    mask = gold.present
    if not mask.any():
        raise ValidationError("no gold labels to score against")
    y = gold.labels[mask]
    yhat = pred.hard[mask]
    tp = int(((yhat == 1) & (y == 1)).sum())
    fp = int(((yhat == 1) & (y == -1)).sum())
    fn = int(((yhat == -1) & (y == 1)).sum())
    accuracy = float((yhat == y).mean())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    coverage = float((pred.voted > 0).mean())
    return {
        "accuracy": accuracy,
        "precision": precision,
        "recall": recall,
        "f1_positive": f1,
        "coverage": coverage,
    }


def headline_metric(scores: dict, cfg: TaskConfig) -> tuple[str, float]:
    """The task's configured metric name and its value from a score dict."""
    if cfg.metric == "accuracy":
        return "accuracy", scores["accuracy"]
    return "f1-positive", scores["f1_positive"]


def prompts_saved(m_r: int, n: int) -> int:
    """Queries avoided by dropping m_r functions over n examples."""
    if m_r < 0 or n < 0:
        raise ValidationError("counts must be non-negative")
    return int(m_r) * int(n)


def tokens_saved(removed: Sequence[int], per_lf_avg_tokens: Sequence[float], n: int) -> float:
    """Tokens avoided: n times the removed functions' average prompt lengths."""
    if n < 0:
        raise ValidationError("n must be non-negative")
    counts = list(per_lf_avg_tokens)
    total = 0.0
    for i in removed:
        if not 0 <= i < len(counts) or counts[i] is None:
            raise ValidationError(f"missing token count for removed LF {i}")
        total += float(counts[i])
    return n * total


def _require_scorable(bundle: Bundle) -> GoldLabels:
    if bundle.gold is None or not bundle.gold.present.any():
        raise ValidationError("bundle has no gold labels to score against")
    return bundle.gold


def sweep_point(
    bundle: Bundle,
    removal_rate: float,
    edge_rate: float,
    timing: bool = True,
    dependency_mode: str = "average",
) -> dict:
    """Run refine -> fit -> predict -> score for one grid point."""
    gold = _require_scorable(bundle)
    params = RefineParams(removal_rate=removal_rate, edge_rate=edge_rate)
    structure = refine_structure(cosine_matrix(bundle.embeddings), params)
    model = fit(bundle.votes, structure, bundle.config)
    pred = predict(model, bundle.votes, dependency_mode=dependency_mode)
    scores = score(pred, gold, bundle.config)
    name, value = headline_metric(scores, bundle.config)
    runtime: Optional[float] = None
    if timing:
        runtime = fit_timer(bundle.votes, structure, bundle.config)
    return {
        "provenance": bundle.provenance,
        "removal_rate": removal_rate,
        "edge_rate": edge_rate,
        "m_removed": len(structure.removed),
        "m_edges": len(structure.edges),
        "metric": name,
        "metric_value": value,
        "accuracy": scores["accuracy"],
        "f1_positive": scores["f1_positive"],
        "coverage": scores["coverage"],
        "runtime_seconds": runtime,
        "prompts_saved": prompts_saved(len(structure.removed), bundle.votes.n),
    }


def sweep(
    bundle: Bundle,
    rates: Sequence[float] = DEFAULT_REMOVAL_RATES,
    edge_rates: Sequence[float] = DEFAULT_EDGE_RATES,
    timing: bool = True,
    threads: int = 1,
    dependency_mode: str = "average",
) -> list[dict]:
    """Grid of refine/fit/predict runs; first row is the (0, 0) reference.

    Rows come back in grid order (removal rate major, edge rate minor)
    regardless of thread count.
    """
    if threads < 1:
        raise ValidationError(f"threads must be >= 1, got {threads}")
    _require_scorable(bundle)
    grid: list[tuple[float, float]] = [(0.0, 0.0)]
    for r in rates:
        for e in edge_rates:
            if (float(r), float(e)) != (0.0, 0.0):
                grid.append((float(r), float(e)))

    def run(point: tuple[float, float]) -> dict:
        return sweep_point(bundle, point[0], point[1], timing, dependency_mode)

    if threads == 1:
        return [run(p) for p in grid]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, grid))


def remove_one_toy(bundle: Bundle, low_confidence_threshold: float = 0.5) -> dict:
    """Drop each member of the most similar pair in turn and rescore.

    Returns the pair, its cosine similarity, a low-confidence flag when
    that similarity falls below the threshold (no really-correlated pair
    exists), and exactly three rows: baseline, drop-first, drop-second.
    """
    gold = _require_scorable(bundle)
    m = bundle.votes.m
    if m < 3:
        raise ValidationError(f"need at least 3 labeling functions, got {m}")
    sim = cosine_matrix(bundle.embeddings)
    upper = np.triu(sim.values, k=1) + np.tril(np.full((m, m), -np.inf))
    i, j = divmod(int(np.argmax(upper)), m)
    top_sim = float(sim.values[i, j])

    def run(removed: Optional[int]) -> dict:
        if removed is None:
            structure = DependencyStructure.trivial(m)
        else:
            survivors = tuple(k for k in range(m) if k != removed)
            structure = DependencyStructure((removed,), survivors, None, ())
        model = fit(bundle.votes, structure, bundle.config)
        pred = predict(model, bundle.votes)
        scores = score(pred, gold, bundle.config)
        name, value = headline_metric(scores, bundle.config)
        return {
            "run": "baseline" if removed is None else f"remove:{bundle.votes.lf_names[removed]}",
            "removed_lf": "" if removed is None else bundle.votes.lf_names[removed],
            "metric": name,
            "metric_value": value,
            **scores,
        }

    return {
        "pair": [bundle.votes.lf_names[i], bundle.votes.lf_names[j]],
        "pair_indices": [i, j],
        "similarity": top_sim,
        "low_confidence": bool(top_sim < low_confidence_threshold),
        "rows": [run(None), run(i), run(j)],
    }


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_rows(rows: Sequence[dict], fmt: str) -> str:
    """Render homogeneous row dicts as csv, md, or json text."""
    if fmt == "json":
        return json.dumps(list(rows), indent=2, sort_keys=True) + "\n"
    if not rows:
        return ""
    columns = list(rows[0].keys())
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
        return buf.getvalue()
    if fmt == "md":
        lines = [
            "| " + " | ".join(columns) + " |",
            "| " + " | ".join("---" for _ in columns) + " |",
        ]
        for row in rows:
            lines.append("| " + " | ".join(_cell(row.get(c)) for c in columns) + " |")
        return "\n".join(lines) + "\n"
    raise ValidationError(f"unknown format {fmt!r}; expected json, csv, or md")
