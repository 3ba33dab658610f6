"""File formats for every pipeline artifact.

Formats are chosen so that a round trip through disk is the identity:
integers stay exact in CSV, floats are written with shortest-round-trip
repr in both CSV and JSON. All writers emit deterministic bytes (sorted
JSON keys, LF line endings).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

import numpy as np

from .data import (
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


def _dump_json(obj, path: Path) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


def _load_json(path: Path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON in {path}: {exc}") from exc


# -- votes: CSV, header row = LF names, one row per example ------------------


def save_votes_csv(votes: VoteMatrix, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(votes.lf_names)
        writer.writerows(votes.votes.tolist())


def load_votes_csv(path: Path) -> VoteMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            names = next(reader)
        except StopIteration:
            raise ValidationError(f"empty vote file {path}") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append([int(cell) for cell in row])
            except ValueError:
                raise ValidationError(
                    f"non-integer vote on line {lineno} of {path}"
                ) from None
            if len(row) != len(names):
                raise ValidationError(
                    f"line {lineno} of {path} has {len(row)} cells, expected {len(names)}"
                )
    return VoteMatrix(np.array(rows, dtype=np.int8).reshape(len(rows), len(names)), tuple(names))


# -- gold labels: single-column CSV, blank cell = unlabeled ------------------


def save_gold_csv(gold: GoldLabels, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["y"])
        for label, present in zip(gold.labels.tolist(), gold.present.tolist()):
            writer.writerow([label] if present else [""])


def load_gold_csv(path: Path) -> GoldLabels:
    labels, present = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["y"]:
            raise ValidationError(f"gold file {path} must have a single 'y' column")
        for lineno, row in enumerate(reader, start=2):
            cell = row[0].strip() if row else ""
            if cell == "":
                labels.append(0)
                present.append(False)
            else:
                try:
                    labels.append(int(cell))
                except ValueError:
                    raise ValidationError(
                        f"non-integer gold label on line {lineno} of {path}"
                    ) from None
                present.append(True)
    return GoldLabels(np.array(labels, dtype=np.int8), np.array(present, dtype=bool))


# -- embeddings: JSON {"lf_names": [...], "dim": d, "vectors": [[...]]} ------


def save_embeddings_json(emb: EmbeddingSet, path: Path) -> None:
    _dump_json(
        {
            "lf_names": list(emb.lf_names),
            "dim": emb.dim,
            "vectors": emb.vectors.tolist(),
        },
        path,
    )


def load_embeddings_json(path: Path) -> EmbeddingSet:
    payload = _load_json(path)
    try:
        names = payload["lf_names"]
        dim = payload["dim"]
        vectors = payload["vectors"]
    except (KeyError, TypeError):
        raise ValidationError(
            f"embedding file {path} must contain lf_names, dim, and vectors"
        ) from None
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValidationError(
            f"embedding file {path} declares dim {dim} but vectors have shape {arr.shape}"
        )
    return EmbeddingSet(arr, tuple(names))


# -- task config: JSON with the four TaskConfig fields -----------------------


def save_task_config(cfg: TaskConfig, path: Path) -> None:
    _dump_json(
        {
            "task_name": cfg.task_name,
            "label_names": list(cfg.label_names),
            "class_prior": cfg.class_prior,
            "metric": cfg.metric,
        },
        path,
    )


def load_task_config(path: Path) -> TaskConfig:
    payload = _load_json(path)
    try:
        return TaskConfig(
            task_name=payload["task_name"],
            label_names=tuple(payload["label_names"]),
            class_prior=float(payload["class_prior"]),
            metric=payload.get("metric", "accuracy"),
        )
    except (KeyError, TypeError):
        raise ValidationError(f"task config {path} is missing required fields") from None


# -- similarity matrices: JSON {"kind":..., "m":..., "rows":[[...]]} ---------


def save_similarity_json(mat: SimilarityMatrix, path: Path) -> None:
    _dump_json({"kind": mat.kind, "m": mat.m, "rows": mat.values.tolist()}, path)


def load_similarity_json(path: Path) -> SimilarityMatrix:
    payload = _load_json(path)
    try:
        kind = payload["kind"]
        m = payload["m"]
        rows = payload["rows"]
    except (KeyError, TypeError):
        raise ValidationError(f"similarity file {path} must contain kind, m, rows") from None
    arr = np.asarray(rows, dtype=np.float64)
    if arr.shape != (m, m):
        raise ValidationError(
            f"similarity file {path} declares m={m} but rows have shape {arr.shape}"
        )
    return SimilarityMatrix(arr, kind)


# -- dependency structure ----------------------------------------------------


def save_structure_json(structure: DependencyStructure, path: Path) -> None:
    _dump_json(
        {
            "removed": list(structure.removed),
            "survivors": list(structure.surviving),
            "anchors": list(structure.anchors) if structure.anchors else None,
            "edges": [list(e) for e in structure.edges],
        },
        path,
    )


def load_structure_json(path: Path) -> DependencyStructure:
    payload = _load_json(path)
    try:
        anchors = payload["anchors"]
        return DependencyStructure(
            removed=tuple(payload["removed"]),
            surviving=tuple(payload["survivors"]),
            anchors=tuple(anchors) if anchors else None,
            edges=tuple((a, b) for a, b in payload["edges"]),
        )
    except (KeyError, TypeError):
        raise ValidationError(
            f"structure file {path} must contain removed, survivors, anchors, edges"
        ) from None


# -- whole bundles ------------------------------------------------------------


def load_bundle(
    votes_path: Path,
    emb_path: Path,
    config_path: Path,
    gold_path: Optional[Path] = None,
    provenance: str = "ingested",
) -> Bundle:
    votes = load_votes_csv(votes_path)
    emb = load_embeddings_json(emb_path)
    cfg = load_task_config(config_path)
    gold = load_gold_csv(gold_path) if gold_path is not None else None
    return validate_bundle(votes, emb, gold, cfg, provenance)


# -- posterior labels and fitted parameters -----------------------------------


def save_predictions_csv(pred, path: Path) -> None:
    """Columns p_pos, hard_label, score, voted; floats use repr round-trip."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["p_pos", "hard_label", "score", "voted"])
        for k in range(pred.n):
            writer.writerow(
                [
                    repr(float(pred.p_pos[k])),
                    int(pred.hard[k]),
                    repr(float(pred.score[k])),
                    int(pred.voted[k]),
                ]
            )


def load_predictions_csv(path: Path):
    from .labelmodel import PosteriorLabels

    expected = ["p_pos", "hard_label", "score", "voted"]
    p_pos, hard, scores, voted = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"empty predictions file {path}") from None
        if header != expected:
            raise ValidationError(
                f"predictions header must be {expected}, got {header} in {path}"
            )
        for k, row in enumerate(reader):
            if len(row) != 4:
                raise ValidationError(f"row {k} in {path} has {len(row)} cells, expected 4")
            try:
                p_pos.append(float(row[0]))
                hard.append(int(row[1]))
                scores.append(float(row[2]))
                voted.append(int(row[3]))
            except ValueError as exc:
                raise ValidationError(f"bad value in row {k} of {path}: {exc}") from None
    return PosteriorLabels(
        p_pos=np.array(p_pos, dtype=np.float64),
        hard=np.array(hard, dtype=np.int8),
        score=np.array(scores, dtype=np.float64),
        voted=np.array(voted, dtype=np.int64),
    )


def save_params_json(params, path: Path) -> None:
    """Fitted label-model state for inspection and reuse."""
    _dump_json(
        {
            "survivors": list(params.survivors),
            "accuracy_moment": params.accuracy_moment.tolist(),
            "propensity": params.propensity.tolist(),
            "conditional_accuracy": params.conditional_accuracy.tolist(),
            "weight": params.weight.tolist(),
            "class_prior": params.class_prior,
            "components": [list(c) for c in params.components],
            "m_total": params.m_total,
        },
        path,
    )


def load_params_json(path: Path):
    from .labelmodel import LabelModelParams

    payload = _load_json(path)
    try:
        return LabelModelParams(
            survivors=tuple(payload["survivors"]),
            accuracy_moment=np.array(payload["accuracy_moment"], dtype=np.float64),
            propensity=np.array(payload["propensity"], dtype=np.float64),
            conditional_accuracy=np.array(payload["conditional_accuracy"], dtype=np.float64),
            weight=np.array(payload["weight"], dtype=np.float64),
            class_prior=float(payload["class_prior"]),
            components=tuple(tuple(c) for c in payload["components"]),
            m_total=int(payload["m_total"]),
        )
    except KeyError as exc:
        raise ValidationError(f"missing key {exc} in params file {path}") from None
