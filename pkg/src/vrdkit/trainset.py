"""Labeled training examples for the pair-relationship classifier.

Candidate pairs are enumerated exactly as at scoring time (ordered
detection pairs, vocabulary-valid relations). A candidate is a positive
when some ground-truth record in the same image has the same three labels
and both boxes overlap it strictly above the IoU threshold; remaining
candidates are negatives, down-sampled to a configurable multiple of the
positive count.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .datamodel import DataError, Detection, GroundTruthRelation, TripletVocabulary
from .features import FEATURE_NAMES, NUM_FEATURES, pair_features_from_boxes
from .geometry import iou

DEFAULT_NEG_RATIO = 3.0
DEFAULT_IOU_THRESHOLD = 0.5

LABEL_COLUMN = "Label"


@dataclass(frozen=True)
class TrainingSet:
    X: np.ndarray  # (n, 15) float64
    y: np.ndarray  # (n,) int8 in {0, 1}
    num_candidates: int
    num_positives: int
    num_negatives_kept: int


def _select_top_boxes(dets: list[Detection], max_boxes: int) -> list[int]:
    if len(dets) <= max_boxes:
        return list(range(len(dets)))
    ranked = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    return sorted(ranked[:max_boxes])


def build_training_set(
    dets_by_image: dict[str, list[Detection]],
    gts_by_image: dict[str, list[GroundTruthRelation]],
    vocab: TripletVocabulary,
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
    neg_ratio: float = DEFAULT_NEG_RATIO,
    seed: int = 0,
    max_boxes: int = 100,
) -> TrainingSet:
    """Feature matrix and 0/1 labels over enumerated candidate pairs.

    Negatives are sampled without replacement down to floor(neg_ratio *
    num_positives), drawn over the global candidate enumeration (images in
    sorted id order) so output is deterministic for a given seed. Raises
    ValueError when no candidate matches any ground truth.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1): {iou_threshold}")
    if neg_ratio < 0:
        raise ValueError(f"neg_ratio must be >= 0: {neg_ratio}")

    rows: list[np.ndarray] = []
    labels: list[int] = []
    for image_id in sorted(dets_by_image):
        dets = dets_by_image[image_id]
        gts = gts_by_image.get(image_id, [])
        kept = _select_top_boxes(dets, max_boxes)
        class_ids = {i: vocab.class_id(dets[i].label) for i in kept}
        for i in kept:
            d1 = dets[i]
            for j in kept:
                if i == j:
                    continue
                d2 = dets[j]
                for rel in vocab.relations_for(d1.label, d2.label):
                    rows.append(
                        pair_features_from_boxes(
                            class_ids[i],
                            class_ids[j],
                            vocab.relation_id(rel),
                            d1.box,
                            d2.box,
                        )
                    )
                    labels.append(
                        int(
                            any(
                                gt.label1 == d1.label
                                and gt.relation == rel
                                and gt.label2 == d2.label
                                and iou(d1.box, gt.box1) > iou_threshold
                                and iou(d2.box, gt.box2) > iou_threshold
                                for gt in gts
                            )
                        )
                    )

    y_all = np.asarray(labels, dtype=np.int8)
    num_pos = int(y_all.sum()) if y_all.size else 0
    if num_pos == 0:
        raise ValueError(
            "no candidate pair matches any ground-truth relationship; "
            "cannot build a training set"
        )

    neg_idx = np.nonzero(y_all == 0)[0]
    target = int(neg_ratio * num_pos)
    if neg_idx.size > target:
        rng = np.random.default_rng(seed)
        neg_idx = np.sort(rng.choice(neg_idx, size=target, replace=False))
    selected = np.sort(np.concatenate([np.nonzero(y_all == 1)[0], neg_idx]))

    X = np.stack([rows[i] for i in selected]).astype(np.float64, copy=False)
    return TrainingSet(
        X=X,
        y=y_all[selected],
        num_candidates=int(y_all.size),
        num_positives=num_pos,
        num_negatives_kept=int(neg_idx.size),
    )


def write_training_set(X: np.ndarray, y: np.ndarray, path: str | os.PathLike) -> None:
    """CSV with the 15 feature columns plus a 0/1 Label column."""
    if X.ndim != 2 or X.shape[1] != NUM_FEATURES or X.shape[0] != y.shape[0]:
        raise ValueError(f"bad training-set shapes: {X.shape}, {y.shape}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(FEATURE_NAMES) + [LABEL_COLUMN])
        for row, label in zip(X, y):
            writer.writerow([repr(float(v)) for v in row] + [str(int(label))])


def read_training_set(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray]:
    """Read a write_training_set CSV back into (X, y)."""
    expected = list(FEATURE_NAMES) + [LABEL_COLUMN]
    rows: list[list[float]] = []
    labels: list[int] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            raise DataError(f"bad training-set header {header!r}", path=str(path), line=1)
        for lineno, cells in enumerate(reader, start=2):
            if len(cells) != len(expected):
                raise DataError(
                    f"expected {len(expected)} columns, got {len(cells)}",
                    path=str(path),
                    line=lineno,
                )
            try:
                rows.append([float(c) for c in cells[:-1]])
                label = int(cells[-1])
            except ValueError:
                raise DataError("non-numeric cell", path=str(path), line=lineno) from None
            if label not in (0, 1):
                raise DataError(f"label must be 0 or 1, got {label}", path=str(path), line=lineno)
            labels.append(label)
    X = (
        np.asarray(rows, dtype=np.float64)
        if rows
        else np.empty((0, NUM_FEATURES), dtype=np.float64)
    )
    return X, np.asarray(labels, dtype=np.int8)
