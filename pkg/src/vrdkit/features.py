"""Deterministic features for an ordered box pair plus a candidate relation.

Vector layout (dimension 15, fixed so model files stay portable):

  [0] label1 id          (categorical)
  [1] label2 id          (categorical)
  [2] relation id        (categorical)
  [3] center distance between the boxes
  [4] relative distance: center distance / (area1 + area2), 0 if both
      areas are 0
  [5] rel_dx: cx1 - cx2   (signed center offset of box1 relative to box2)
  [6] rel_dy: cy1 - cy2
  [7..10]  box1 raw coordinates (x_min, x_max, y_min, y_max)
  [11..14] box2 raw coordinates

Detector confidences are deliberately not features; they enter the final
score only through the confidence combination in vrdkit.scoring.

"Distance of boxes" is read as center-to-center Euclidean distance (the
nearest-edge reading would also be defensible; this one is fixed here).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datamodel import Detection, TripletVocabulary
from .geometry import Box, area, center

FEATURE_NAMES = (
    "label1",
    "label2",
    "relation",
    "center_distance",
    "relative_distance",
    "rel_dx",
    "rel_dy",
    "x_min1",
    "x_max1",
    "y_min1",
    "y_max1",
    "x_min2",
    "x_max2",
    "y_min2",
    "y_max2",
)

NUM_FEATURES = len(FEATURE_NAMES)
CATEGORICAL_INDICES = (0, 1, 2)


@dataclass(frozen=True)
class FeatureSchema:
    """Shape contract between feature extraction and the boosted model."""

    num_features: int = NUM_FEATURES
    categorical_indices: tuple[int, ...] = CATEGORICAL_INDICES
    categorical_sizes: tuple[int, ...] = ()
    names: tuple[str, ...] = field(default=FEATURE_NAMES)

    @staticmethod
    def for_vocabulary(vocab: TripletVocabulary) -> "FeatureSchema":
        return FeatureSchema(
            categorical_sizes=(vocab.num_classes, vocab.num_classes, vocab.num_relations)
        )

    def to_dict(self) -> dict:
        return {
            "num_features": self.num_features,
            "categorical_indices": list(self.categorical_indices),
            "categorical_sizes": list(self.categorical_sizes),
            "names": list(self.names),
        }

    @staticmethod
    def from_dict(d: dict) -> "FeatureSchema":
        return FeatureSchema(
            num_features=int(d["num_features"]),
            categorical_indices=tuple(int(i) for i in d["categorical_indices"]),
            categorical_sizes=tuple(int(s) for s in d["categorical_sizes"]),
            names=tuple(d["names"]),
        )


def pair_features_from_boxes(
    label1_id: int, label2_id: int, relation_id: int, box1: Box, box2: Box
) -> np.ndarray:
    """Assemble the 15-vector from already-resolved ids and boxes."""
    cx1, cy1 = center(box1)
    cx2, cy2 = center(box2)
    dx = cx1 - cx2
    dy = cy1 - cy2
    dist = np.sqrt(dx * dx + dy * dy)
    area_sum = area(box1) + area(box2)
    rel_dist = dist / area_sum if area_sum > 0.0 else 0.0
    return np.array(
        [
            float(label1_id),
            float(label2_id),
            float(relation_id),
            dist,
            rel_dist,
            dx,
            dy,
            box1.x_min,
            box1.x_max,
            box1.y_min,
            box1.y_max,
            box2.x_min,
            box2.x_max,
            box2.y_min,
            box2.y_max,
        ],
        dtype=np.float64,
    )


def extract_pair_features(
    d1: Detection, d2: Detection, relation: str, vocab: TripletVocabulary
) -> np.ndarray:
    """Feature vector for an ordered detection pair and a relation.

    The triplet (d1.label, relation, d2.label) must be in the vocabulary.
    """
    triplet = (d1.label, relation, d2.label)
    if triplet not in vocab:
        raise ValueError(f"triplet {triplet!r} not in vocabulary")
    return pair_features_from_boxes(
        vocab.class_id(d1.label),
        vocab.class_id(d2.label),
        vocab.relation_id(relation),
        d1.box,
        d2.box,
    )


def feature_matrix(rows: list[np.ndarray]) -> np.ndarray:
    """Stack single-pair vectors into an (n, 15) float64 matrix."""
    if not rows:
        return np.empty((0, NUM_FEATURES), dtype=np.float64)
    return np.stack(rows).astype(np.float64, copy=False)
