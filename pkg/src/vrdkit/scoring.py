"""Relationship scoring: pair candidates, attribute decoding, ensembling.

The pair stream enumerates ordered detection pairs, scores every
vocabulary-valid relation with the boosted model (F_r), and combines it
with the detector confidences as C_c = F_r * sqrt(C_box1 * C_box2). The
attribute stream decodes detections of synthetic per-triplet classes into
"is" predictions. The two streams are joined by plain concatenation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .datamodel import (
    IS_RELATION,
    Detection,
    RelationshipPrediction,
    TripletVocabulary,
)
from .features import feature_matrix, pair_features_from_boxes
from .gbdt import BoostedModel

DEFAULT_MAX_BOXES = 100
DEFAULT_TOP_K = 100

IS_CLASS_SEPARATOR = "|"


def combine_confidence(f_r: float, c1: float, c2: float) -> float:
    """Combined confidence f_r * sqrt(c1 * c2); monotone in each argument."""
    return f_r * math.sqrt(c1 * c2)


@dataclass(frozen=True)
class RelationshipCandidate:
    """One scored (detection, relation, detection) triple.

    d1_index/d2_index are positions in the original per-image detection
    list and drive deterministic tie-breaking.
    """

    image_id: str
    d1: Detection
    d2: Detection
    relation: str
    f_r: float
    c_c: float
    d1_index: int
    d2_index: int

    def to_prediction(self) -> RelationshipPrediction:
        return RelationshipPrediction(
            image_id=self.image_id,
            score=self.c_c,
            label1=self.d1.label,
            box1=self.d1.box,
            relation=self.relation,
            label2=self.d2.label,
            box2=self.d2.box,
        )


def _select_top_boxes(dets: list[Detection], max_boxes: int) -> list[int]:
    """Indices of the max_boxes highest-score detections, in input order."""
    if len(dets) <= max_boxes:
        return list(range(len(dets)))
    ranked = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    return sorted(ranked[:max_boxes])


def generate_candidates(
    dets: list[Detection],
    model: BoostedModel,
    vocab: TripletVocabulary,
    max_boxes: int = DEFAULT_MAX_BOXES,
    top_k: int = DEFAULT_TOP_K,
) -> list[RelationshipCandidate]:
    """Top-k pair candidates for one image, sorted by descending c_c.

    Considers the max_boxes highest-score detections, enumerates ordered
    pairs (i != j) and every vocabulary relation for the label pair, and
    keeps the top_k by c_c. Ties break toward the earlier first-detection
    index, then earlier second-detection index, then lower relation id.
    """
    if max_boxes < 1 or top_k < 1:
        raise ValueError("max_boxes and top_k must be >= 1")
    if len(dets) < 2:
        return []
    image_ids = {d.image_id for d in dets}
    if len(image_ids) != 1:
        raise ValueError(f"detections span multiple images: {sorted(image_ids)}")

    kept = _select_top_boxes(dets, max_boxes)
    class_ids = {i: vocab.class_id(dets[i].label) for i in kept}

    rows: list[np.ndarray] = []
    meta: list[tuple[int, int, str, int]] = []  # (i, j, relation, relation_id)
    for i in kept:
        d1 = dets[i]
        for j in kept:
            if i == j:
                continue
            d2 = dets[j]
            for rel in vocab.relations_for(d1.label, d2.label):
                rel_id = vocab.relation_id(rel)
                rows.append(
                    pair_features_from_boxes(
                        class_ids[i], class_ids[j], rel_id, d1.box, d2.box
                    )
                )
                meta.append((i, j, rel, rel_id))
    if not rows:
        return []

    f_r = model.predict(feature_matrix(rows))
    scored = []
    for (i, j, rel, rel_id), fr in zip(meta, f_r):
        c_c = combine_confidence(float(fr), dets[i].score, dets[j].score)
        scored.append((-c_c, i, j, rel_id, rel, float(fr), c_c))
    scored.sort(key=lambda t: t[:4])

    image_id = dets[0].image_id
    return [
        RelationshipCandidate(
            image_id=image_id,
            d1=dets[i],
            d2=dets[j],
            relation=rel,
            f_r=fr,
            c_c=c_c,
            d1_index=i,
            d2_index=j,
        )
        for _, i, j, _, rel, fr, c_c in scored[:top_k]
    ]


def candidates_to_predictions(
    cands: list[RelationshipCandidate],
) -> list[RelationshipPrediction]:
    return [c.to_prediction() for c in cands]


def score_images(
    dets_by_image: dict[str, list[Detection]],
    model: BoostedModel,
    vocab: TripletVocabulary,
    max_boxes: int = DEFAULT_MAX_BOXES,
    top_k: int = DEFAULT_TOP_K,
    threads: int = 1,
) -> dict[str, list[RelationshipCandidate]]:
    """generate_candidates per image; output is independent of threads."""
    if threads < 1:
        raise ValueError("threads must be >= 1")
    image_ids = sorted(dets_by_image)

    def one(image_id: str) -> list[RelationshipCandidate]:
        return generate_candidates(
            dets_by_image[image_id], model, vocab, max_boxes, top_k
        )

    if threads == 1 or len(image_ids) <= 1:
        return {image_id: one(image_id) for image_id in image_ids}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(one, image_ids))
    return dict(zip(image_ids, results))


class IsTripletClassMap:
    """Bijection between "is" triplets and synthetic detector class names.

    Each attribute triplet gets its own detector class named
    "label1|is|label2"; decoding maps a detection of that class back to a
    relationship prediction with box1 = box2 = the detection box.
    """

    def __init__(self, is_triplets: frozenset[tuple[str, str, str]] | set):
        triplets = sorted(is_triplets)
        for t in triplets:
            if len(t) != 3 or t[1] != IS_RELATION:
                raise ValueError(f"not an attribute triplet: {t!r}")
            if any(IS_CLASS_SEPARATOR in part for part in t):
                raise ValueError(f"label contains {IS_CLASS_SEPARATOR!r}: {t!r}")
        self._name_to_triplet = {
            IS_CLASS_SEPARATOR.join(t): t for t in triplets
        }
        self._triplet_to_name = {t: n for n, t in self._name_to_triplet.items()}

    @classmethod
    def from_vocabulary(cls, vocab: TripletVocabulary) -> "IsTripletClassMap":
        return cls(vocab.is_triplets)

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(sorted(self._name_to_triplet))

    def class_name(self, triplet: tuple[str, str, str]) -> str:
        try:
            return self._triplet_to_name[triplet]
        except KeyError:
            raise KeyError(f"triplet not in attribute subset: {triplet!r}") from None

    def triplet(self, class_name: str) -> tuple[str, str, str]:
        try:
            return self._name_to_triplet[class_name]
        except KeyError:
            raise KeyError(f"unmapped attribute class {class_name!r}") from None

    def __contains__(self, class_name: str) -> bool:
        return class_name in self._name_to_triplet

    def __len__(self) -> int:
        return len(self._name_to_triplet)


def decode_is_predictions(
    dets: list[Detection], class_map: IsTripletClassMap
) -> list[RelationshipPrediction]:
    """One "is" prediction per detection, order preserved.

    The detection's synthetic class names the triplet; both boxes of the
    prediction are the detection box. Unmapped classes are an error.
    """
    out = []
    for det in dets:
        label1, _, label2 = class_map.triplet(det.label)
        out.append(
            RelationshipPrediction(
                image_id=det.image_id,
                score=det.score,
                label1=label1,
                box1=det.box,
                relation=IS_RELATION,
                label2=label2,
                box2=det.box,
            )
        )
    return out


def ensemble_concat(
    pair_preds: list[RelationshipPrediction],
    is_preds: list[RelationshipPrediction],
) -> list[RelationshipPrediction]:
    """Plain concatenation: no deduplication, no rescoring."""
    return list(pair_preds) + list(is_preds)
