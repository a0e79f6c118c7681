"""Deterministic synthetic scenes with planted, recoverable relationships.

Scenes are normalized boxes with object labels. Two geometric rules plant
pair relationships, both expressible directly in the pair feature vector
so a correct pipeline can recover them:

* ``above``: subject center strictly higher than object center (smaller y)
  and horizontal centers within ABOVE_DX of each other;
* ``near``: center distance strictly below NEAR_THRESHOLD.

Attributes ("is" records) are sampled per box from the vocabulary's
attribute subset. Simulated detections are the ground-truth boxes with
Gaussian jitter and Beta-distributed confidence scores; attribute
detections use one synthetic class per "is" triplet. With zero rule noise
and zero jitter, detection boxes coincide exactly with ground truth.

Generation is a pure function of the config: one RNG stream is consumed
in a fixed documented order (per image: box count, per-box label/size/
position, pair-rule decisions, attribute assignment, per-object-detection
score then box jitter, per-attribute-detection score then box jitter).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datamodel import (
    Detection,
    GroundTruthRelation,
    TripletVocabulary,
)
from .geometry import Box, center, center_distance
from .scoring import IsTripletClassMap

NEAR_THRESHOLD = 0.2
ABOVE_DX = 0.25

RELATION_ABOVE = "above"
RELATION_NEAR = "near"

_DEFAULT_TRIPLETS: tuple[tuple[str, str, str], ...] = (
    ("crate", "above", "ball"),
    ("ball", "above", "lamp"),
    ("crate", "above", "lamp"),
    ("lamp", "above", "crate"),
    ("crate", "near", "ball"),
    ("ball", "near", "crate"),
    ("ball", "near", "lamp"),
    ("lamp", "near", "ball"),
    ("crate", "is", "shiny"),
    ("crate", "is", "matte"),
    ("ball", "is", "shiny"),
    ("lamp", "is", "matte"),
)


def default_vocabulary() -> TripletVocabulary:
    """Built-in small vocabulary: 5 classes, 3 relations, 8 pair + 4 is triplets."""
    return TripletVocabulary(_DEFAULT_TRIPLETS)


def rule_holds(relation: str, box1: Box, box2: Box) -> bool:
    """Whether the planted geometric rule for relation holds for (box1, box2)."""
    cx1, cy1 = center(box1)
    cx2, cy2 = center(box2)
    if relation == RELATION_ABOVE:
        return cy1 < cy2 and abs(cx1 - cx2) < ABOVE_DX
    if relation == RELATION_NEAR:
        return center_distance(box1, box2) < NEAR_THRESHOLD
    raise ValueError(f"no planted rule for relation {relation!r}")


@dataclass(frozen=True)
class DetectorNoise:
    """Box jitter stddev (normalized units) and Beta score parameters."""

    jitter_std: float = 0.01
    score_a: float = 8.0
    score_b: float = 2.0

    def __post_init__(self) -> None:
        if self.jitter_std < 0:
            raise ValueError(f"jitter_std must be >= 0: {self.jitter_std}")
        if self.score_a <= 0 or self.score_b <= 0:
            raise ValueError("Beta score parameters must be > 0")


@dataclass(frozen=True)
class SynthConfig:
    num_images: int = 100
    min_boxes: int = 2
    max_boxes: int = 6
    min_box_size: float = 0.08
    max_box_size: float = 0.3
    rule_noise: float = 0.02
    attribute_rate: float = 0.5
    class_skew: float = 0.0
    detector: DetectorNoise = field(default_factory=DetectorNoise)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_images < 1:
            raise ValueError(f"num_images must be >= 1: {self.num_images}")
        if not 1 <= self.min_boxes <= self.max_boxes:
            raise ValueError(
                f"need 1 <= min_boxes <= max_boxes: {self.min_boxes}, {self.max_boxes}"
            )
        if not 0.0 < self.min_box_size <= self.max_box_size <= 1.0:
            raise ValueError("box sizes must satisfy 0 < min <= max <= 1")
        if not 0.0 <= self.rule_noise < 1.0:
            raise ValueError(f"rule_noise must be in [0, 1): {self.rule_noise}")
        if not 0.0 <= self.attribute_rate <= 1.0:
            raise ValueError(f"attribute_rate must be in [0, 1]: {self.attribute_rate}")
        if self.class_skew < 0:
            raise ValueError(f"class_skew must be >= 0: {self.class_skew}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0: {self.seed}")


@dataclass(frozen=True)
class SynthOutput:
    gt_relations: list[GroundTruthRelation]
    object_detections: list[Detection]
    attribute_detections: list[Detection]


def _class_weights(num_classes: int, skew: float) -> np.ndarray | None:
    if skew == 0.0:
        return None
    w = (np.arange(num_classes, dtype=np.float64) + 1.0) ** -skew
    return w / w.sum()


def _repair_interval(lo: float, hi: float) -> tuple[float, float]:
    """Clamp to [0, 1] and keep a positive width after jitter."""
    lo = min(max(lo, 0.0), 1.0)
    hi = min(max(hi, 0.0), 1.0)
    if hi <= lo:
        mid = (lo + hi) / 2.0
        lo, hi = max(0.0, mid - 5e-4), min(1.0, mid + 5e-4)
        if hi <= lo:
            lo, hi = (0.0, 1e-3) if mid < 0.5 else (1.0 - 1e-3, 1.0)
    return lo, hi


def _jitter_box(box: Box, std: float, rng: np.random.Generator) -> Box:
    if std == 0.0:
        return box
    d = rng.normal(0.0, std, size=4)
    x_lo, x_hi = _repair_interval(box.x_min + d[0], box.x_max + d[1])
    y_lo, y_hi = _repair_interval(box.y_min + d[2], box.y_max + d[3])
    return Box(x_lo, x_hi, y_lo, y_hi)


def _det_score(noise: DetectorNoise, rng: np.random.Generator) -> float:
    # Scores are rounded to the serialization precision so in-memory values
    # survive a CSV round-trip unchanged.
    return round(float(rng.beta(noise.score_a, noise.score_b)), 6)


def generate(
    cfg: SynthConfig, vocab: TripletVocabulary | None = None
) -> SynthOutput:
    """Generate ground truth and simulated detections for cfg.num_images scenes."""
    vocab = vocab or default_vocabulary()
    if not vocab.pair_triplets:
        raise ValueError("vocabulary has no pair triplets to plant")
    placeable = sorted(vocab.object_classes)
    if not placeable:
        raise ValueError("vocabulary has no object classes to place")
    for _, rel, _ in vocab.pair_triplets:
        rule_holds(rel, Box(0.0, 0.1, 0.0, 0.1), Box(0.2, 0.3, 0.2, 0.3))  # validate

    attrs_by_class: dict[str, list[str]] = {}
    for l1, _, l2 in sorted(vocab.is_triplets):
        attrs_by_class.setdefault(l1, []).append(l2)
    class_map = IsTripletClassMap.from_vocabulary(vocab) if vocab.is_triplets else None

    rng = np.random.default_rng(cfg.seed)
    weights = _class_weights(len(placeable), cfg.class_skew)
    size_lo, size_hi = cfg.min_box_size, cfg.max_box_size

    gts: list[GroundTruthRelation] = []
    object_dets: list[Detection] = []
    attribute_dets: list[Detection] = []

    for index in range(cfg.num_images):
        image_id = f"syn-{cfg.seed}-{index:05d}"
        n_boxes = int(rng.integers(cfg.min_boxes, cfg.max_boxes + 1))

        labels: list[str] = []
        boxes: list[Box] = []
        for _ in range(n_boxes):
            if weights is None:
                labels.append(placeable[int(rng.integers(len(placeable)))])
            else:
                labels.append(placeable[int(rng.choice(len(placeable), p=weights))])
            w = float(rng.uniform(size_lo, size_hi))
            h = float(rng.uniform(size_lo, size_hi))
            x = float(rng.uniform(0.0, 1.0 - w))
            y = float(rng.uniform(0.0, 1.0 - h))
            boxes.append(Box(x, x + w, y, y + h))

        for i in range(n_boxes):
            for j in range(n_boxes):
                if i == j:
                    continue
                for rel in vocab.relations_for(labels[i], labels[j]):
                    holds = rule_holds(rel, boxes[i], boxes[j])
                    if cfg.rule_noise > 0.0 and rng.random() < cfg.rule_noise:
                        holds = not holds
                    if holds:
                        gts.append(
                            GroundTruthRelation(
                                image_id=image_id,
                                label1=labels[i],
                                box1=boxes[i],
                                relation=rel,
                                label2=labels[j],
                                box2=boxes[j],
                            )
                        )

        image_is_gts: list[GroundTruthRelation] = []
        for i in range(n_boxes):
            attrs = attrs_by_class.get(labels[i])
            if not attrs:
                continue
            if rng.random() < cfg.attribute_rate:
                attr = attrs[int(rng.integers(len(attrs)))]
                image_is_gts.append(
                    GroundTruthRelation(
                        image_id=image_id,
                        label1=labels[i],
                        box1=boxes[i],
                        relation="is",
                        label2=attr,
                        box2=boxes[i],
                    )
                )
        gts.extend(image_is_gts)

        for i in range(n_boxes):
            score = _det_score(cfg.detector, rng)
            box = _jitter_box(boxes[i], cfg.detector.jitter_std, rng)
            object_dets.append(
                Detection(image_id=image_id, label=labels[i], score=score, box=box)
            )
        for gt in image_is_gts:
            assert class_map is not None
            score = _det_score(cfg.detector, rng)
            box = _jitter_box(gt.box1, cfg.detector.jitter_std, rng)
            attribute_dets.append(
                Detection(
                    image_id=image_id,
                    label=class_map.class_name(gt.triplet),
                    score=score,
                    box=box,
                )
            )

    return SynthOutput(
        gt_relations=gts,
        object_detections=object_dets,
        attribute_detections=attribute_dets,
    )
