"""Evaluation: relationship mAP, Recall@N, phrase mAP, and their weighted sum.

Matching is greedy and one-to-one per image: predictions are processed in
descending score order (ties broken by input position), and each claims the
first still-unmatched ground-truth record it matches. A relationship match
requires all three labels to agree and both boxes to pass IoU strictly above
the threshold; a phrase match compares the enclosing boxes instead.

Average precision integrates the monotone precision envelope over recall
(continuous all-point interpolation), with precision/recall evaluated at
distinct score thresholds so equal-score predictions enter as one block and
metrics do not depend on their relative input order.

AP is averaged per relationship label by default (per-triplet grouping is
available via EvalConfig); groups with zero ground truth are excluded from
the mean rather than scored zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .datamodel import GroundTruthRelation, RelationshipPrediction
from .geometry import enclose, iou

AP_GROUPINGS = ("per_relation", "per_triplet")

DEFAULT_IOU_THRESHOLD = 0.5
DEFAULT_WEIGHTS = (0.4, 0.2, 0.4)
DEFAULT_RECALL_N = 100


@dataclass(frozen=True)
class EvalConfig:
    iou_threshold: float = DEFAULT_IOU_THRESHOLD
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS
    recall_n: int = DEFAULT_RECALL_N
    ap_grouping: str = "per_relation"

    def __post_init__(self) -> None:
        if not 0.0 < self.iou_threshold < 1.0:
            raise ValueError(f"iou_threshold must be in (0, 1): {self.iou_threshold}")
        if len(self.weights) != 3 or any(w < 0 for w in self.weights):
            raise ValueError(f"weights must be three non-negatives: {self.weights}")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1: {self.weights}")
        if self.recall_n < 1:
            raise ValueError(f"recall_n must be >= 1: {self.recall_n}")
        if self.ap_grouping not in AP_GROUPINGS:
            raise ValueError(f"ap_grouping must be one of {AP_GROUPINGS}")


@dataclass(frozen=True)
class EvalReport:
    map_rel: float
    recall_at_n: float
    map_phrase: float
    final_score: float
    ap_rel_by_group: dict = field(default_factory=dict)
    ap_phrase_by_group: dict = field(default_factory=dict)
    num_gt: int = 0
    num_predictions: int = 0

    def to_dict(self) -> dict:
        def keyed(d: dict) -> dict:
            return {
                (k if isinstance(k, str) else ",".join(k)): v
                for k, v in sorted(d.items())
            }

        return {
            "map_rel": self.map_rel,
            "recall_at_n": self.recall_at_n,
            "map_phrase": self.map_phrase,
            "final_score": self.final_score,
            "ap_rel_by_group": keyed(self.ap_rel_by_group),
            "ap_phrase_by_group": keyed(self.ap_phrase_by_group),
            "num_gt": self.num_gt,
            "num_predictions": self.num_predictions,
        }


def match_relationship(
    pred: RelationshipPrediction, gt: GroundTruthRelation, thr: float
) -> bool:
    """Labels all equal and both boxes overlap strictly above thr."""
    return (
        pred.label1 == gt.label1
        and pred.relation == gt.relation
        and pred.label2 == gt.label2
        and iou(pred.box1, gt.box1) > thr
        and iou(pred.box2, gt.box2) > thr
    )


def match_phrase(
    pred: RelationshipPrediction, gt: GroundTruthRelation, thr: float
) -> bool:
    """Labels all equal and the enclosing boxes overlap strictly above thr."""
    return (
        pred.label1 == gt.label1
        and pred.relation == gt.relation
        and pred.label2 == gt.label2
        and iou(enclose(pred.box1, pred.box2), enclose(gt.box1, gt.box2)) > thr
    )


def average_precision(scored: list[tuple[float, bool]], num_gt: int) -> float:
    """Area under the precision envelope over recall.

    scored holds (score, is_true_positive) pairs in any order. Cumulative
    precision/recall are taken at each distinct score value, so ties form
    a single PR point and the result is order-independent. Returns 0.0
    when there is no ground truth or nothing was scored.
    """
    if num_gt < 0:
        raise ValueError("num_gt must be >= 0")
    if num_gt == 0 or not scored:
        return 0.0
    ordered = sorted(scored, key=lambda t: -t[0])

    recalls: list[float] = []
    precisions: list[float] = []
    tp = 0
    seen = 0
    i = 0
    n = len(ordered)
    while i < n:
        j = i
        while j < n and ordered[j][0] == ordered[i][0]:
            tp += ordered[j][1]
            seen += 1
            j += 1
        recalls.append(tp / num_gt)
        precisions.append(tp / seen)
        i = j

    ap = 0.0
    prev_recall = 0.0
    envelope = 0.0
    # Walk blocks from lowest score upward so the envelope is a running max.
    tail = [0.0] * len(precisions)
    for k in range(len(precisions) - 1, -1, -1):
        envelope = max(envelope, precisions[k])
        tail[k] = envelope
    for k, recall in enumerate(recalls):
        ap += (recall - prev_recall) * tail[k]
        prev_recall = recall
    return ap


def _sorted_with_index(preds: list[RelationshipPrediction]) -> list[tuple[int, RelationshipPrediction]]:
    """(input_index, prediction) in descending-score, then input, order."""
    return sorted(enumerate(preds), key=lambda t: (-t[1].score, t[0]))


def _greedy_flags(
    ranked: list[tuple[int, RelationshipPrediction]],
    gts: list[GroundTruthRelation],
    predicate,
    thr: float,
) -> list[tuple[float, int, bool]]:
    """Greedy one-to-one matching; returns (score, input_index, is_tp) rows.

    Each prediction, in rank order, claims the first unmatched ground
    truth (in ground-truth input order) that the predicate accepts.
    """
    matched = [False] * len(gts)
    flags = []
    for idx, pred in ranked:
        hit = False
        for k, gt in enumerate(gts):
            if not matched[k] and predicate(pred, gt, thr):
                matched[k] = True
                hit = True
                break
        flags.append((pred.score, idx, hit))
    return flags


def _group_key(record, grouping: str):
    return record.relation if grouping == "per_relation" else record.triplet


def _mean_ap(
    preds: list[RelationshipPrediction],
    gts: list[GroundTruthRelation],
    cfg: EvalConfig,
    predicate,
) -> tuple[float, dict]:
    """Per-group AP over groups with ground truth, and their mean."""
    gt_by_image_group: dict[tuple[str, object], list[GroundTruthRelation]] = {}
    gt_count: dict[object, int] = {}
    for gt in gts:
        key = _group_key(gt, cfg.ap_grouping)
        gt_by_image_group.setdefault((gt.image_id, key), []).append(gt)
        gt_count[key] = gt_count.get(key, 0) + 1

    pred_by_image_group: dict[tuple[str, object], list[tuple[int, RelationshipPrediction]]] = {}
    for idx, pred in enumerate(preds):
        key = _group_key(pred, cfg.ap_grouping)
        if key in gt_count:  # groups without ground truth are not scored
            pred_by_image_group.setdefault((pred.image_id, key), []).append((idx, pred))

    pooled: dict[object, list[tuple[float, int, bool]]] = {key: [] for key in gt_count}
    for (image_id, key), entries in pred_by_image_group.items():
        ranked = sorted(entries, key=lambda t: (-t[1].score, t[0]))
        image_gts = gt_by_image_group.get((image_id, key), [])
        pooled[key].extend(_greedy_flags(ranked, image_gts, predicate, cfg.iou_threshold))

    ap_by_group = {}
    for key, flags in pooled.items():
        flags.sort(key=lambda t: (-t[0], t[1]))
        ap_by_group[key] = average_precision(
            [(score, hit) for score, _, hit in flags], gt_count[key]
        )
    if not ap_by_group:
        return 0.0, {}
    return sum(ap_by_group.values()) / len(ap_by_group), ap_by_group


def _recall_at_n(
    preds: list[RelationshipPrediction],
    gts: list[GroundTruthRelation],
    cfg: EvalConfig,
) -> float:
    """Matched-GT fraction using only the top-N predictions per image."""
    if not gts:
        return 0.0
    gt_by_image: dict[str, list[GroundTruthRelation]] = {}
    for gt in gts:
        gt_by_image.setdefault(gt.image_id, []).append(gt)
    pred_by_image: dict[str, list[RelationshipPrediction]] = {}
    for pred in preds:
        pred_by_image.setdefault(pred.image_id, []).append(pred)

    matched = 0
    for image_id, image_gts in gt_by_image.items():
        ranked = _sorted_with_index(pred_by_image.get(image_id, []))[: cfg.recall_n]
        flags = _greedy_flags(ranked, image_gts, match_relationship, cfg.iou_threshold)
        matched += sum(hit for _, _, hit in flags)
    return matched / len(gts)


def evaluate(
    preds: list[RelationshipPrediction],
    gts: list[GroundTruthRelation],
    cfg: EvalConfig | None = None,
) -> EvalReport:
    """Full challenge-style evaluation of predictions against ground truth."""
    cfg = cfg or EvalConfig()
    map_rel, ap_rel = _mean_ap(preds, gts, cfg, match_relationship)
    map_phrase, ap_phrase = _mean_ap(preds, gts, cfg, match_phrase)
    recall = _recall_at_n(preds, gts, cfg)
    w_rel, w_recall, w_phrase = cfg.weights
    return EvalReport(
        map_rel=map_rel,
        recall_at_n=recall,
        map_phrase=map_phrase,
        final_score=w_rel * map_rel + w_recall * recall + w_phrase * map_phrase,
        ap_rel_by_group=ap_rel,
        ap_phrase_by_group=ap_phrase,
        num_gt=len(gts),
        num_predictions=len(preds),
    )
