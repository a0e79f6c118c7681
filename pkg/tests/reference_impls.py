"""Independent brute-force reference implementations used as test oracles.

These deliberately avoid the library's internals: plain loops, no shared
helpers, simplest-possible data structures. They implement the same
documented conventions (greedy first-unmatched matching, PR points at
distinct score thresholds, zero-GT groups excluded, stable tie-breaks) so
any disagreement with the library is a bug in one of the two.
"""

from __future__ import annotations

import math

from vrdkit.datamodel import GroundTruthRelation, RelationshipPrediction
from vrdkit.geometry import Box


# ---------------------------------------------------------------------------
# Geometry (recomputed from scratch)
# ---------------------------------------------------------------------------


def ref_iou(a: Box, b: Box) -> float:
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    inter = w * h if (w > 0 and h > 0) else 0.0
    area_a = (a.x_max - a.x_min) * (a.y_max - a.y_min)
    area_b = (b.x_max - b.x_min) * (b.y_max - b.y_min)
    union = area_a + area_b - inter
    return inter / union if union > 0 else 0.0


def ref_enclose(a: Box, b: Box) -> Box:
    return Box(
        min(a.x_min, b.x_min),
        max(a.x_max, b.x_max),
        min(a.y_min, b.y_min),
        max(a.y_max, b.y_max),
    )


def _labels_equal(p: RelationshipPrediction, g: GroundTruthRelation) -> bool:
    return p.label1 == g.label1 and p.relation == g.relation and p.label2 == g.label2


def ref_match_relationship(p, g, thr: float) -> bool:
    return (
        _labels_equal(p, g)
        and ref_iou(p.box1, g.box1) > thr
        and ref_iou(p.box2, g.box2) > thr
    )


def ref_match_phrase(p, g, thr: float) -> bool:
    return _labels_equal(p, g) and (
        ref_iou(ref_enclose(p.box1, p.box2), ref_enclose(g.box1, g.box2)) > thr
    )


# ---------------------------------------------------------------------------
# Average precision via an explicit threshold scan
# ---------------------------------------------------------------------------


def ref_average_precision(scored: list[tuple[float, bool]], num_gt: int) -> float:
    if num_gt == 0 or not scored:
        return 0.0
    thresholds = sorted({s for s, _ in scored}, reverse=True)
    points = []  # (recall, precision) at each threshold
    for t in thresholds:
        at_or_above = [flag for s, flag in scored if s >= t]
        tp = sum(at_or_above)
        points.append((tp / num_gt, tp / len(at_or_above)))
    ap = 0.0
    prev_recall = 0.0
    for i, (recall, _) in enumerate(points):
        best_precision = max(p for _, p in points[i:])
        ap += (recall - prev_recall) * best_precision
        prev_recall = recall
    return ap


# ---------------------------------------------------------------------------
# Full evaluation
# ---------------------------------------------------------------------------


def _rank(preds: list[tuple[int, RelationshipPrediction]]):
    return sorted(preds, key=lambda t: (-t[1].score, t[0]))


def _greedy(ranked, gts, match, thr):
    taken = set()
    out = []
    for idx, pred in ranked:
        hit = False
        for k, gt in enumerate(gts):
            if k not in taken and match(pred, gt, thr):
                taken.add(k)
                hit = True
                break
        out.append((pred.score, idx, hit))
    return out


def _ref_map(preds, gts, thr, match, grouping):
    def key_of(rec):
        return rec.relation if grouping == "per_relation" else (
            rec.label1, rec.relation, rec.label2
        )

    groups = sorted({key_of(g) for g in gts}, key=str)
    if not groups:
        return 0.0, {}
    ap_by_group = {}
    for group in groups:
        group_gts = [g for g in gts if key_of(g) == group]
        flags = []
        images = sorted(
            {g.image_id for g in group_gts}
            | {p.image_id for p in preds if key_of(p) == group}
        )
        for image_id in images:
            ranked = _rank(
                [
                    (i, p)
                    for i, p in enumerate(preds)
                    if p.image_id == image_id and key_of(p) == group
                ]
            )
            image_gts = [g for g in group_gts if g.image_id == image_id]
            flags.extend(_greedy(ranked, image_gts, match, thr))
        flags.sort(key=lambda t: (-t[0], t[1]))
        ap_by_group[group] = ref_average_precision(
            [(s, hit) for s, _, hit in flags], len(group_gts)
        )
    return sum(ap_by_group.values()) / len(ap_by_group), ap_by_group


def _ref_recall(preds, gts, thr, n):
    if not gts:
        return 0.0
    matched = 0
    for image_id in sorted({g.image_id for g in gts}):
        image_gts = [g for g in gts if g.image_id == image_id]
        ranked = _rank([(i, p) for i, p in enumerate(preds) if p.image_id == image_id])
        flags = _greedy(ranked[:n], image_gts, ref_match_relationship, thr)
        matched += sum(hit for _, _, hit in flags)
    return matched / len(gts)


def ref_evaluate(preds, gts, iou_threshold=0.5, weights=(0.4, 0.2, 0.4), recall_n=100,
                 ap_grouping="per_relation"):
    """Returns (map_rel, recall_at_n, map_phrase, final_score)."""
    map_rel, _ = _ref_map(preds, gts, iou_threshold, ref_match_relationship, ap_grouping)
    map_phrase, _ = _ref_map(preds, gts, iou_threshold, ref_match_phrase, ap_grouping)
    recall = _ref_recall(preds, gts, iou_threshold, recall_n)
    final = weights[0] * map_rel + weights[1] * recall + weights[2] * map_phrase
    return map_rel, recall, map_phrase, final


# ---------------------------------------------------------------------------
# Exhaustive candidate enumeration
# ---------------------------------------------------------------------------


def ref_generate_candidates(dets, model, vocab, max_boxes=100, top_k=100):
    """Enumerate-score-sort-truncate, one model call per pair."""
    import numpy as np

    from vrdkit.features import extract_pair_features

    if len(dets) > max_boxes:
        by_score = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
        kept = sorted(by_score[:max_boxes])
    else:
        kept = list(range(len(dets)))
    rows = []
    for i in kept:
        for j in kept:
            if i == j:
                continue
            for rel in vocab.relations_for(dets[i].label, dets[j].label):
                x = extract_pair_features(dets[i], dets[j], rel, vocab)
                f_r = float(model.predict(np.asarray([x]))[0])
                c_c = f_r * (dets[i].score * dets[j].score) ** 0.5
                rows.append((-c_c, i, j, vocab.relation_id(rel), rel, f_r))
    rows.sort(key=lambda t: t[:4])
    return [
        (i, j, rel, f_r, -neg_cc) for neg_cc, i, j, _, rel, f_r in rows[:top_k]
    ]


# ---------------------------------------------------------------------------
# Histogram and split-gain oracles for the tree grower
# ---------------------------------------------------------------------------


def ref_histograms(codes, idx, grad, hess, n_bins):
    import numpy as np

    n_features = codes.shape[1]
    g = np.zeros((n_features, n_bins))
    h = np.zeros((n_features, n_bins))
    c = np.zeros((n_features, n_bins), dtype=np.int64)
    for i in idx:
        for f in range(n_features):
            b = codes[i, f]
            g[f, b] += grad[i]
            h[f, b] += hess[i]
            c[f, b] += 1
    return g, h, c


def ref_best_root_split(codes, grad, hess, n_bins, categorical, min_samples):
    """Exhaustive best first split: (gain, feature, kind, payload) or None.

    payload is the split bin for numeric features and the sorted tuple of
    left categories for categorical ones (prefixes of the g/h ordering).
    Ties prefer the lowest feature index, then the lowest bin / shortest
    prefix, matching the documented contract.
    """
    n = codes.shape[0]
    total_g, total_h = float(grad.sum()), float(hess.sum())
    parent = total_g * total_g / total_h
    best = None
    for f in range(codes.shape[1]):
        col = codes[:, f]
        if f in categorical:
            cats = sorted(set(int(v) for v in col))
            if len(cats) < 2:
                continue
            stats = {
                c: (
                    float(grad[col == c].sum()),
                    float(hess[col == c].sum()),
                    int((col == c).sum()),
                )
                for c in cats
            }
            order = sorted(cats, key=lambda c: (stats[c][0] / stats[c][1], c))
            for k in range(1, len(order)):
                left = order[:k]
                gl = sum(stats[c][0] for c in left)
                hl = sum(stats[c][1] for c in left)
                cl = sum(stats[c][2] for c in left)
                if cl < min_samples or n - cl < min_samples:
                    continue
                gr, hr = total_g - gl, total_h - hl
                gain = gl * gl / hl + gr * gr / hr - parent
                cand = (gain, f, "cat", tuple(sorted(left)))
                if best is None or gain > best[0]:
                    best = cand
        else:
            for b in range(int(n_bins[f]) - 1):
                mask = col <= b
                cl = int(mask.sum())
                if cl < min_samples or n - cl < min_samples:
                    continue
                gl, hl = float(grad[mask].sum()), float(hess[mask].sum())
                gr, hr = total_g - gl, total_h - hl
                gain = gl * gl / hl + gr * gr / hr - parent
                cand = (gain, f, "num", b)
                if best is None or gain > best[0]:
                    best = cand
    if best is None or best[0] <= 0:
        return None
    return best


def ref_apply_tree(tree, x) -> float:
    """Route one sample through a Tree by walking nodes explicitly."""
    node = 0
    while not tree.is_leaf[node]:
        f = tree.feature[node]
        if tree.cat_left[node] is not None:
            go_left = int(x[f]) in tree.cat_left[node]
        else:
            go_left = x[f] < tree.threshold[node]
        node = tree.left[node] if go_left else tree.right[node]
    return float(tree.value[node])


def ref_focal_loss(p: float, y: int, gamma: float, alpha: float) -> float:
    if y == 1:
        return -alpha * (1.0 - p) ** gamma * math.log(p)
    return -(1.0 - alpha) * p**gamma * math.log(1.0 - p)
