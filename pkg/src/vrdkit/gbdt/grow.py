"""Leaf-wise (best-first) tree growth over binned features.

Each step splits the current leaf with the highest split gain, where
gain = G_L^2/H_L + G_R^2/H_R - G_P^2/H_P over (floored) Hessian sums.
Growth stops at the leaf cap or when no leaf has a positive-gain split.
Ties are broken deterministically: across leaves by creation order,
across candidate splits by lowest feature index then lowest bin / prefix
length, so results are independent of evaluation order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from ._backend import get_kernels
from .trees import Tree, n_cat_words_for_sizes


@dataclass(frozen=True)
class TrainConfig:
    """Boosting hyperparameters (LightGBM-style names and defaults)."""

    num_leaves: int = 31
    learning_rate: float = 0.05
    feature_fraction: float = 0.9
    bagging_fraction: float = 0.8
    bagging_freq: int = 5
    num_rounds: int = 100
    min_samples_per_leaf: int = 20
    max_bins: int = 255
    seed: int = 0

    def __post_init__(self):
        if self.num_leaves < 2:
            raise ValueError("num_leaves must be >= 2")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if not 0.0 < self.feature_fraction <= 1.0:
            raise ValueError("feature_fraction must be in (0, 1]")
        if not 0.0 < self.bagging_fraction <= 1.0:
            raise ValueError("bagging_fraction must be in (0, 1]")
        if self.bagging_freq < 0:
            raise ValueError("bagging_freq must be >= 0")
        if self.num_rounds < 1:
            raise ValueError("num_rounds must be >= 1")
        if self.min_samples_per_leaf < 1:
            raise ValueError("min_samples_per_leaf must be >= 1")
        if not 2 <= self.max_bins <= 255:
            raise ValueError("max_bins must be in [2, 255]")

    def to_dict(self) -> dict:
        return {
            "num_leaves": self.num_leaves,
            "learning_rate": self.learning_rate,
            "feature_fraction": self.feature_fraction,
            "bagging_fraction": self.bagging_fraction,
            "bagging_freq": self.bagging_freq,
            "num_rounds": self.num_rounds,
            "min_samples_per_leaf": self.min_samples_per_leaf,
            "max_bins": self.max_bins,
            "seed": self.seed,
        }


@dataclass
class _SplitPlan:
    gain: float
    feature_pos: int  # position within the tree's feature subset
    order_key: int  # numeric: last left bin; categorical: prefix length
    is_cat: bool
    split_bin: int = -1
    left_cats: tuple[int, ...] = ()


def _scan_numeric(g, h, c, total_g, total_h, total_c, min_samples):
    """Best split of one numeric histogram; returns (gain, bin) or None."""
    if g.shape[0] < 2:
        return None
    cg = np.cumsum(g)[:-1]
    ch = np.cumsum(h)[:-1]
    cc = np.cumsum(c)[:-1]
    ok = (cc >= min_samples) & (total_c - cc >= min_samples)
    if not ok.any():
        return None
    gl, hl, gr, hr = cg[ok], ch[ok], total_g - cg[ok], total_h - ch[ok]
    gains = gl * gl / hl + gr * gr / hr - total_g * total_g / total_h
    best = int(np.argmax(gains))  # first occurrence wins on exact ties
    return float(gains[best]), int(np.nonzero(ok)[0][best])


def _scan_categorical(g, h, c, total_g, total_h, total_c, min_samples):
    """Best sorted-prefix category split; returns (gain, k, left_cats)."""
    present = np.nonzero(c > 0)[0]
    if present.size < 2:
        return None
    ratio = g[present] / h[present]
    order = present[np.lexsort((present, ratio))]
    cg = np.cumsum(g[order])[:-1]
    ch = np.cumsum(h[order])[:-1]
    cc = np.cumsum(c[order])[:-1]
    ok = (cc >= min_samples) & (total_c - cc >= min_samples)
    if not ok.any():
        return None
    gl, hl, gr, hr = cg[ok], ch[ok], total_g - cg[ok], total_h - ch[ok]
    gains = gl * gl / hl + gr * gr / hr - total_g * total_g / total_h
    best = int(np.argmax(gains))
    k = int(np.nonzero(ok)[0][best]) + 1  # prefix length
    return float(gains[best]), k, tuple(sorted(int(cat) for cat in order[:k]))


def _best_split(
    codes_sub,
    idx,
    grad,
    hess,
    n_bins_sub,
    cat_pos,
    min_samples,
    max_code,
):
    """Highest-gain split over all features for the samples in idx."""
    kern = get_kernels()
    hist_g, hist_h, hist_c = kern.build_histograms(
        codes_sub, idx, grad, hess, max_code + 1
    )
    # Parent stats from any feature's histogram (all features see all rows).
    total_g = float(hist_g[0].sum())
    total_h = float(hist_h[0].sum())
    total_c = int(idx.shape[0])

    best: _SplitPlan | None = None
    for f_pos in range(codes_sub.shape[1]):
        nb = int(n_bins_sub[f_pos])
        g, h, c = hist_g[f_pos, :nb], hist_h[f_pos, :nb], hist_c[f_pos, :nb]
        if f_pos in cat_pos:
            found = _scan_categorical(g, h, c, total_g, total_h, total_c, min_samples)
            if found is None:
                continue
            gain, order_key, left_cats = found
            plan = _SplitPlan(gain, f_pos, order_key, True, left_cats=left_cats)
        else:
            found = _scan_numeric(g, h, c, total_g, total_h, total_c, min_samples)
            if found is None:
                continue
            gain, split_bin = found
            plan = _SplitPlan(gain, f_pos, split_bin, False, split_bin=split_bin)
        if gain <= 0.0:
            continue
        if best is None or gain > best.gain:
            best = plan
    return best, total_g, total_h


def grow_tree(
    codes_sub: np.ndarray,
    thresholds_sub: list[np.ndarray | None],
    n_bins_sub: np.ndarray,
    feature_subset: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    bag_idx: np.ndarray,
    config: TrainConfig,
    categorical_sizes: tuple[int, ...],
) -> Tree:
    """Grow one tree on the bagged rows; leaf values are -G/H (unscaled)."""
    cat_pos = {p for p, thr in enumerate(thresholds_sub) if thr is None}
    max_code = int(n_bins_sub.max()) - 1
    min_samples = config.min_samples_per_leaf

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    cat_left: list[tuple[int, ...] | None] = []
    node_idx: list[np.ndarray | None] = []
    node_stats: list[tuple[float, float]] = []

    def new_node(idx: np.ndarray) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        cat_left.append(None)
        node_idx.append(idx)
        node_stats.append((0.0, 0.0))
        return node

    heap: list[tuple[float, int, _SplitPlan]] = []

    def consider(node: int) -> None:
        idx = node_idx[node]
        plan, g_sum, h_sum = _best_split(
            codes_sub, idx, grad, hess, n_bins_sub, cat_pos, min_samples, max_code
        )
        node_stats[node] = (g_sum, h_sum)
        if plan is not None:
            heapq.heappush(heap, (-plan.gain, node, plan))

    root = new_node(bag_idx)
    consider(root)
    n_leaves = 1

    while heap and n_leaves < config.num_leaves:
        _, node, plan = heapq.heappop(heap)
        idx = node_idx[node]
        col = codes_sub[idx, plan.feature_pos]
        if plan.is_cat:
            table = np.zeros(max_code + 1, dtype=bool)
            table[list(plan.left_cats)] = True
            mask = table[col]
            cat_left[node] = plan.left_cats
        else:
            mask = col <= plan.split_bin
            threshold[node] = float(thresholds_sub[plan.feature_pos][plan.split_bin])
        feature[node] = int(feature_subset[plan.feature_pos])
        node_idx[node] = None  # free parent's sample list
        left_child = new_node(idx[mask])
        right_child = new_node(idx[~mask])
        left[node] = left_child
        right[node] = right_child
        consider(left_child)
        consider(right_child)
        n_leaves += 1

    is_leaf = np.array([l < 0 for l in left], dtype=np.uint8)
    for node in range(len(feature)):
        if is_leaf[node]:
            g_sum, h_sum = node_stats[node]
            value[node] = -g_sum / h_sum
            node_idx[node] = None

    tree = Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        is_cat=np.asarray([c is not None for c in cat_left], dtype=np.uint8),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        is_leaf=is_leaf,
        value=np.asarray(value, dtype=np.float64),
        cat_left=cat_left,
    )
    return tree.finalize(n_cat_words_for_sizes(categorical_sizes))
