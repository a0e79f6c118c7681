"""Pure-numpy kernels, the fallback when the compiled extension is absent.

Both backends must produce bit-identical results: histogram bins are
accumulated in ascending row order (np.bincount adds sequentially in
input order, matching the C loop), and tree application performs exactly
one fused scale*value addition per sample.
"""

from __future__ import annotations

import numpy as np


def build_histograms(
    codes: np.ndarray,
    idx: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    n_bins: int,
):
    """Per-feature (grad, hess, count) histograms over the rows in idx."""
    n_features = codes.shape[1]
    sub = codes[idx]
    g = grad[idx]
    h = hess[idx]
    hist_g = np.empty((n_features, n_bins), dtype=np.float64)
    hist_h = np.empty((n_features, n_bins), dtype=np.float64)
    hist_c = np.empty((n_features, n_bins), dtype=np.int64)
    for f in range(n_features):
        c = sub[:, f]
        hist_g[f] = np.bincount(c, weights=g, minlength=n_bins)
        hist_h[f] = np.bincount(c, weights=h, minlength=n_bins)
        hist_c[f] = np.bincount(c, minlength=n_bins)
    return hist_g, hist_h, hist_c


def apply_tree(
    X: np.ndarray,
    feature: np.ndarray,
    threshold: np.ndarray,
    is_cat: np.ndarray,
    cat_bitset: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    is_leaf: np.ndarray,
    value: np.ndarray,
    scale: float,
    out: np.ndarray,
) -> None:
    """Route every row of X to its leaf and add scale*leaf_value to out."""
    n = X.shape[0]
    node_of = np.zeros(n, dtype=np.int32)
    leaf_mask = is_leaf.astype(bool)
    while True:
        active = np.nonzero(~leaf_mask[node_of])[0]
        if active.size == 0:
            break
        nid = node_of[active]
        xv = X[active, feature[nid]]
        cat = is_cat[nid].astype(bool)
        go_left = np.empty(active.size, dtype=bool)
        num = ~cat
        go_left[num] = xv[num] < threshold[nid[num]]
        if cat.any():
            c = xv[cat].astype(np.int64)
            words = cat_bitset[nid[cat], c >> 6]
            go_left[cat] = (words >> (c & 63).astype(np.uint64)) & np.uint64(1) == 1
        node_of[active] = np.where(go_left, left[nid], right[nid])
    out += scale * value[node_of]
