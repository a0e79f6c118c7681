"""Histogram binning: quantile bins for numeric features, identity bins
for categorical ones. Bins are built once per training run on the full
training matrix, so thresholds are deterministic for a given dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..features import FeatureSchema

MAX_CATEGORIES = 256


@dataclass
class BinMapper:
    """Per-feature bin definitions plus the code transform.

    For numeric feature f, thresholds[f] is a sorted float array; the bin
    code of x is the count of thresholds <= x, and a split "after bin b"
    routes x left iff x < thresholds[f][b]. Categorical features use the
    category id itself as the code (thresholds[f] is None).
    """

    schema: FeatureSchema
    thresholds: list[np.ndarray | None]
    n_bins: np.ndarray  # per-feature number of distinct codes

    @property
    def max_code(self) -> int:
        return int(self.n_bins.max()) - 1


def _numeric_thresholds(col: np.ndarray, max_bins: int) -> np.ndarray:
    uniques = np.unique(col)
    if uniques.size <= 1:
        return np.empty(0, dtype=np.float64)
    if uniques.size <= max_bins:
        return (uniques[:-1] + uniques[1:]) / 2.0
    qs = np.arange(1, max_bins, dtype=np.float64) / max_bins
    return np.unique(np.quantile(col, qs))


def fit_bins(X: np.ndarray, schema: FeatureSchema, max_bins: int) -> BinMapper:
    cat_size = dict(zip(schema.categorical_indices, schema.categorical_sizes))
    thresholds: list[np.ndarray | None] = []
    n_bins = np.zeros(X.shape[1], dtype=np.int64)
    for f in range(X.shape[1]):
        if f in cat_size:
            size = cat_size[f]
            if size > MAX_CATEGORIES:
                raise ValueError(
                    f"categorical feature {f} has {size} categories; at most "
                    f"{MAX_CATEGORIES} are supported"
                )
            col = X[:, f]
            if np.any(col != np.floor(col)) or np.any(col < 0) or np.any(col >= size):
                raise ValueError(f"categorical feature {f} has codes outside [0, {size})")
            thresholds.append(None)
            n_bins[f] = size
        else:
            thr = _numeric_thresholds(X[:, f], max_bins)
            thresholds.append(thr)
            n_bins[f] = thr.size + 1
    return BinMapper(schema=schema, thresholds=thresholds, n_bins=n_bins)


def transform(mapper: BinMapper, X: np.ndarray) -> np.ndarray:
    """Map a raw feature matrix to uint8 bin codes (C-contiguous)."""
    codes = np.empty(X.shape, dtype=np.uint8, order="C")
    for f, thr in enumerate(mapper.thresholds):
        if thr is None:
            codes[:, f] = X[:, f].astype(np.uint8)
        else:
            codes[:, f] = np.searchsorted(thr, X[:, f], side="right").astype(np.uint8)
    return codes
