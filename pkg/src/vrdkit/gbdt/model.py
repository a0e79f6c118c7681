"""Boosted-tree model: training loop, prediction, and the model file.

predict(x) = logistic(base_score + sum over trees of lr * leaf_value(x)),
clamped to keep the output strictly inside (0, 1). Training is fully
deterministic for a given (data, config, seed): serialized models are
byte-identical across runs and backends.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..features import FeatureSchema
from . import binning
from ._backend import get_kernels
from .grow import TrainConfig, grow_tree
from .objective import HESS_FLOOR, Objective, grad_hess, loss_from_logit, sigmoid
from .trees import Tree, n_cat_words_for_sizes

MODEL_MAGIC = "vrdkit-gbdt"
MODEL_VERSION = 1

PRIOR_LOGIT_CLAMP = 15.0
PREDICT_LOGIT_CLAMP = 30.0


class ModelFormatError(ValueError):
    """Model file is corrupt, truncated, or has an unsupported version."""


@dataclass
class BoostedModel:
    base_score: float
    learning_rate: float
    trees: list[Tree]
    schema: FeatureSchema
    objective: Objective
    degenerate_single_class: bool = False
    train_info: dict = field(default_factory=dict, repr=False)  # not serialized

    @property
    def num_trees(self) -> int:
        return len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return predict(self, X)

    def predict_one(self, x: np.ndarray) -> float:
        return float(predict(self, np.asarray(x, dtype=np.float64).reshape(1, -1))[0])


def _validate_matrix(X: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != schema.num_features:
        raise ValueError(
            f"feature matrix must be (n, {schema.num_features}), got {X.shape}"
        )
    if X.size and not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    for f, size in zip(schema.categorical_indices, schema.categorical_sizes):
        col = X[:, f]
        if np.any(col != np.floor(col)) or np.any(col < 0) or np.any(col >= size):
            raise ValueError(f"categorical feature {f} has codes outside [0, {size})")
    return X


def _prior_logit(n_pos: int, n_neg: int) -> float:
    if n_pos == 0:
        return -PRIOR_LOGIT_CLAMP
    if n_neg == 0:
        return PRIOR_LOGIT_CLAMP
    z = math.log(n_pos / n_neg)
    return max(-PRIOR_LOGIT_CLAMP, min(PRIOR_LOGIT_CLAMP, z))


def train(
    X: np.ndarray,
    y: np.ndarray,
    config: TrainConfig,
    objective: Objective,
    schema: FeatureSchema,
) -> BoostedModel:
    """Train a boosted model; deterministic for a given (data, config, seed).

    Single-class data yields a base-score-only model flagged
    degenerate_single_class. Per-round full-training-set losses and the
    bagging refresh schedule land in model.train_info.
    """
    X = _validate_matrix(X, schema)
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise ValueError("labels must be a 1-D array matching the feature rows")
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    y = y.astype(np.float64)

    n = X.shape[0]
    n_pos = int(y.sum())
    base = _prior_logit(n_pos, n - n_pos)
    if n_pos == 0 or n_pos == n:
        return BoostedModel(
            base_score=base,
            learning_rate=config.learning_rate,
            trees=[],
            schema=schema,
            objective=objective,
            degenerate_single_class=True,
            train_info={"warning": "single-class labels; base-score-only model"},
        )

    mapper = binning.fit_bins(X, schema, config.max_bins)
    codes = binning.transform(mapper, X)
    rng = np.random.default_rng(config.seed)
    kern = get_kernels()

    n_features = schema.num_features
    all_rows = np.arange(n, dtype=np.int64)
    bag = all_rows
    bagging_on = config.bagging_fraction < 1.0 and config.bagging_freq > 0
    bag_size = max(1, int(math.floor(config.bagging_fraction * n)))
    subset_size = max(1, int(math.floor(config.feature_fraction * n_features)))

    raw_sum = np.zeros(n, dtype=np.float64)
    trees: list[Tree] = []
    round_losses: list[float] = []
    refresh_rounds: list[int] = []

    for rnd in range(1, config.num_rounds + 1):
        if bagging_on and rnd % config.bagging_freq == 0:
            bag = np.sort(rng.choice(n, size=bag_size, replace=False)).astype(np.int64)
            refresh_rounds.append(rnd)
        z = base + raw_sum
        grad, hess = grad_hess(z, y, objective)
        hess = np.maximum(hess, HESS_FLOOR)  # focal Hessian can vanish or go negative

        if subset_size < n_features:
            subset = np.sort(rng.choice(n_features, size=subset_size, replace=False))
        else:
            subset = np.arange(n_features)
        codes_sub = np.ascontiguousarray(codes[:, subset])
        thresholds_sub = [mapper.thresholds[f] for f in subset]
        n_bins_sub = mapper.n_bins[subset]

        tree = grow_tree(
            codes_sub,
            thresholds_sub,
            n_bins_sub,
            subset.astype(np.int64),
            grad,
            hess,
            bag,
            config,
            schema.categorical_sizes,
        )
        trees.append(tree)
        kern.apply_tree(
            X,
            tree.feature,
            tree.threshold,
            tree.is_cat,
            tree.cat_bitset,
            tree.left,
            tree.right,
            tree.is_leaf,
            tree.value,
            config.learning_rate,
            raw_sum,
        )
        round_losses.append(float(np.sum(loss_from_logit(base + raw_sum, y, objective))))

    return BoostedModel(
        base_score=base,
        learning_rate=config.learning_rate,
        trees=trees,
        schema=schema,
        objective=objective,
        train_info={
            "round_losses": round_losses,
            "bagging_refresh_rounds": refresh_rounds,
            "config": config.to_dict(),
        },
    )


def predict(model: BoostedModel, X: np.ndarray) -> np.ndarray:
    """Probabilities in (0, 1) for each row of X."""
    X = _validate_matrix(X, model.schema)
    kern = get_kernels()
    acc = np.zeros(X.shape[0], dtype=np.float64)
    for tree in model.trees:
        kern.apply_tree(
            X,
            tree.feature,
            tree.threshold,
            tree.is_cat,
            tree.cat_bitset,
            tree.left,
            tree.right,
            tree.is_leaf,
            tree.value,
            model.learning_rate,
            acc,
        )
    z = np.clip(model.base_score + acc, -PREDICT_LOGIT_CLAMP, PREDICT_LOGIT_CLAMP)
    return sigmoid(z)


def save_model(model: BoostedModel, path: str | os.PathLike) -> None:
    """Write the model as deterministic single-line-per-run JSON."""
    doc = {
        "format": MODEL_MAGIC,
        "version": MODEL_VERSION,
        "base_score": model.base_score,
        "learning_rate": model.learning_rate,
        "degenerate_single_class": model.degenerate_single_class,
        "objective": model.objective.to_dict(),
        "schema": model.schema.to_dict(),
        "trees": [t.to_jsonable() for t in model.trees],
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"), allow_nan=False)
        fh.write("\n")


def load_model(path: str | os.PathLike) -> BoostedModel:
    """Read a model file; loaded models predict bit-identically."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"corrupt model file {path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_MAGIC:
        raise ModelFormatError(f"{path} is not a {MODEL_MAGIC} model file")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"unsupported model version {doc.get('version')!r} (want {MODEL_VERSION})"
        )
    try:
        schema = FeatureSchema.from_dict(doc["schema"])
        n_words = n_cat_words_for_sizes(schema.categorical_sizes)
        return BoostedModel(
            base_score=float(doc["base_score"]),
            learning_rate=float(doc["learning_rate"]),
            trees=[Tree.from_jsonable(t, n_words) for t in doc["trees"]],
            schema=schema,
            objective=Objective.from_dict(doc["objective"]),
            degenerate_single_class=bool(doc["degenerate_single_class"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt model file {path}: {exc}") from None
