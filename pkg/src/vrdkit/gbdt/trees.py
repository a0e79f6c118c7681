"""Flat-array decision tree representation shared by both kernel backends.

Internal nodes carry either a numeric threshold (route left iff
x[feature] < threshold) or a left-category set (route left iff the
integer category is in the set; unseen categories go right). Leaves carry
values in log-odds units, unscaled by the learning rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Tree:
    feature: np.ndarray  # int32, global feature index; -1 at leaves
    threshold: np.ndarray  # float64; 0.0 at leaves and categorical nodes
    is_cat: np.ndarray  # uint8
    left: np.ndarray  # int32; -1 at leaves
    right: np.ndarray  # int32; -1 at leaves
    is_leaf: np.ndarray  # uint8
    value: np.ndarray  # float64; 0.0 at internal nodes
    cat_left: list[tuple[int, ...] | None]  # per-node left categories
    cat_bitset: np.ndarray = field(default=None, repr=False)  # uint64 (nodes, words)

    @property
    def num_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def num_leaves(self) -> int:
        return int(self.is_leaf.sum())

    def finalize(self, n_cat_words: int) -> "Tree":
        """Build the packed category bitsets used by the kernels."""
        self.cat_bitset = pack_cat_bitsets(self.cat_left, self.num_nodes, n_cat_words)
        return self

    def to_jsonable(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "is_leaf": self.is_leaf.tolist(),
            "value": self.value.tolist(),
            "cat_left": [list(c) if c is not None else None for c in self.cat_left],
        }

    @staticmethod
    def from_jsonable(d: dict, n_cat_words: int) -> "Tree":
        cat_left = [tuple(c) if c is not None else None for c in d["cat_left"]]
        tree = Tree(
            feature=np.asarray(d["feature"], dtype=np.int32),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            is_cat=np.asarray([c is not None for c in cat_left], dtype=np.uint8),
            left=np.asarray(d["left"], dtype=np.int32),
            right=np.asarray(d["right"], dtype=np.int32),
            is_leaf=np.asarray(d["is_leaf"], dtype=np.uint8),
            value=np.asarray(d["value"], dtype=np.float64),
            cat_left=cat_left,
        )
        return tree.finalize(n_cat_words)


def pack_cat_bitsets(
    cat_left: list[tuple[int, ...] | None], n_nodes: int, n_words: int
) -> np.ndarray:
    bits = np.zeros((n_nodes, n_words), dtype=np.uint64)
    for node, cats in enumerate(cat_left):
        if cats is None:
            continue
        for c in cats:
            bits[node, c >> 6] |= np.uint64(1) << np.uint64(c & 63)
    return bits


def n_cat_words_for_sizes(categorical_sizes: tuple[int, ...]) -> int:
    if not categorical_sizes:
        return 1
    return (max(categorical_sizes) + 63) // 64
