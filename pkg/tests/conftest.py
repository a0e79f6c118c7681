"""Shared fixtures and random-instance generators for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from vrdkit.datamodel import (
    Detection,
    GroundTruthRelation,
    RelationshipPrediction,
    TripletVocabulary,
)
from vrdkit.geometry import Box


@pytest.fixture
def small_vocab() -> TripletVocabulary:
    return TripletVocabulary(
        [
            ("a", "r1", "b"),
            ("b", "r1", "a"),
            ("a", "r2", "a"),
            ("a", "r2", "b"),
            ("b", "r2", "b"),
            ("a", "is", "shiny"),
            ("b", "is", "shiny"),
        ]
    )


def random_box(rng: np.random.Generator, grid: int | None = None) -> Box:
    """A valid random box; with grid set, corners snap to 1/grid steps."""
    if grid is None:
        x = np.sort(rng.uniform(0, 1, 2))
        y = np.sort(rng.uniform(0, 1, 2))
        while x[0] == x[1]:
            x = np.sort(rng.uniform(0, 1, 2))
        while y[0] == y[1]:
            y = np.sort(rng.uniform(0, 1, 2))
        return Box(float(x[0]), float(x[1]), float(y[0]), float(y[1]))
    xs = sorted(rng.choice(grid + 1, size=2, replace=False))
    ys = sorted(rng.choice(grid + 1, size=2, replace=False))
    return Box(xs[0] / grid, xs[1] / grid, ys[0] / grid, ys[1] / grid)


def random_detection(
    rng: np.random.Generator,
    image_id: str,
    labels: tuple[str, ...],
    grid: int | None = None,
    score_grid: int | None = None,
) -> Detection:
    if score_grid is None:
        score = float(rng.uniform(0.01, 1.0))
    else:
        score = float(rng.integers(1, score_grid + 1)) / score_grid
    return Detection(
        image_id=image_id,
        label=str(rng.choice(labels)),
        score=score,
        box=random_box(rng, grid),
    )


def random_prediction(
    rng: np.random.Generator,
    image_id: str,
    vocab: TripletVocabulary,
    grid: int = 8,
    score_grid: int = 10,
) -> RelationshipPrediction:
    triplet = sorted(vocab.triplets)[int(rng.integers(len(vocab.triplets)))]
    box1 = random_box(rng, grid)
    box2 = box1 if triplet[1] == "is" else random_box(rng, grid)
    return RelationshipPrediction(
        image_id=image_id,
        score=float(rng.integers(1, score_grid + 1)) / score_grid,
        label1=triplet[0],
        box1=box1,
        relation=triplet[1],
        label2=triplet[2],
        box2=box2,
    )


def random_gt(
    rng: np.random.Generator,
    image_id: str,
    vocab: TripletVocabulary,
    grid: int = 8,
) -> GroundTruthRelation:
    triplet = sorted(vocab.triplets)[int(rng.integers(len(vocab.triplets)))]
    box1 = random_box(rng, grid)
    box2 = box1 if triplet[1] == "is" else random_box(rng, grid)
    return GroundTruthRelation(
        image_id=image_id,
        label1=triplet[0],
        box1=box1,
        relation=triplet[1],
        label2=triplet[2],
        box2=box2,
    )
