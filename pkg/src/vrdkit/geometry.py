"""Axis-aligned box arithmetic on normalized image coordinates.

All boxes are unit-square fractions in (x_min, x_max, y_min, y_max) order,
matching the column order of the detection CSV files. Every function here
is pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from typing import NamedTuple


class Box(NamedTuple):
    """Axis-aligned box, coordinates normalized to [0, 1].

    Degenerate (zero-area) boxes are valid values.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def is_valid(self) -> bool:
        return (
            0.0 <= self.x_min <= self.x_max <= 1.0
            and 0.0 <= self.y_min <= self.y_max <= 1.0
        )


def validate_box(b: Box) -> None:
    """Raise ValueError unless b satisfies the box invariants."""
    if not b.is_valid():
        raise ValueError(f"invalid box coordinates: {tuple(b)!r}")


def area(b: Box) -> float:
    """Area of the box, in [0, 1] for valid boxes."""
    return (b.x_max - b.x_min) * (b.y_max - b.y_min)


def intersection_area(a: Box, b: Box) -> float:
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def iou(a: Box, b: Box) -> float:
    """Intersection-over-union of two boxes.

    Returns 0.0 when the union has zero area, so degenerate boxes never
    produce NaN downstream.
    """
    inter = intersection_area(a, b)
    union = area(a) + area(b) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def enclose(a: Box, b: Box) -> Box:
    """Smallest box containing both inputs."""
    return Box(
        min(a.x_min, b.x_min),
        max(a.x_max, b.x_max),
        min(a.y_min, b.y_min),
        max(a.y_max, b.y_max),
    )


def center(b: Box) -> tuple[float, float]:
    return ((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0)


def center_distance(a: Box, b: Box) -> float:
    """Euclidean distance between box centers."""
    ax, ay = center(a)
    bx, by = center(b)
    dx = ax - bx
    dy = ay - by
    return math.sqrt(dx * dx + dy * dy)
