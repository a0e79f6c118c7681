"""Vocabulary, detection/relation records, and CSV ingestion/emission.

File schemas (all CSV, UTF-8, LF newlines, header row required):

* vocabulary:  LabelName1,RelationshipLabel,LabelName2
* detections:  ImageID,LabelName,Score,XMin,XMax,YMin,YMax
* relations / predictions:
    ImageID,Score,LabelName1,XMin1,XMax1,YMin1,YMax1,RelationshipLabel,
    LabelName2,XMin2,XMax2,YMin2,YMax2
  Ground truth uses Score = 1. Attribute ("is") records store the single
  object box in both box slots.

Scores are serialized with 6 decimal digits (round-half-even); coordinates
are serialized with repr so they round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Iterator, Sequence

from .geometry import Box

IS_RELATION = "is"

VOCABULARY_HEADER = ["LabelName1", "RelationshipLabel", "LabelName2"]
DETECTIONS_HEADER = ["ImageID", "LabelName", "Score", "XMin", "XMax", "YMin", "YMax"]
RELATIONS_HEADER = [
    "ImageID",
    "Score",
    "LabelName1",
    "XMin1",
    "XMax1",
    "YMin1",
    "YMax1",
    "RelationshipLabel",
    "LabelName2",
    "XMin2",
    "XMax2",
    "YMin2",
    "YMax2",
]


class DataError(ValueError):
    """Malformed input data; carries the offending path and line number."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)


def format_score(score: float) -> str:
    """Canonical 6-decimal score serialization (round-half-even)."""
    return format(score, ".6f")


@dataclass(frozen=True)
class Detection:
    """One detector output box, the interface to the upstream neural model."""

    image_id: str
    label: str
    score: float
    box: Box


@dataclass(frozen=True)
class GroundTruthRelation:
    image_id: str
    label1: str
    box1: Box
    relation: str
    label2: str
    box2: Box

    @property
    def triplet(self) -> tuple[str, str, str]:
        return (self.label1, self.relation, self.label2)


@dataclass(frozen=True)
class RelationshipPrediction:
    image_id: str
    score: float
    label1: str
    box1: Box
    relation: str
    label2: str
    box2: Box

    @property
    def triplet(self) -> tuple[str, str, str]:
        return (self.label1, self.relation, self.label2)


class TripletVocabulary:
    """The set of valid (label1, relation, label2) triplets.

    Class and relation names get dense integer ids (sorted-name order).
    Triplets whose relation is "is" form the attribute subset; the rest
    are ordered object-pair triplets.
    """

    def __init__(self, triplets: Iterable[tuple[str, str, str]]):
        triplet_list = list(triplets)
        seen = set()
        for t in triplet_list:
            if t in seen:
                raise ValueError(f"duplicate triplet {t!r}")
            seen.add(t)
        if not triplet_list:
            raise ValueError("vocabulary has no triplets")

        classes = sorted({t[0] for t in triplet_list} | {t[2] for t in triplet_list})
        relations = sorted({t[1] for t in triplet_list})
        self._class_to_id = {name: i for i, name in enumerate(classes)}
        self._relation_to_id = {name: i for i, name in enumerate(relations)}
        self._classes = tuple(classes)
        self._relations = tuple(relations)

        self.triplets = frozenset(triplet_list)
        self.is_triplets = frozenset(t for t in triplet_list if t[1] == IS_RELATION)
        self.pair_triplets = self.triplets - self.is_triplets

        # (label1, label2) -> relation names, sorted by relation id
        by_pair: dict[tuple[str, str], list[str]] = {}
        for l1, rel, l2 in self.pair_triplets:
            by_pair.setdefault((l1, l2), []).append(rel)
        self._relations_by_pair = {
            pair: tuple(sorted(rels, key=self._relation_to_id.__getitem__))
            for pair, rels in by_pair.items()
        }

    # -- sizes ---------------------------------------------------------
    @property
    def num_classes(self) -> int:
        return len(self._classes)

    @property
    def num_relations(self) -> int:
        return len(self._relations)

    @property
    def class_names(self) -> tuple[str, ...]:
        return self._classes

    @property
    def relation_names(self) -> tuple[str, ...]:
        return self._relations

    # -- lookups -------------------------------------------------------
    def class_id(self, name: str) -> int:
        try:
            return self._class_to_id[name]
        except KeyError:
            raise KeyError(f"unknown class label {name!r}") from None

    def relation_id(self, name: str) -> int:
        try:
            return self._relation_to_id[name]
        except KeyError:
            raise KeyError(f"unknown relationship label {name!r}") from None

    def class_name(self, class_id: int) -> str:
        return self._classes[class_id]

    def relation_name(self, relation_id: int) -> str:
        return self._relations[relation_id]

    def is_known_class(self, name: str) -> bool:
        return name in self._class_to_id

    def __contains__(self, triplet: tuple[str, str, str]) -> bool:
        return triplet in self.triplets

    def relations_for(self, label1: str, label2: str) -> tuple[str, ...]:
        """Non-"is" relations r with (label1, r, label2) in the vocabulary."""
        return self._relations_by_pair.get((label1, label2), ())

    @property
    def object_classes(self) -> frozenset[str]:
        """Classes that appear as a subject or as a pair-relation object."""
        names = {t[0] for t in self.triplets}
        names |= {t[2] for t in self.pair_triplets}
        return frozenset(names)

    @property
    def attribute_classes(self) -> frozenset[str]:
        return frozenset(t[2] for t in self.is_triplets)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


def _open_rows(path: str | os.PathLike, expected_header: list[str]) -> Iterator[tuple[int, list[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("missing header row", str(path), 1) from None
        if header != expected_header:
            raise DataError(
                f"unexpected header {header!r}, want {expected_header!r}", str(path), 1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            yield lineno, row


def _parse_float(text: str, what: str, path: str, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(f"{what} is not a number: {text!r}", path, line) from None


def _parse_score(text: str, path: str, line: int) -> float:
    score = _parse_float(text, "score", path, line)
    if not 0.0 <= score <= 1.0:
        raise DataError(f"score {score} outside [0, 1]", path, line)
    return score


def _parse_box(cells: Sequence[str], path: str, line: int) -> Box:
    x_min, x_max, y_min, y_max = (
        _parse_float(c, "coordinate", path, line) for c in cells
    )
    box = Box(x_min, x_max, y_min, y_max)
    if not box.is_valid():
        raise DataError(f"invalid box coordinates {tuple(box)!r}", path, line)
    return box


def load_vocabulary(path: str | os.PathLike) -> TripletVocabulary:
    """Load a triplet vocabulary CSV; duplicates and short rows are errors."""
    triplets = []
    seen: set[tuple[str, str, str]] = set()
    for lineno, row in _open_rows(path, VOCABULARY_HEADER):
        if len(row) != 3 or not all(row):
            raise DataError(f"malformed vocabulary row {row!r}", str(path), lineno)
        triplet = (row[0], row[1], row[2])
        if triplet in seen:
            raise DataError(f"duplicate triplet {triplet!r}", str(path), lineno)
        seen.add(triplet)
        triplets.append(triplet)
    if not triplets:
        raise DataError("vocabulary file has no triplets", str(path))
    return TripletVocabulary(triplets)


def challenge_vocabulary() -> TripletVocabulary:
    """The bundled full-scale vocabulary.

    Matches the challenge's published statistics — 287 pair + 42 "is"
    triplets over 62 classes and 10 relationships — with stand-in label
    names (the statistics, not the names, are load-bearing).
    """
    source = resources.files("vrdkit").joinpath("data/challenge_vocabulary.csv")
    with resources.as_file(source) as path:
        return load_vocabulary(path)


def parse_detections(
    path: str | os.PathLike,
    known_labels: Iterable[str] | None = None,
    skip_bad_rows: bool = False,
) -> list[Detection]:
    """Parse a detections CSV, preserving input order.

    known_labels, when given, makes unrecognized LabelName values per-row
    errors. skip_bad_rows downgrades row errors to silent skips.
    """
    labels = frozenset(known_labels) if known_labels is not None else None
    out: list[Detection] = []
    for lineno, row in _open_rows(path, DETECTIONS_HEADER):
        try:
            if len(row) != 7:
                raise DataError(f"expected 7 columns, got {len(row)}", str(path), lineno)
            image_id, label = row[0], row[1]
            if labels is not None and label not in labels:
                raise DataError(f"unknown label {label!r}", str(path), lineno)
            score = _parse_score(row[2], str(path), lineno)
            box = _parse_box(row[3:7], str(path), lineno)
        except DataError:
            if skip_bad_rows:
                continue
            raise
        out.append(Detection(image_id, label, score, box))
    return out


def _parse_relation_row(
    row: list[str], vocab: TripletVocabulary | None, path: str, lineno: int
) -> tuple[str, float, str, Box, str, str, Box]:
    if len(row) != 13:
        raise DataError(f"expected 13 columns, got {len(row)}", path, lineno)
    image_id = row[0]
    score = _parse_score(row[1], path, lineno)
    label1, relation, label2 = row[2], row[7], row[8]
    box1 = _parse_box(row[3:7], path, lineno)
    box2 = _parse_box(row[9:13], path, lineno)
    if vocab is not None and (label1, relation, label2) not in vocab:
        raise DataError(
            f"triplet {(label1, relation, label2)!r} not in vocabulary", path, lineno
        )
    if relation == IS_RELATION and box2 != box1:
        raise DataError('"is" record must store the same box in both slots', path, lineno)
    return image_id, score, label1, box1, relation, label2, box2


def parse_relations(
    path: str | os.PathLike,
    vocab: TripletVocabulary | None = None,
    skip_bad_rows: bool = False,
) -> list[GroundTruthRelation]:
    """Parse ground-truth relations; the Score column must be 1."""
    out: list[GroundTruthRelation] = []
    for lineno, row in _open_rows(path, RELATIONS_HEADER):
        try:
            image_id, score, label1, box1, relation, label2, box2 = _parse_relation_row(
                row, vocab, str(path), lineno
            )
            if score != 1.0:
                raise DataError(f"ground-truth score must be 1, got {row[1]}", str(path), lineno)
        except DataError:
            if skip_bad_rows:
                continue
            raise
        out.append(GroundTruthRelation(image_id, label1, box1, relation, label2, box2))
    return out


def parse_predictions(
    path: str | os.PathLike,
    vocab: TripletVocabulary | None = None,
    skip_bad_rows: bool = False,
) -> list[RelationshipPrediction]:
    """Parse a predictions file (relations schema with free scores)."""
    out: list[RelationshipPrediction] = []
    for lineno, row in _open_rows(path, RELATIONS_HEADER):
        try:
            parsed = _parse_relation_row(row, vocab, str(path), lineno)
        except DataError:
            if skip_bad_rows:
                continue
            raise
        image_id, score, label1, box1, relation, label2, box2 = parsed
        out.append(
            RelationshipPrediction(image_id, score, label1, box1, relation, label2, box2)
        )
    return out


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------


def _writer(fh: io.TextIOBase) -> csv.writer:
    return csv.writer(fh, lineterminator="\n")


def _box_cells(box: Box) -> list[str]:
    return [repr(float(c)) for c in box]


def write_detections(dets: Iterable[Detection], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(DETECTIONS_HEADER)
        for d in dets:
            w.writerow([d.image_id, d.label, format_score(d.score)] + _box_cells(d.box))


def _relation_cells(
    image_id: str, score: str, label1: str, box1: Box, relation: str, label2: str, box2: Box
) -> list[str]:
    return (
        [image_id, score, label1]
        + _box_cells(box1)
        + [relation, label2]
        + _box_cells(box2)
    )


def write_relations(gts: Iterable[GroundTruthRelation], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(RELATIONS_HEADER)
        for g in gts:
            w.writerow(
                _relation_cells(g.image_id, "1.000000", g.label1, g.box1, g.relation, g.label2, g.box2)
            )


def write_predictions(preds: Iterable[RelationshipPrediction], path: str | os.PathLike) -> None:
    """Write predictions; parsing the written file reproduces the input

    (scores are canonicalized to the 6-decimal grid at write time).
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(RELATIONS_HEADER)
        for p in preds:
            w.writerow(
                _relation_cells(
                    p.image_id, format_score(p.score), p.label1, p.box1, p.relation, p.label2, p.box2
                )
            )


def write_vocabulary(triplets: Iterable[tuple[str, str, str]], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(VOCABULARY_HEADER)
        for l1, rel, l2 in triplets:
            w.writerow([l1, rel, l2])


def group_by_image(records: Iterable) -> dict[str, list]:
    """Group records by image_id, preserving first-appearance image order
    and input order within each image. Works for any record with image_id.
    """
    grouped: dict[str, list] = {}
    for rec in records:
        grouped.setdefault(rec.image_id, []).append(rec)
    return grouped
