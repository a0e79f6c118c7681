"""Candidate generation, confidence combination, and the "is" stream."""

from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import random_box, random_detection
from reference_impls import ref_generate_candidates
from vrdkit.datamodel import Detection, TripletVocabulary
from vrdkit.features import FeatureSchema, pair_features_from_boxes
from vrdkit.gbdt import BoostedModel, Objective, TrainConfig, train
from vrdkit.geometry import Box
from vrdkit.scoring import (
    IsTripletClassMap,
    combine_confidence,
    candidates_to_predictions,
    decode_is_predictions,
    ensemble_concat,
    generate_candidates,
    score_images,
)


def constant_model(vocab) -> BoostedModel:
    """A treeless model: predicts sigmoid(base)=0.5 for every pair."""
    return BoostedModel(
        base_score=0.0,
        learning_rate=0.1,
        trees=[],
        schema=FeatureSchema.for_vocabulary(vocab),
        objective=Objective(),
    )


@pytest.fixture(scope="module")
def trained_model():
    vocab = TripletVocabulary(
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
    rng = np.random.default_rng(70)
    rows, labels = [], []
    names = ("a", "b")
    for _ in range(400):
        l1, l2 = rng.choice(2), rng.choice(2)
        rel = str(rng.choice(["r1", "r2"]))
        b1, b2 = random_box(rng), random_box(rng)
        rows.append(
            pair_features_from_boxes(
                int(l1), int(l2), vocab.relation_id(rel), b1, b2
            )
        )
        labels.append(int((rel == "r1") == (b1.y_min < b2.y_min)))
    X = np.asarray(rows)
    model = train(
        X,
        np.asarray(labels),
        TrainConfig(num_rounds=10, num_leaves=8, min_samples_per_leaf=5),
        Objective(),
        FeatureSchema.for_vocabulary(vocab),
    )
    return vocab, model


def test_combine_confidence_known_values():
    assert combine_confidence(0.5, 0.9, 0.4) == pytest.approx(0.3, abs=1e-15)
    assert combine_confidence(1.0, 1.0, 1.0) == 1.0
    assert combine_confidence(0.0, 0.7, 0.7) == 0.0
    assert combine_confidence(0.8, 0.25, 0.25) == pytest.approx(0.2, abs=1e-15)


def test_combine_confidence_monotone_in_each_argument():
    rng = np.random.default_rng(71)
    for _ in range(200):
        f, c1, c2 = rng.uniform(0.01, 1.0, size=3)
        bump = float(rng.uniform(1e-6, 0.5))
        base = combine_confidence(f, c1, c2)
        assert combine_confidence(min(f + bump, 1.0), c1, c2) >= base
        assert combine_confidence(f, min(c1 + bump, 1.0), c2) >= base
        assert combine_confidence(f, c1, min(c2 + bump, 1.0)) >= base


def _random_image(rng, image_id, n=None, score_grid=4):
    n = int(rng.integers(2, 8)) if n is None else n
    return [
        random_detection(rng, image_id, ("a", "b"), grid=8, score_grid=score_grid)
        for _ in range(n)
    ]


@pytest.mark.parametrize("use_trained", [False, True])
def test_candidates_match_exhaustive_enumeration(trained_model, use_trained):
    vocab, model = trained_model
    if not use_trained:
        model = constant_model(vocab)  # every f_r ties; ordering still exact
    rng = np.random.default_rng(72)
    for case in range(60):
        dets = _random_image(rng, f"im{case}")
        top_k = int(rng.integers(1, 12))
        got = generate_candidates(dets, model, vocab, top_k=top_k)
        want = ref_generate_candidates(dets, model, vocab, top_k=top_k)
        assert len(got) == len(want)
        for cand, (i, j, rel, f_r, c_c) in zip(got, want):
            assert (cand.d1_index, cand.d2_index, cand.relation) == (i, j, rel)
            assert cand.f_r == f_r
            assert cand.c_c == c_c


def test_candidate_scores_descend_and_recompute(trained_model):
    vocab, model = trained_model
    rng = np.random.default_rng(73)
    dets = _random_image(rng, "im0", n=6)
    cands = generate_candidates(dets, model, vocab, top_k=1000)
    assert all(a.c_c >= b.c_c for a, b in zip(cands, cands[1:]))
    for c in cands:
        assert c.d1_index != c.d2_index
        assert c.relation in vocab.relations_for(c.d1.label, c.d2.label)
        assert c.c_c == combine_confidence(c.f_r, c.d1.score, c.d2.score)


def test_top_k_truncates(trained_model):
    vocab, model = trained_model
    rng = np.random.default_rng(74)
    dets = _random_image(rng, "im0", n=7)
    full = generate_candidates(dets, model, vocab, top_k=10_000)
    assert len(full) > 5
    assert generate_candidates(dets, model, vocab, top_k=5) == full[:5]


def test_max_boxes_keeps_highest_scores(trained_model):
    vocab, model = trained_model
    rng = np.random.default_rng(75)
    dets = [
        random_detection(rng, "im0", ("a", "b"), grid=8, score_grid=1000)
        for _ in range(30)
    ]
    keep = sorted(sorted(range(30), key=lambda i: (-dets[i].score, i))[:10])
    cands = generate_candidates(dets, model, vocab, max_boxes=10, top_k=10_000)
    used = {c.d1_index for c in cands} | {c.d2_index for c in cands}
    assert used <= set(keep)
    # the same pairs scored from the filtered list agree (indices remapped)
    sub = generate_candidates([dets[i] for i in keep], model, vocab, top_k=10_000)
    assert [(c.relation, c.f_r, c.c_c) for c in cands] == [
        (c.relation, c.f_r, c.c_c) for c in sub
    ]


def test_raising_detector_score_raises_combined_confidence(trained_model):
    vocab, model = trained_model
    box1, box2 = Box(0.1, 0.3, 0.1, 0.3), Box(0.5, 0.7, 0.5, 0.7)
    low = [
        Detection("im0", "a", 0.4, box1),
        Detection("im0", "b", 0.5, box2),
    ]
    high = [
        Detection("im0", "a", 0.8, box1),
        Detection("im0", "b", 0.5, box2),
    ]
    c_low = generate_candidates(low, model, vocab, top_k=100)
    c_high = generate_candidates(high, model, vocab, top_k=100)
    low_by_key = {(c.d1_index, c.d2_index, c.relation): c for c in c_low}
    assert low_by_key
    for c in c_high:
        other = low_by_key[(c.d1_index, c.d2_index, c.relation)]
        assert c.f_r == other.f_r  # detector scores are not features
        assert c.c_c > other.c_c
        assert c.c_c == pytest.approx(

            other.c_c * math.sqrt(0.8 / 0.4), rel=1e-12
        )


def test_degenerate_inputs(trained_model):
    vocab, model = trained_model
    assert generate_candidates([], model, vocab) == []
    only = [Detection("im0", "a", 0.9, Box(0, 1, 0, 1))]
    assert generate_candidates(only, model, vocab) == []
    mixed = [
        Detection("im0", "a", 0.9, Box(0, 1, 0, 1)),
        Detection("im1", "b", 0.8, Box(0, 1, 0, 1)),
    ]
    with pytest.raises(ValueError):
        generate_candidates(mixed, model, vocab)
    with pytest.raises(ValueError):
        generate_candidates(only, model, vocab, top_k=0)
    with pytest.raises(ValueError):
        generate_candidates(only, model, vocab, max_boxes=0)


def test_unscorable_labels_yield_no_candidates(trained_model):
    vocab, model = trained_model
    dets = [
        Detection("im0", "shiny", 0.9, Box(0, 0.5, 0, 0.5)),
        Detection("im0", "shiny", 0.8, Box(0.2, 0.7, 0.2, 0.7)),
    ]
    # "shiny" appears only as an attribute; no pair relation admits it
    assert generate_candidates(dets, model, vocab) == []


def test_score_images_thread_count_does_not_change_results(trained_model):
    vocab, model = trained_model
    rng = np.random.default_rng(76)
    dets_by_image = {f"im{k}": _random_image(rng, f"im{k}") for k in range(12)}
    serial = score_images(dets_by_image, model, vocab, threads=1)
    threaded = score_images(dets_by_image, model, vocab, threads=4)
    assert list(serial) == sorted(dets_by_image)
    assert serial == threaded
    with pytest.raises(ValueError):
        score_images(dets_by_image, model, vocab, threads=0)


def test_candidates_to_predictions_copies_fields(trained_model):
    vocab, model = trained_model
    rng = np.random.default_rng(77)
    dets = _random_image(rng, "im0", n=5)
    cands = generate_candidates(dets, model, vocab, top_k=20)
    preds = candidates_to_predictions(cands)
    for c, p in zip(cands, preds):
        assert p.image_id == c.image_id
        assert p.score == c.c_c
        assert (p.label1, p.relation, p.label2) == (c.d1.label, c.relation, c.d2.label)
        assert p.box1 == c.d1.box and p.box2 == c.d2.box


# ------------------------------------------------------------- "is" stream


def test_is_class_map_round_trip(small_vocab):
    cmap = IsTripletClassMap.from_vocabulary(small_vocab)
    assert len(cmap) == 2
    assert cmap.class_names == ("a|is|shiny", "b|is|shiny")
    assert cmap.class_name(("a", "is", "shiny")) == "a|is|shiny"
    assert cmap.triplet("b|is|shiny") == ("b", "is", "shiny")
    assert "a|is|shiny" in cmap
    assert "c|is|shiny" not in cmap
    with pytest.raises(KeyError):
        cmap.triplet("nope")
    with pytest.raises(KeyError):
        cmap.class_name(("a", "is", "dull"))


def test_is_class_map_rejects_separator_in_names():
    with pytest.raises(ValueError):
        IsTripletClassMap({("a|b", "is", "shiny")})


def test_decode_is_predictions_preserves_order_and_boxes(small_vocab):
    cmap = IsTripletClassMap.from_vocabulary(small_vocab)
    dets = [
        Detection("im0", "b|is|shiny", 0.7, Box(0.1, 0.4, 0.2, 0.5)),
        Detection("im0", "a|is|shiny", 0.9, Box(0.5, 0.8, 0.5, 0.9)),
    ]
    preds = decode_is_predictions(dets, cmap)
    assert [p.label1 for p in preds] == ["b", "a"]  # input order, not score order
    for det, p in zip(dets, preds):
        assert p.relation == "is"
        assert p.box1 == det.box and p.box2 == det.box
        assert p.score == det.score
        assert p.label2 == "shiny"


def test_decode_is_predictions_rejects_unknown_class(small_vocab):
    cmap = IsTripletClassMap.from_vocabulary(small_vocab)
    dets = [Detection("im0", "mystery", 0.7, Box(0, 1, 0, 1))]
    with pytest.raises(KeyError):
        decode_is_predictions(dets, cmap)


def test_ensemble_concat_appends_without_rescoring(small_vocab, trained_model):
    vocab, model = trained_model
    rng = np.random.default_rng(78)
    dets = _random_image(rng, "im0", n=4)
    pair_preds = candidates_to_predictions(
        generate_candidates(dets, model, vocab, top_k=10)
    )
    cmap = IsTripletClassMap.from_vocabulary(small_vocab)
    is_preds = decode_is_predictions(
        [Detection("im0", "a|is|shiny", 0.6, Box(0, 0.5, 0, 0.5))], cmap
    )
    merged = ensemble_concat(pair_preds, is_preds)
    assert merged == pair_preds + is_preds
    assert ensemble_concat([], []) == []
