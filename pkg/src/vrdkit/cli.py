"""Command-line interface: the pipeline as composable batch subcommands.

Subcommands: gen-synth, extract-features, train, score, evaluate, e2e.
Every run writes a JSON manifest next to its primary output recording the
subcommand, resolved configuration, input/output paths, seed, toolkit
version, and wall-clock duration; re-running with the manifest's values
reproduces the outputs byte-for-byte (manifests themselves contain the
duration and are the one non-reproducible artifact).

Flag precedence is CLI flag > --config JSON file > built-in default. All
randomness flows from one --seed, split per stage by hashing.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Errors print a single machine-parseable line to stderr:
``vrdkit: error: <usage|data|internal>: <message>``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .datamodel import (
    DataError,
    TripletVocabulary,
    group_by_image,
    load_vocabulary,
    parse_detections,
    parse_predictions,
    parse_relations,
    write_detections,
    write_predictions,
    write_relations,
    write_vocabulary,
)
from .features import FeatureSchema
from .gbdt import (
    ModelFormatError,
    Objective,
    TrainConfig,
    load_model,
    save_model,
    train,
)
from .metrics import AP_GROUPINGS, EvalConfig, EvalReport, evaluate
from .scoring import (
    DEFAULT_MAX_BOXES,
    DEFAULT_TOP_K,
    IsTripletClassMap,
    candidates_to_predictions,
    decode_is_predictions,
    ensemble_concat,
    score_images,
)
from .synth import DetectorNoise, SynthConfig, default_vocabulary, generate
from .trainset import (
    DEFAULT_IOU_THRESHOLD,
    DEFAULT_NEG_RATIO,
    build_training_set,
    read_training_set,
    write_training_set,
)

EXIT_SUCCESS = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

OBJECTIVE_KINDS = {"ce": "cross_entropy", "focal": "focal"}

DEFAULT_E2E_TRAIN_IMAGES = 200
DEFAULT_E2E_TEST_IMAGES = 50


class UsageError(Exception):
    """Invalid flag or config value; maps to exit code 1."""


def stage_seed(seed: int, stage: str) -> int:
    """Deterministic per-stage seed split from the one top-level seed."""
    digest = hashlib.sha256(f"{seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"vrdkit: error: usage: {message}\n")


class _Resolver:
    """Flag > config-file > default resolution, recording resolved values."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.resolved: dict = {}
        path = getattr(args, "config", None)
        if path is None:
            self.file: dict = {}
        else:
            try:
                with open(path, "r", encoding="utf-8") as fh:
                    doc = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"bad --config file {path}: {exc}") from None
            if not isinstance(doc, dict):
                raise UsageError(f"--config file {path} must hold a JSON object")
            self.file = doc

    def get(self, name: str, default, cast=None):
        value = getattr(self.args, name, None)
        if value is None:
            value = self.file.get(name, default)
        if cast is not None and value is not None:
            try:
                value = cast(value)
            except (TypeError, ValueError):
                raise UsageError(f"bad value for {name}: {value!r}") from None
        self.resolved[name] = value
        return value


def _write_manifest(
    path: Path,
    subcommand: str,
    seed: int | None,
    threads: int,
    config: dict,
    inputs: dict,
    outputs: dict,
    started: float,
) -> None:
    doc = {
        "subcommand": subcommand,
        "version": __version__,
        "seed": seed,
        "threads": threads,
        "config": config,
        "inputs": {k: str(v) for k, v in inputs.items()},
        "outputs": {k: str(v) for k, v in outputs.items()},
        "duration_seconds": round(time.monotonic() - started, 6),
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_vocab_arg(path: str | None) -> tuple[TripletVocabulary, str]:
    if path is None:
        return default_vocabulary(), "builtin"
    return load_vocabulary(path), path


# ---------------------------------------------------------------------------
# Stage functions shared by the subcommands and e2e
# ---------------------------------------------------------------------------


def _synth_config(res: _Resolver, seed: int, num_images_key: str, default_images: int) -> SynthConfig:
    try:
        detector = DetectorNoise(
            jitter_std=res.get("jitter_std", 0.01, float),
            score_a=res.get("score_a", 8.0, float),
            score_b=res.get("score_b", 2.0, float),
        )
        return SynthConfig(
            num_images=res.get(num_images_key, default_images, int),
            min_boxes=res.get("min_boxes", 2, int),
            max_boxes=res.get("max_boxes_per_image", 6, int),
            min_box_size=res.get("min_box_size", 0.08, float),
            max_box_size=res.get("max_box_size", 0.3, float),
            rule_noise=res.get("rule_noise", 0.02, float),
            attribute_rate=res.get("attribute_rate", 0.5, float),
            class_skew=res.get("class_skew", 0.0, float),
            detector=detector,
            seed=seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _train_config(res: _Resolver, seed: int) -> TrainConfig:
    try:
        return TrainConfig(
            num_leaves=res.get("num_leaves", 31, int),
            learning_rate=res.get("learning_rate", 0.05, float),
            feature_fraction=res.get("feature_fraction", 0.9, float),
            bagging_fraction=res.get("bagging_fraction", 0.8, float),
            bagging_freq=res.get("bagging_freq", 5, int),
            num_rounds=res.get("num_rounds", 100, int),
            min_samples_per_leaf=res.get("min_samples_per_leaf", 20, int),
            max_bins=res.get("max_bins", 255, int),
            seed=seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _objective(res: _Resolver) -> Objective:
    kind_flag = res.get("objective", "ce")
    if kind_flag not in OBJECTIVE_KINDS:
        raise UsageError(f"objective must be one of {sorted(OBJECTIVE_KINDS)}")
    try:
        return Objective(
            kind=OBJECTIVE_KINDS[kind_flag],
            gamma=res.get("gamma", 2.0, float),
            alpha=res.get("alpha", 0.25, float),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _eval_config(res: _Resolver) -> EvalConfig:
    weights = res.get("weights", (0.4, 0.2, 0.4))
    grouping = res.get("ap_grouping", "per_relation")
    try:
        return EvalConfig(
            iou_threshold=res.get("iou_threshold", DEFAULT_IOU_THRESHOLD, float),
            weights=tuple(float(w) for w in weights),
            recall_n=res.get("recall_n", 100, int),
            ap_grouping=grouping,
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _gen_stage(out_dir: Path, cfg: SynthConfig, vocab: TripletVocabulary) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    result = generate(cfg, vocab)
    outputs = {
        "relations_gt": out_dir / "relations_gt.csv",
        "detections": out_dir / "detections.csv",
        "is_detections": out_dir / "is_detections.csv",
    }
    write_relations(result.gt_relations, outputs["relations_gt"])
    write_detections(result.object_detections, outputs["detections"])
    write_detections(result.attribute_detections, outputs["is_detections"])
    outputs["counts"] = (
        f"{cfg.num_images} images, {len(result.gt_relations)} gt, "
        f"{len(result.object_detections)} detections, "
        f"{len(result.attribute_detections)} attribute detections"
    )
    return outputs


def _extract_stage(
    detections_path,
    gt_path,
    vocab: TripletVocabulary,
    output,
    iou_threshold: float,
    neg_ratio: float,
    max_boxes: int,
    seed: int,
):
    dets = parse_detections(detections_path, known_labels=vocab.class_names)
    gts = parse_relations(gt_path, vocab=vocab)
    ts = build_training_set(
        group_by_image(dets),
        group_by_image(gts),
        vocab,
        iou_threshold=iou_threshold,
        neg_ratio=neg_ratio,
        seed=seed,
        max_boxes=max_boxes,
    )
    write_training_set(ts.X, ts.y, output)
    return ts


def _train_stage(features_path, vocab, output, config: TrainConfig, objective: Objective):
    X, y = read_training_set(features_path)
    schema = FeatureSchema.for_vocabulary(vocab)
    model = train(X, y, config, objective, schema)
    save_model(model, output)
    return model


def _score_stage(
    model_path,
    detections_path,
    is_detections_path,
    vocab: TripletVocabulary,
    output,
    max_boxes: int,
    top_k: int,
    threads: int,
) -> int:
    model = load_model(model_path)
    if model.schema != FeatureSchema.for_vocabulary(vocab):
        raise DataError(
            "model feature schema does not match the vocabulary "
            f"(model {model.schema.categorical_sizes}, "
            f"vocabulary {FeatureSchema.for_vocabulary(vocab).categorical_sizes})",
            path=str(model_path),
        )
    dets = parse_detections(detections_path, known_labels=vocab.class_names)
    by_image = score_images(
        group_by_image(dets), model, vocab, max_boxes=max_boxes, top_k=top_k, threads=threads
    )
    pair_preds = []
    for image_id in sorted(by_image):
        pair_preds.extend(candidates_to_predictions(by_image[image_id]))
    is_preds = []
    if is_detections_path is not None:
        class_map = IsTripletClassMap.from_vocabulary(vocab)
        is_dets = parse_detections(is_detections_path, known_labels=class_map.class_names)
        is_preds = decode_is_predictions(is_dets, class_map)
    preds = ensemble_concat(pair_preds, is_preds)
    write_predictions(preds, output)
    return len(preds)


def _evaluate_stage(predictions_path, gt_path, vocab, cfg: EvalConfig) -> EvalReport:
    preds = parse_predictions(predictions_path, vocab=vocab)
    gts = parse_relations(gt_path, vocab=vocab)
    return evaluate(preds, gts, cfg)


def _print_report(report: EvalReport) -> None:
    print("metric        value")
    print(f"map_rel       {report.map_rel:.6f}")
    print(f"recall_at_n   {report.recall_at_n:.6f}")
    print(f"map_phrase    {report.map_phrase:.6f}")
    print(f"final_score   {report.final_score:.6f}")
    print(
        f"map_rel={report.map_rel:.6f} recall_at_n={report.recall_at_n:.6f} "
        f"map_phrase={report.map_phrase:.6f} final_score={report.final_score:.6f}"
    )


def _write_report(report: EvalReport, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_gen_synth(args: argparse.Namespace) -> int:
    started = time.monotonic()
    res = _Resolver(args)
    seed = res.get("seed", 0, int)
    cfg = _synth_config(res, seed, "num_images", 100)
    vocab, vocab_src = _load_vocab_arg(args.vocab)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab_out = out_dir / "vocabulary.csv"
    write_vocabulary(sorted(vocab.triplets), vocab_out)
    outputs = _gen_stage(out_dir, cfg, vocab)
    counts = outputs.pop("counts")
    outputs["vocabulary"] = vocab_out

    _write_manifest(
        out_dir / "manifest.json",
        "gen-synth",
        seed,
        1,
        res.resolved,
        {"vocab": vocab_src},
        outputs,
        started,
    )
    print(f"gen-synth: {counts} -> {out_dir}")
    return EXIT_SUCCESS


def cmd_extract_features(args: argparse.Namespace) -> int:
    started = time.monotonic()
    res = _Resolver(args)
    seed = res.get("seed", 0, int)
    iou_threshold = res.get("iou_threshold", DEFAULT_IOU_THRESHOLD, float)
    neg_ratio = res.get("neg_ratio", DEFAULT_NEG_RATIO, float)
    max_boxes = res.get("max_boxes", DEFAULT_MAX_BOXES, int)

    vocab = load_vocabulary(args.vocab)
    ts = _extract_stage(
        args.detections, args.gt, vocab, args.output,
        iou_threshold, neg_ratio, max_boxes, seed,
    )
    _write_manifest(
        Path(f"{args.output}.manifest.json"),
        "extract-features",
        seed,
        1,
        res.resolved,
        {"detections": args.detections, "gt": args.gt, "vocab": args.vocab},
        {"features": args.output},
        started,
    )
    print(
        f"extract-features: {ts.num_candidates} candidates -> "
        f"{ts.num_positives} positives + {ts.num_negatives_kept} negatives -> {args.output}"
    )
    return EXIT_SUCCESS


def cmd_train(args: argparse.Namespace) -> int:
    started = time.monotonic()
    res = _Resolver(args)
    seed = res.get("seed", 0, int)
    config = _train_config(res, seed)
    objective = _objective(res)

    vocab = load_vocabulary(args.vocab)
    model = _train_stage(args.features, vocab, args.output, config, objective)
    _write_manifest(
        Path(f"{args.output}.manifest.json"),
        "train",
        seed,
        1,
        res.resolved,
        {"features": args.features, "vocab": args.vocab},
        {"model": args.output},
        started,
    )
    losses = model.train_info.get("round_losses", [])
    tail = f", final loss {losses[-1]:.6f}" if losses else " (degenerate single-class)"
    print(f"train: {model.num_trees} trees{tail} -> {args.output}")
    return EXIT_SUCCESS


def cmd_score(args: argparse.Namespace) -> int:
    started = time.monotonic()
    res = _Resolver(args)
    max_boxes = res.get("max_boxes", DEFAULT_MAX_BOXES, int)
    top_k = res.get("top_k", DEFAULT_TOP_K, int)
    threads = res.get("threads", 1, int)
    if max_boxes < 1 or top_k < 1 or threads < 1:
        raise UsageError("max_boxes, top_k, and threads must be >= 1")

    vocab = load_vocabulary(args.vocab)
    count = _score_stage(
        args.model, args.detections, args.is_detections, vocab,
        args.output, max_boxes, top_k, threads,
    )
    _write_manifest(
        Path(f"{args.output}.manifest.json"),
        "score",
        None,
        threads,
        res.resolved,
        {
            "model": args.model,
            "detections": args.detections,
            "is_detections": args.is_detections or "",
            "vocab": args.vocab,
        },
        {"predictions": args.output},
        started,
    )
    print(f"score: {count} predictions -> {args.output}")
    return EXIT_SUCCESS


def cmd_evaluate(args: argparse.Namespace) -> int:
    started = time.monotonic()
    res = _Resolver(args)
    cfg = _eval_config(res)
    vocab = load_vocabulary(args.vocab) if args.vocab else None
    report = _evaluate_stage(args.predictions, args.gt, vocab, cfg)
    _print_report(report)
    if args.output:
        _write_report(report, Path(args.output))
        _write_manifest(
            Path(f"{args.output}.manifest.json"),
            "evaluate",
            None,
            1,
            res.resolved,
            {"predictions": args.predictions, "gt": args.gt, "vocab": args.vocab or ""},
            {"report": args.output},
            started,
        )
    return EXIT_SUCCESS


def cmd_e2e(args: argparse.Namespace) -> int:
    started = time.monotonic()
    res = _Resolver(args)
    seed = res.get("seed", 0, int)
    threads = res.get("threads", 1, int)
    if threads < 1:
        raise UsageError("threads must be >= 1")
    train_cfg = _train_config(res, stage_seed(seed, "train"))
    objective = _objective(res)
    eval_cfg = _eval_config(res)
    iou_threshold = res.get("extract_iou_threshold", DEFAULT_IOU_THRESHOLD, float)
    neg_ratio = res.get("neg_ratio", DEFAULT_NEG_RATIO, float)
    max_boxes = res.get("max_boxes", DEFAULT_MAX_BOXES, int)
    top_k = res.get("top_k", DEFAULT_TOP_K, int)
    if max_boxes < 1 or top_k < 1:
        raise UsageError("max_boxes and top_k must be >= 1")
    gen_train_cfg = _synth_config(
        res, stage_seed(seed, "gen-train"), "train_images", DEFAULT_E2E_TRAIN_IMAGES
    )
    gen_test_cfg = _synth_config(
        res, stage_seed(seed, "gen-test"), "test_images", DEFAULT_E2E_TEST_IMAGES
    )

    vocab, vocab_src = _load_vocab_arg(args.vocab)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab_path = out_dir / "vocabulary.csv"
    write_vocabulary(sorted(vocab.triplets), vocab_path)

    train_dir = out_dir / "train"
    test_dir = out_dir / "test"
    _gen_stage(train_dir, gen_train_cfg, vocab)
    _gen_stage(test_dir, gen_test_cfg, vocab)

    features_path = out_dir / "features.csv"
    _extract_stage(
        train_dir / "detections.csv",
        train_dir / "relations_gt.csv",
        vocab,
        features_path,
        iou_threshold,
        neg_ratio,
        max_boxes,
        stage_seed(seed, "extract"),
    )

    model_path = out_dir / "model.json"
    _train_stage(features_path, vocab, model_path, train_cfg, objective)

    predictions_path = out_dir / "predictions.csv"
    _score_stage(
        model_path,
        test_dir / "detections.csv",
        test_dir / "is_detections.csv",
        vocab,
        predictions_path,
        max_boxes,
        top_k,
        threads,
    )

    report_path = out_dir / "report.json"
    report = _evaluate_stage(
        predictions_path, test_dir / "relations_gt.csv", vocab, eval_cfg
    )
    _write_report(report, report_path)
    _print_report(report)

    _write_manifest(
        out_dir / "manifest.json",
        "e2e",
        seed,
        threads,
        res.resolved,
        {"vocab": vocab_src},
        {
            "vocabulary": vocab_path,
            "train_dir": train_dir,
            "test_dir": test_dir,
            "features": features_path,
            "model": model_path,
            "predictions": predictions_path,
            "report": report_path,
        },
        started,
    )
    return EXIT_SUCCESS


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_synth_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--min-boxes", type=int)
    p.add_argument("--max-boxes-per-image", type=int)
    p.add_argument("--min-box-size", type=float)
    p.add_argument("--max-box-size", type=float)
    p.add_argument("--rule-noise", type=float)
    p.add_argument("--attribute-rate", type=float)
    p.add_argument("--class-skew", type=float)
    p.add_argument("--jitter-std", type=float)
    p.add_argument("--score-a", type=float)
    p.add_argument("--score-b", type=float)


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--objective", choices=sorted(OBJECTIVE_KINDS))
    p.add_argument("--gamma", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--num-leaves", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--feature-fraction", type=float)
    p.add_argument("--bagging-fraction", type=float)
    p.add_argument("--bagging-freq", type=int)
    p.add_argument("--num-rounds", type=int)
    p.add_argument("--min-samples-per-leaf", type=int)
    p.add_argument("--max-bins", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vrdkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"vrdkit {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="JSON file of default flag values")
        p.add_argument("--seed", type=int)
        return p

    p = add("gen-synth", cmd_gen_synth, "generate a synthetic dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--vocab", help="vocabulary CSV (default: built-in small vocabulary)")
    p.add_argument("--num-images", type=int)
    _add_synth_flags(p)

    p = add("extract-features", cmd_extract_features, "build the labeled training set")
    p.add_argument("--detections", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--iou-threshold", type=float)
    p.add_argument("--neg-ratio", type=float)
    p.add_argument("--max-boxes", type=int)

    p = add("train", cmd_train, "train the relationship classifier")
    p.add_argument("--features", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--output", required=True)
    _add_train_flags(p)

    p = add("score", cmd_score, "score detections into relationship predictions")
    p.add_argument("--model", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--is-detections")
    p.add_argument("--vocab", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--max-boxes", type=int)
    p.add_argument("--top-k", type=int)
    p.add_argument("--threads", type=int)

    p = add("evaluate", cmd_evaluate, "evaluate predictions against ground truth")
    p.add_argument("--predictions", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--vocab")
    p.add_argument("--output", help="also write the report as JSON")
    p.add_argument("--iou-threshold", type=float)
    p.add_argument("--recall-n", type=int)
    p.add_argument("--ap-grouping", choices=AP_GROUPINGS)
    p.add_argument("--weights", type=float, nargs=3, metavar=("W_REL", "W_RECALL", "W_PHRASE"))

    p = add("e2e", cmd_e2e, "generate, train, score, and evaluate in one run")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--vocab", help="vocabulary CSV (default: built-in small vocabulary)")
    p.add_argument("--train-images", type=int)
    p.add_argument("--test-images", type=int)
    p.add_argument("--neg-ratio", type=float)
    p.add_argument("--extract-iou-threshold", type=float)
    p.add_argument("--max-boxes", type=int)
    p.add_argument("--top-k", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--iou-threshold", type=float)
    p.add_argument("--recall-n", type=int)
    p.add_argument("--ap-grouping", choices=AP_GROUPINGS)
    p.add_argument("--weights", type=float, nargs=3, metavar=("W_REL", "W_RECALL", "W_PHRASE"))
    _add_synth_flags(p)
    _add_train_flags(p)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits for usage errors and --version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"vrdkit: error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ModelFormatError) as exc:
        print(f"vrdkit: error: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyError as exc:
        message = exc.args[0] if exc.args else exc
        print(f"vrdkit: error: data: {message}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"vrdkit: error: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - stable exit-code contract
        print(f"vrdkit: error: internal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
