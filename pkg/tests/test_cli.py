"""Command-line interface: pipelines, exit codes, manifests, determinism."""

from __future__ import annotations

import json

from vrdkit.cli import main, stage_seed
from vrdkit.datamodel import parse_predictions, parse_relations, load_vocabulary
from vrdkit.datamodel import RelationshipPrediction, write_predictions

MANIFEST_KEYS = {
    "subcommand",
    "version",
    "seed",
    "threads",
    "config",
    "inputs",
    "outputs",
    "duration_seconds",
}

FAST_GEN = ["--num-images", "40", "--seed", "5"]
FAST_E2E = [
    "--train-images",
    "60",
    "--test-images",
    "15",
    "--num-rounds",
    "40",
    "--seed",
    "9",
]


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def read_manifest(path):
    doc = json.loads(path.read_text())
    assert set(doc) == MANIFEST_KEYS
    return doc


def gen_dataset(tmp_path, capsys, extra=()):
    out = tmp_path / "data"
    code, stdout, _ = run(
        ["gen-synth", "--out-dir", str(out), *FAST_GEN, *extra], capsys
    )
    assert code == 0
    assert "gen-synth:" in stdout
    return out


# ------------------------------------------------------------ subcommands


def test_gen_synth_writes_dataset_and_manifest(tmp_path, capsys):
    out = gen_dataset(tmp_path, capsys)
    for name in (
        "relations_gt.csv",
        "detections.csv",
        "is_detections.csv",
        "vocabulary.csv",
        "manifest.json",
    ):
        assert (out / name).is_file()
    manifest = read_manifest(out / "manifest.json")
    assert manifest["subcommand"] == "gen-synth"
    assert manifest["seed"] == 5
    assert manifest["config"]["num_images"] == 40
    vocab = load_vocabulary(out / "vocabulary.csv")
    assert parse_relations(out / "relations_gt.csv", vocab=vocab)


def test_full_pipeline_through_separate_subcommands(tmp_path, capsys):
    data = gen_dataset(tmp_path, capsys)
    features = tmp_path / "features.csv"
    model = tmp_path / "model.json"
    preds = tmp_path / "predictions.csv"
    vocab = str(data / "vocabulary.csv")

    code, stdout, _ = run(
        [
            "extract-features",
            "--detections",
            str(data / "detections.csv"),
            "--gt",
            str(data / "relations_gt.csv"),
            "--vocab",
            vocab,
            "--output",
            str(features),
        ],
        capsys,
    )
    assert code == 0 and "candidates" in stdout
    assert features.is_file()
    read_manifest(tmp_path / "features.csv.manifest.json")

    code, stdout, _ = run(
        [
            "train",
            "--features",
            str(features),
            "--vocab",
            vocab,
            "--output",
            str(model),
            "--num-rounds",
            "40",
        ],
        capsys,
    )
    assert code == 0 and model.is_file()
    read_manifest(tmp_path / "model.json.manifest.json")

    code, stdout, _ = run(
        [
            "score",
            "--model",
            str(model),
            "--detections",
            str(data / "detections.csv"),
            "--is-detections",
            str(data / "is_detections.csv"),
            "--vocab",
            vocab,
            "--output",
            str(preds),
        ],
        capsys,
    )
    assert code == 0 and preds.is_file()
    parsed = parse_predictions(preds)
    assert parsed
    assert any(p.relation == "is" for p in parsed)
    assert any(p.relation != "is" for p in parsed)

    report_path = tmp_path / "report.json"
    code, stdout, _ = run(
        [
            "evaluate",
            "--predictions",
            str(preds),
            "--gt",
            str(data / "relations_gt.csv"),
            "--vocab",
            vocab,
            "--output",
            str(report_path),
        ],
        capsys,
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    summary = stdout.strip().splitlines()[-1]
    assert f"final_score={report['final_score']:.6f}" in summary
    assert 0.0 <= report["final_score"] <= 1.0


def test_evaluate_perfect_predictions_scores_one(tmp_path, capsys):
    data = gen_dataset(tmp_path, capsys)
    vocab = load_vocabulary(data / "vocabulary.csv")
    gts = parse_relations(data / "relations_gt.csv", vocab=vocab)
    preds = [
        RelationshipPrediction(
            image_id=g.image_id,
            score=0.9,
            label1=g.label1,
            box1=g.box1,
            relation=g.relation,
            label2=g.label2,
            box2=g.box2,
        )
        for g in gts
    ]
    pred_path = tmp_path / "perfect.csv"
    write_predictions(preds, pred_path)
    code, stdout, _ = run(
        [
            "evaluate",
            "--predictions",
            str(pred_path),
            "--gt",
            str(data / "relations_gt.csv"),
            "--vocab",
            str(data / "vocabulary.csv"),
        ],
        capsys,
    )
    assert code == 0
    assert "final_score=1.000000" in stdout


def test_e2e_writes_everything(tmp_path, capsys):
    out = tmp_path / "run"
    code, stdout, _ = run(["e2e", "--out-dir", str(out), *FAST_E2E], capsys)
    assert code == 0
    assert "final_score=" in stdout
    manifest = read_manifest(out / "manifest.json")
    assert manifest["subcommand"] == "e2e"
    for path in manifest["outputs"].values():
        assert (out / path).exists() or (tmp_path / path).exists()
    report = json.loads((out / "report.json").read_text())
    assert report["final_score"] > 0.5  # small fast run, loose sanity bound


# ------------------------------------------------------------- exit codes


def test_usage_errors_exit_one(tmp_path, capsys):
    code, _, err = run(["gen-synth"], capsys)  # missing --out-dir
    assert code == 1
    assert "usage" in err

    code, _, err = run(
        ["gen-synth", "--out-dir", str(tmp_path / "x"), "--num-images", "0"], capsys
    )
    assert code == 1
    assert err.startswith("vrdkit: error: usage:")

    code, _, err = run(["frobnicate"], capsys)
    assert code == 1


def test_data_errors_exit_two(tmp_path, capsys):
    code, _, err = run(
        [
            "evaluate",
            "--predictions",
            str(tmp_path / "missing.csv"),
            "--gt",
            str(tmp_path / "missing.csv"),
        ],
        capsys,
    )
    assert code == 2
    assert err.startswith("vrdkit: error: data:")

    data = gen_dataset(tmp_path, capsys)
    bad_model = tmp_path / "model.json"
    bad_model.write_text("{broken")
    code, _, err = run(
        [
            "score",
            "--model",
            str(bad_model),
            "--detections",
            str(data / "detections.csv"),
            "--vocab",
            str(data / "vocabulary.csv"),
            "--output",
            str(tmp_path / "preds.csv"),
        ],
        capsys,
    )
    assert code == 2
    assert err.startswith("vrdkit: error: data:")


def test_version_flag(capsys):
    assert main(["--version"]) == 0
    assert capsys.readouterr().out.startswith("vrdkit ")


# ------------------------------------------------------- config precedence


def test_config_file_supplies_defaults_and_flags_win(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"num_images": 3, "seed": 2}))

    from_config = tmp_path / "a"
    code, _, _ = run(
        ["gen-synth", "--out-dir", str(from_config), "--config", str(config)], capsys
    )
    assert code == 0
    manifest = read_manifest(from_config / "manifest.json")
    assert manifest["config"]["num_images"] == 3
    assert manifest["seed"] == 2

    flag_wins = tmp_path / "b"
    code, _, _ = run(
        [
            "gen-synth",
            "--out-dir",
            str(flag_wins),
            "--config",
            str(config),
            "--num-images",
            "2",
        ],
        capsys,
    )
    assert code == 0
    assert read_manifest(flag_wins / "manifest.json")["config"]["num_images"] == 2

    bad = tmp_path / "bad.json"
    bad.write_text("[]")
    code, _, err = run(
        ["gen-synth", "--out-dir", str(tmp_path / "c"), "--config", str(bad)], capsys
    )
    assert code == 1


# ------------------------------------------------------------ determinism


def _tree_bytes(root):
    """{relative path: bytes} for every file under root, manifests excluded."""
    out = {}
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            out[str(path.relative_to(root))] = path.read_bytes()
    return out


def test_e2e_reruns_are_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["e2e", "--out-dir", str(a), *FAST_E2E], capsys)[0] == 0
    assert run(["e2e", "--out-dir", str(b), *FAST_E2E], capsys)[0] == 0
    assert _tree_bytes(a) == _tree_bytes(b)


def test_e2e_thread_count_does_not_change_outputs(tmp_path, capsys):
    a, b = tmp_path / "t1", tmp_path / "t2"
    assert run(["e2e", "--out-dir", str(a), *FAST_E2E, "--threads", "1"], capsys)[0] == 0
    assert run(["e2e", "--out-dir", str(b), *FAST_E2E, "--threads", "2"], capsys)[0] == 0
    assert _tree_bytes(a) == _tree_bytes(b)


def test_stage_seeds_are_distinct_and_stable():
    assert stage_seed(42, "gen-train") == stage_seed(42, "gen-train")
    assert stage_seed(42, "gen-train") != stage_seed(42, "gen-test")
    assert stage_seed(42, "train") != stage_seed(43, "train")
