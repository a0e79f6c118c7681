#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the pure-numpy fallback.

Times three workloads per backend, verifies the two backends produce
bit-identical models and predictions, and prints a speedup table:

  histograms  raw gradient/hessian histogram accumulation
  train       full boosted-tree training run
  predict     batch scoring through the trained trees

Usage:
  python3 scripts/benchmark_backends.py [--rows 20000] [--features 20]
                                        [--rounds 40] [--repeats 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from vrdkit.features import FeatureSchema
from vrdkit.gbdt import Objective, TrainConfig, compiled_available, save_model, train
from vrdkit.gbdt._backend import get_kernels, set_backend


def best_of(repeats: int, fn) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def make_problem(rows: int, features: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, features))
    logits = X @ rng.normal(size=features) + 0.5 * rng.normal(size=rows)
    y = (logits > 0).astype(np.int64)
    names = tuple(f"f{i}" for i in range(features))
    schema = FeatureSchema(
        num_features=features,
        categorical_indices=(),
        categorical_sizes=(),
        names=names,
    )
    return X, y, schema


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20000)
    ap.add_argument("--features", type=int, default=20)
    ap.add_argument("--rounds", type=int, default=40)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    backends = ["python"]
    if compiled_available():
        backends.append("compiled")
    else:
        print("compiled extension not built; benchmarking python backend only")

    X, y, schema = make_problem(args.rows, args.features)
    config = TrainConfig(
        num_rounds=args.rounds,
        num_leaves=31,
        feature_fraction=1.0,
        bagging_fraction=1.0,
    )
    objective = Objective()

    rng = np.random.default_rng(1)
    n_bins = 64
    codes = rng.integers(0, n_bins, size=(args.rows, args.features)).astype(np.uint8)
    idx = np.arange(args.rows, dtype=np.int64)
    grad = rng.normal(size=args.rows)
    hess = rng.uniform(0.1, 1.0, size=args.rows)

    timings: dict[str, dict[str, float]] = {}
    models = {}
    preds = {}
    for backend in backends:
        set_backend(backend)
        kernels = get_kernels()
        t_hist = best_of(
            args.repeats, lambda: kernels.build_histograms(codes, idx, grad, hess, n_bins)
        )
        model = train(X, y, config, objective, schema)
        t_train = best_of(args.repeats, lambda: train(X, y, config, objective, schema))
        t_pred = best_of(args.repeats, lambda: model.predict(X))
        timings[backend] = {"histograms": t_hist, "train": t_train, "predict": t_pred}
        models[backend] = model
        preds[backend] = model.predict(X)

    print(f"\nrows={args.rows} features={args.features} rounds={args.rounds} "
          f"(best of {args.repeats})\n")
    print(f"{'workload':<12}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for workload in ("histograms", "train", "predict"):
        row = f"{workload:<12}"
        for backend in backends:
            row += f"{timings[backend][workload] * 1000:>10.1f}ms"
        if len(backends) == 2:
            ratio = timings["python"][workload] / timings["compiled"][workload]
            row += f"{ratio:>9.1f}x"
        print(row)

    if len(backends) == 2:
        import tempfile
        from pathlib import Path

        blobs = {}
        with tempfile.TemporaryDirectory() as tmp:
            for backend, model in models.items():
                path = Path(tmp) / f"{backend}.json"
                save_model(model, path)
                blobs[backend] = path.read_bytes()
        identical_models = blobs["python"] == blobs["compiled"]
        identical_preds = np.array_equal(preds["python"], preds["compiled"])
        print(f"\nbit-identical models:      {identical_models}")
        print(f"bit-identical predictions: {identical_preds}")
        if not (identical_models and identical_preds):
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
