"""Compare the compiled and pure-numpy kernels on synthetic regression data.

Usage: python3 benchmarks/bench_kernels.py [--rows N] [--repeat R]

Each case is run once untimed (JIT warm-up), then timed ``repeat`` times;
the best time is reported. Predictions of the two backends are checked
for equality on the way.
"""
import argparse
import time

import numpy as np

from delivery_eta._accel import HAVE_NUMBA, use_backend
from delivery_eta.features import FeatureMatrix
from delivery_eta.models import ModelConfig, fit_model


def make_data(n, p=10, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = 3 * X[:, 0] + np.sin(2 * X[:, 1]) + X[:, 2] * X[:, 3] + rng.normal(0, 0.3, n)
    return FeatureMatrix.from_arrays(X, y)


CASES = {
    "tree depth 8": ModelConfig("Tree", {"max_depth": 8}),
    "forest 20": ModelConfig("RandomForest", {"n_estimators": 20, "max_depth": 10}),
    "gbdt level-wise 50": ModelConfig("Gbdt", {"n_estimators": 50, "growth": "LevelWise"}),
    "gbdt leaf-wise 50": ModelConfig("Gbdt", {"n_estimators": 50, "growth": "LeafWise"}),
    "svr rbf": ModelConfig("Svr", {"max_train_rows": 1500, "c": 10.0}),
}


def bench(cfg, fm, backend, repeat):
    with use_backend(backend):
        model = fit_model(cfg, fm)  # warm-up / compile
        best = np.inf
        for _ in range(repeat):
            t0 = time.perf_counter()
            model = fit_model(cfg, fm)
            best = min(best, time.perf_counter() - t0)
        return best, model.predict_array(fm.values)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    fm = make_data(args.rows)
    print(f"{'case':<22} {'numba s':>9} {'numpy s':>9} {'speedup':>8}  same")
    for name, cfg in CASES.items():
        t_nb, p_nb = bench(cfg, fm, "numba", args.repeat)
        t_np, p_np = bench(cfg, fm, "numpy", args.repeat)
        same = np.array_equal(p_nb, p_np)
        print(f"{name:<22} {t_nb:>9.3f} {t_np:>9.3f} {t_np / t_nb:>7.1f}x  {same}")


if __name__ == "__main__":
    main()
