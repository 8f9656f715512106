"""Acceptance criteria, one test per criterion.

Criteria 1-10 always run. Criteria 11-15 need the public order export and
run only when ``DELIVERY_ETA_KAGGLE_CSV`` points at it. Each test appends a
``[PASS|FAIL|SKIP] <n>: <detail>`` line that the terminal summary prints.
"""
import math
import os
import time

import numpy as np
import pytest

from conftest import CRITERIA, SMALL_GRIDS
from delivery_eta.config import MODEL_NAMES, config_from_dict
from delivery_eta.evaluation import mse, paired_t_test, r2
from delivery_eta.features import FeatureMatrix, haversine_km
from delivery_eta.models import fit_bagging, fit_elastic_net, fit_gbdt, fit_linear, fit_random_forest, fit_tree
from delivery_eta.models.trees import squared_loss, squared_loss_grad
from delivery_eta.select import entropy, mutual_information
from delivery_eta.stats import t_cdf, t_sf2
from oracles import brute_tree_sse, finite_diff, haversine_chord, pinv_ols, univariate_enet

KAGGLE = os.environ.get("DELIVERY_ETA_KAGGLE_CSV")


def record(n, ok, detail):
    CRITERIA.append(f"[{'PASS' if ok else 'FAIL'}] {n}: {detail}")
    assert ok, detail


def _fm(X, y):
    return FeatureMatrix.from_arrays(X, y)


# -- always-on oracle and property criteria -----------------------------------


def test_c01_ols_noiseless_recovery():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(200, 5))
    w = rng.normal(size=5)
    t0 = time.perf_counter()
    m = fit_linear(_fm(X, X @ w))
    dt = time.perf_counter() - t0
    _, oracle = pinv_ols(X, X @ w)
    err = float(np.max(np.abs(m.predictor.coef - w)))
    err_oracle = float(np.max(np.abs(oracle - w)))
    record(1, err <= 1e-8 and err_oracle <= 1e-8 and dt < 1.0,
           f"OLS max|w-w*| {err:.1e} (pinv oracle {err_oracle:.1e}), {dt:.3f}s")


def test_c02_elastic_net():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(300, 4))
    y = X @ np.array([1.5, -2.0, 0.3, 0.0]) + 1.0 + rng.normal(size=300)
    en = fit_elastic_net(_fm(X, y), alpha=0.0, tol=1e-12, max_iter=100_000)
    ols = fit_linear(_fm(X, y))
    d_ols = float(np.max(np.abs(en.predictor.coef - ols.predictor.coef)))
    d_uni = 0.0
    x = rng.normal(2.0, 3.0, 400)
    yu = 0.8 * x + rng.normal(size=400)
    for alpha, l1 in [(0.05, 0.5), (0.5, 0.9), (2.0, 0.2), (10.0, 1.0)]:
        m = fit_elastic_net(_fm(x, yu), alpha=alpha, l1_ratio=l1, tol=1e-14, max_iter=100_000)
        d_uni = max(d_uni, abs(m.predictor.coef[0] - univariate_enet(x, yu, alpha, l1)))
    record(2, d_ols <= 1e-4 and d_uni <= 1e-8,
           f"ENet alpha=0 vs OLS {d_ols:.1e}; univariate closed form {d_uni:.1e}")


def test_c03_cart_vs_brute_force():
    rng = np.random.default_rng(3)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(50):
        n = int(rng.integers(5, 201))
        p = int(rng.integers(1, 4))
        X = np.round(rng.normal(size=(n, p)), 1)
        y = rng.normal(size=n)
        depth = int(rng.integers(1, 3))
        m = fit_tree(_fm(X, y), max_depth=depth)
        sse = float(np.sum((m.predict_array(X) - y) ** 2))
        ref = brute_tree_sse(X, y, depth)
        worst = max(worst, abs(sse - ref) / max(ref, 1.0))
    dt = time.perf_counter() - t0
    record(3, worst <= 1e-9 and dt < 10.0, f"CART SSE vs exhaustive oracle on 50 sets, worst rel {worst:.1e}, {dt:.2f}s")


def test_c04_reduction_identities():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(250, 4))
    y = np.sin(2 * X[:, 0]) + X[:, 1] * X[:, 2] + 0.2 * rng.normal(size=250)
    fm = _fm(X, y)
    tree = fit_tree(fm, max_depth=5).predict_array(X)
    bag = fit_bagging(fm, n_estimators=1, bootstrap=False, max_depth=5).predict_array(X)
    rf = fit_random_forest(fm, n_estimators=1, m_try=4, bootstrap=False, max_depth=5).predict_array(X)
    gb = fit_gbdt(fm, n_estimators=1, learning_rate=1.0, lambda_l2=0.0, max_depth=5, growth="LevelWise").predict_array(X)
    yc = y - y.mean()
    tc = fit_tree(_fm(X, yc), max_depth=5).predict_array(X) + y.mean()
    d = [float(np.max(np.abs(a - b))) for a, b in [(bag, tree), (rf, tree), (gb, tc)]]
    record(4, max(d) <= 1e-9, f"bagging/forest/gbdt vs tree max diffs {d[0]:.1e}/{d[1]:.1e}/{d[2]:.1e}")


def test_c05_gbdt_loss_leaves_gradient():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(400, 5))
    y = X[:, 0] * X[:, 1] + np.abs(X[:, 2]) + 0.3 * rng.normal(size=400)
    lam, lr = 1.5, 0.2
    mono, leaf_err = True, 0.0
    for growth in ("LevelWise", "LeafWise"):
        m = fit_gbdt(_fm(X, y), n_estimators=20, learning_rate=lr, lambda_l2=lam, growth=growth, max_depth=3,
                     max_leaves=8, histogram_bins=64)
        h = m.info["train_mse"]
        mono &= len(h) == 21 and all(b <= a for a, b in zip(h, h[1:]))
        pred = np.full(len(y), m.predictor.base)
        for t in m.predictor.trees:
            g = pred - y
            leaf = t.apply(X)
            for j in np.unique(leaf):
                sel = leaf == j
                leaf_err = max(leaf_err, abs(t.value[j] + g[sel].sum() / (sel.sum() + lam)))
            pred = pred + lr * t.predict(X)
    yhat = rng.normal(size=12)
    yy = rng.normal(size=12)
    fd = finite_diff(lambda v: squared_loss(yy, v), yhat)
    g_err = float(np.max(np.abs(squared_loss_grad(yy, yhat) - fd) / np.maximum(np.abs(fd), 1e-12)))
    record(5, mono and leaf_err <= 1e-9 and g_err <= 1e-6,
           f"GBDT monotone={mono}, leaf -G/(H+l) err {leaf_err:.1e}, grad rel err {g_err:.1e}")


def test_c06_haversine():
    eq = haversine_km(0.0, 0.0, 0.0, 1.0)
    rng = np.random.default_rng(6)
    lat = rng.uniform(-90, 90, (1000, 3))
    lon = rng.uniform(-180, 180, (1000, 3))
    ab = haversine_km(lat[:, 0], lon[:, 0], lat[:, 1], lon[:, 1])
    ba = haversine_km(lat[:, 1], lon[:, 1], lat[:, 0], lon[:, 0])
    bc = haversine_km(lat[:, 1], lon[:, 1], lat[:, 2], lon[:, 2])
    ac = haversine_km(lat[:, 0], lon[:, 0], lat[:, 2], lon[:, 2])
    sym = bool(np.all(ab == ba))
    tri = bool(np.all(ac <= ab + bc + 1e-9))
    ref = np.array([haversine_chord(lat[i, 0], lon[i, 0], lat[i, 1], lon[i, 1]) for i in range(1000)])
    rel = float(np.max(np.abs(ab - ref) / np.maximum(ref, 1e-9)))
    record(6, abs(eq - 111.195) <= 1e-3 and sym and tri and rel <= 1e-6,
           f"1 deg equator {eq:.4f} km, symmetric={sym}, triangle={tri}, chord oracle rel {rel:.1e}")


def test_c07_mutual_information():
    rng = np.random.default_rng(7)
    x = rng.integers(0, 4, 10_000)
    z = rng.integers(0, 4, 10_000)
    same = mutual_information(x, x)
    indep = mutual_information(x, z)
    exact = mutual_information(x, x) == entropy(x)
    record(7, abs(same - math.log(4)) <= 0.01 and indep <= 0.01 and exact,
           f"MI(x,x) {same:.4f} vs ln4 {math.log(4):.4f}, independent {indep:.4f}, MI(x,x)==H(x) {exact}")


def test_c08_metric_identities():
    hand = (
        mse([3, 4], [3, 4]) == 0.0
        and mse([0, 0], [1, 1]) == 1.0
        and mse([1, 2], [2, 4]) == 2.5
        and r2([1, 2, 3], [1, 2, 3]) == 1.0
        and r2([1, 2, 3], [2, 2, 2]) == 0.0
        and r2([1, 2, 3], [1, 2, 5]) == -1.0
    )
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(2, 300))
        y = rng.normal(rng.uniform(-50, 50), rng.uniform(0.1, 20), n)
        yhat = y + rng.normal(0, rng.uniform(0.01, 30), n)
        sst = float(np.sum((y - y.mean()) ** 2))
        worst = max(worst, abs(r2(y, yhat) - (1 - n * mse(y, yhat) / sst)))
    record(8, hand and worst <= 1e-10, f"hand cases {hand}, r2 = 1 - n*mse/SST worst {worst:.1e} over 500 draws")


def test_c09_student_t():
    p = t_sf2(2.228, 10)
    half = all(t_cdf(0.0, df) == 0.5 for df in range(1, 31))
    same = paired_t_test([1.0, 4.0, 2.5, 7.0], [1.0, 4.0, 2.5, 7.0])
    ok = abs(p - 0.050) <= 1e-3 and half and same.t == 0.0 and same.p == 1.0
    record(9, ok, f"p(|T10|>2.228) {p:.5f}, CDF(0)=0.5 for df 1..30 {half}, identical samples t={same.t} p={same.p}")


def test_c10_end_to_end_determinism(tmp_path):
    from delivery_eta.cli import main
    from delivery_eta.synth import synth_csv
    import json

    data = tmp_path / "orders.csv"
    synth_csv(data, n=1000, seed=11, missing_rate=0.03)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dataset": str(data), "models": list(MODEL_NAMES), "grids": SMALL_GRIDS}))
    jobs = max(2, os.cpu_count() or 1)
    t0 = time.perf_counter()
    outs = []
    for tag, n_jobs in [("a", 1), ("b", 1), ("c", jobs), ("d", jobs)]:
        rc = main(["train", str(cfg), "--output", str(tmp_path / tag), "--jobs", str(n_jobs)])
        assert rc == 0
        outs.append((tmp_path / tag / "leaderboard.csv").read_bytes())
    dt = (time.perf_counter() - t0) / 2
    same = all(o == outs[0] for o in outs)
    record(10, same and dt < 60.0, f"leaderboards identical across 2 runs x (1, {jobs}) workers: {same}; {dt:.1f}s per pair")


# -- dataset-level reproduction -------------------------------------------------


def _skip(n, what):
    if not KAGGLE:
        CRITERIA.append(f"[SKIP] {n}: {what} (set DELIVERY_ETA_KAGGLE_CSV)")
        pytest.skip("DELIVERY_ETA_KAGGLE_CSV not set")


def test_c11_cleaning_count():
    _skip(11, "cleaning count 41,368 +/- 500")
    from delivery_eta.ingest import clean_records, parse_records

    parsed = parse_records(KAGGLE)
    clean, summary = clean_records(parsed.records)
    n = len(clean)
    record(11, abs(n - 41_368) <= 500, f"{n} clean rows from {summary.raw_rows} (target 41,368 +/- 500)")


def _holdout(report):
    return {r["model"]: r["holdout"] for r in report["leaderboard"]}


def test_c12_leaderboard_ordering():
    _skip(12, "leaderboard ordering")
    _, report, _ = _kaggle()
    h = _holdout(report)
    chain = ["GbdtLeafWise", "GbdtLevelWise", "RandomForest", "Tree", "Linear"]
    vals = [h[m]["mse"] for m in chain]
    ok = all(a < b for a, b in zip(vals, vals[1:]))
    record(12, ok, " < ".join(f"{m} {v:.2f}" for m, v in zip(chain, vals)))


def test_c13_r2_and_runtime(tmp_path):
    _skip(13, "R2 bounds and runtime")
    from delivery_eta.runner import run_experiment

    _, report, dt = _kaggle()
    h = _holdout(report)
    ci = config_from_dict(
        {"dataset": KAGGLE, "output_dir": str(tmp_path / "ci"), "max_rows": 5000, "grids": SMALL_GRIDS,
         "n_jobs": os.cpu_count() or 1}
    )
    t0 = time.perf_counter()
    run_experiment(ci)
    dt_ci = time.perf_counter() - t0
    ok = h["GbdtLeafWise"]["r2"] >= 0.70 and 0.30 <= h["Linear"]["r2"] <= 0.55 and dt <= 600 and dt_ci <= 60
    record(13, ok, f"leaf-wise R2 {h['GbdtLeafWise']['r2']:.3f}, linear R2 {h['Linear']['r2']:.3f}, "
                   f"full {dt:.0f}s, 5k CI {dt_ci:.0f}s")


def test_c14_ablation_direction():
    _skip(14, "ablation direction")
    from delivery_eta.runner import run_ablation

    cfg, _, _ = _kaggle()
    rep = run_ablation(cfg, "GbdtLeafWise", ["Geospatial", "Traffic", "Weather"])
    g = {r["group"]: r for r in rep["groups"]}
    ok = g["Geospatial"]["pct_delta_mse"] >= 10 and g["Traffic"]["delta_r2"] < 0 and g["Weather"]["delta_r2"] < 0
    record(14, ok, f"Geospatial {g['Geospatial']['pct_delta_mse']:+.1f}% mse, Traffic dR2 "
                   f"{g['Traffic']['delta_r2']:+.3f}, Weather dR2 {g['Weather']['delta_r2']:+.3f}")


def test_c15_significance():
    _skip(15, "leaf-wise GBDT vs random forest significance")
    from delivery_eta.runner import run_compare

    cfg, report, _ = _kaggle()
    res = run_compare(cfg, "GbdtLeafWise", "RandomForest")
    h = _holdout(report)
    ok = res.p < 0.05 and h["GbdtLeafWise"]["mse"] < h["RandomForest"]["mse"]
    record(15, ok, f"paired t {res.t:.2f}, p {res.p:.2e}, n {res.n}")


_KAGGLE_CACHE = {}


def _kaggle():
    if "run" not in _KAGGLE_CACHE:
        import tempfile

        from delivery_eta.runner import run_experiment

        out = tempfile.mkdtemp(prefix="kaggle-")
        cfg = config_from_dict({"dataset": KAGGLE, "output_dir": os.path.join(out, "run"), "n_jobs": os.cpu_count() or 1})
        t0 = time.perf_counter()
        report = run_experiment(cfg)
        _KAGGLE_CACHE["run"] = (cfg, report, time.perf_counter() - t0)
    return _KAGGLE_CACHE["run"]
