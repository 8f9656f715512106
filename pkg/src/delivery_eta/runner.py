"""End-to-end experiment orchestration and report writing."""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import shutil
import statistics
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import __version__
from ._seeding import derive_seed
from .config import ExperimentConfig
from .evaluation import (
    FoldPlan,
    GridSearchResult,
    grid_search,
    paired_t_test,
    residual_diagnostics,
    Metrics,
    TTestResult,
    train_test_split,
)
from .features import (
    FeatureMatrix,
    build_matrix,
    drop_feature_group,
    fit_encodings,
    haversine_km,
    load_encodings,
    save_encodings,
)
from .ingest import RAW_COLUMNS, DatasetSummary, clean_records, parse_records
from .models import load_model, predict, save_model
from .select import SelectionResult, select_top_k

log = logging.getLogger(__name__)

ARTIFACT_VERSION = 1
PREDICTION_COLUMN = "predicted_time_min"


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it and the cause is chained."""

    def __init__(self, stage, exc):
        super().__init__(f"stage {stage!r} failed: {type(exc).__name__}: {exc}")
        self.stage = stage
        self.cause = exc


@contextmanager
def stage(name):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


@contextmanager
def atomic_dir(path):
    """Yield a scratch directory that replaces ``path`` only on success."""
    path = os.path.abspath(path)
    parent = os.path.dirname(path)
    os.makedirs(parent, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=".tmp-", dir=parent)
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if os.path.isdir(path):
        old = tempfile.mkdtemp(prefix=".old-", dir=parent)
        os.rename(path, os.path.join(old, "run"))
        os.rename(tmp, path)
        shutil.rmtree(old, ignore_errors=True)
    else:
        os.rename(tmp, path)


def _dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


# -- data preparation -------------------------------------------------------


@dataclass
class Prepared:
    summary: DatasetSummary
    rejects: list  # (stage, row, reason)
    encodings: dict
    matrix: FeatureMatrix
    train_idx: np.ndarray
    test_idx: np.ndarray
    plan: FoldPlan

    @property
    def train(self):
        return self.matrix.take_rows(self.train_idx)

    @property
    def test(self):
        return self.matrix.take_rows(self.test_idx)


def prepare(cfg: ExperimentConfig) -> Prepared:
    """Ingest, clean, encode, build the matrix and split it."""
    if cfg.dataset is None:
        raise StageError("ingest", ValueError("config has no dataset path"))
    with stage("ingest"):
        parsed = parse_records(cfg.dataset)
    rejects = [("parse", r.row, r.reason) for r in parsed.rejects]
    with stage("clean"):
        clean, summary, drops = clean_records(parsed.records, return_drops=True)
    rejects += [("clean", i, reason) for i, reason in drops]
    dropped = {i for i, _ in drops}
    kept_idx = np.array([i for i in range(len(parsed.records)) if i not in dropped], dtype=np.int64)
    with stage("features"):
        if cfg.max_rows is not None and len(clean) > cfg.max_rows:
            rng = np.random.default_rng(derive_seed(cfg.seed, "subsample"))
            pick = np.sort(rng.choice(len(clean), size=cfg.max_rows, replace=False))
            clean = [clean[i] for i in pick]
            kept_idx = kept_idx[pick]
        encodings = fit_encodings(clean)
        fm = build_matrix(clean, encodings, cfg.feature_set, cfg.max_distance_km)
        rejects += [("features", int(kept_idx[i]), reason) for i, reason in fm.dropped]
        fm.check()
    with stage("split"):
        train_idx, test_idx = train_test_split(fm.n_rows, cfg.test_fraction, derive_seed(cfg.seed, "split"))
        plan = FoldPlan.make(len(train_idx), cfg.k_folds, derive_seed(cfg.seed, "folds"))
    return Prepared(summary, rejects, encodings, fm, train_idx, test_idx, plan)


# -- training ---------------------------------------------------------------


@dataclass
class ModelRun:
    name: str
    search: GridSearchResult
    holdout: Metrics
    sq_errors: np.ndarray
    predictions: np.ndarray
    residuals: dict
    fit_seconds: float

    def to_dict(self):
        cv = self.search.best_cv
        return {
            "model": self.name,
            "family": self.search.family,
            "best_params": self.search.best_params,
            "holdout": {"mse": self.holdout.mse, "r2": self.holdout.r2},
            "cv": {"mean_mse": cv.mean_mse, "std_mse": cv.std_mse, "mean_r2": cv.mean_r2, "fold_mse": cv.mse_scores},
            "candidates": self.search.to_dict()["candidates"],
            "residuals": self.residuals,
            "fit_info": self.search.model.info,
        }


def _train_one(cfg, name, train, test, plan, n_jobs):
    family, grid = cfg.grid_for(name)
    t0 = time.perf_counter()
    with stage(f"train:{name}"):
        search = grid_search(family, grid, train, plan, seed=derive_seed(cfg.seed, "model", name), n_jobs=n_jobs)
    elapsed = time.perf_counter() - t0
    with stage(f"evaluate:{name}"):
        yhat = predict(search.model, test)
        err = test.target - yhat
        diag = residual_diagnostics(test.target, yhat).to_dict()
        holdout = Metrics.of(test.target, yhat)
    return ModelRun(name, search, holdout, err * err, yhat, diag, elapsed)


def _select(cfg, train):
    with stage("select"):
        return select_top_k(train, min(cfg.select_k, train.n_cols), cfg.mi_bins)


def train_models(cfg, names, train, test, plan):
    """Select on ``train`` then grid-search each model; returns ``(selection, runs)``."""
    selection = _select(cfg, train)
    tr = train.select_columns(selection.kept)
    te = test.select_columns(selection.kept)
    # several models: one worker per model; a single model: workers go to its grid search
    if cfg.n_jobs > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            futs = [pool.submit(_train_one, cfg, n, tr, te, plan, 1) for n in names]
            runs = [f.result() for f in futs]
    else:
        runs = [_train_one(cfg, n, tr, te, plan, cfg.n_jobs) for n in names]
    return selection, runs


def _leaderboard(runs):
    return sorted(runs, key=lambda r: (r.holdout.mse, r.name))


def _write_leaderboard_csv(runs, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "mse", "r2", "cv_mean", "cv_std"])
        for r in runs:
            cv = r.search.best_cv
            w.writerow([r.name, repr(r.holdout.mse), repr(r.holdout.r2), repr(cv.mean_mse), repr(cv.std_mse)])


def _write_rejects(rejects, path):
    # parse rejects carry the file line number; later stages the 0-based record index
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stage", "row", "reason"])
        w.writerows(rejects)


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Full pipeline; writes the run directory and returns the report dict."""
    t_start = time.perf_counter()
    prep = prepare(cfg)
    selection, runs = train_models(cfg, cfg.models, prep.train, prep.test, prep.plan)
    ranked = _leaderboard(runs)
    report = {
        "artifact_version": ARTIFACT_VERSION,
        "package_version": __version__,
        "config": cfg.to_dict(),
        "dataset": {
            **prep.summary.to_dict(),
            "matrix_rows": prep.matrix.n_rows,
            "matrix_columns": prep.matrix.column_names,
            "train_rows": int(len(prep.train_idx)),
            "test_rows": int(len(prep.test_idx)),
        },
        "selection": selection.to_dict(),
        "note": "holdout = scores on the untouched test split; cv = k-fold scores of the winning candidate on the train split",
        "leaderboard": [r.to_dict() for r in ranked],
        "timing": {"fit_seconds": {r.name: r.fit_seconds for r in runs}},
    }
    with stage("write"), atomic_dir(cfg.output_dir) as out:
        _write_leaderboard_csv(ranked, os.path.join(out, "leaderboard.csv"))
        _dump_json(selection.to_dict(), os.path.join(out, "selection.json"))
        save_encodings(prep.encodings, os.path.join(out, "encodings.json"))
        for r in runs:
            r.search.model.info["max_distance_km"] = cfg.max_distance_km
            save_model(r.search.model, os.path.join(out, f"model.{r.name}.json"))
        _write_rejects(prep.rejects, os.path.join(out, "rejects.csv"))
        report["timing"]["total_seconds"] = time.perf_counter() - t_start
        _dump_json(report, os.path.join(out, "report.json"))
    return report


# -- ablation and comparison -----------------------------------------------


def _deltas(base: Metrics, m: Metrics):
    return {"delta_r2": m.r2 - base.r2, "pct_delta_mse": 100.0 * (m.mse - base.mse) / base.mse}


def run_ablation(cfg: ExperimentConfig, model: str, groups=None) -> dict:
    """Drop each feature group in turn, re-select and re-tune, score on the same hold-out rows."""
    from .config import MODEL_NAMES, ConfigError
    from .features import FeatureGroup

    if model not in MODEL_NAMES:
        raise ConfigError("model", f"unknown model {model!r}")
    groups = cfg.ablation_groups if groups is None else [FeatureGroup.parse(g).value for g in groups]
    prep = prepare(cfg)
    train, test = prep.train, prep.test
    sel, (base,) = train_models(cfg, [model], train, test, prep.plan)
    entries = []
    for g in groups:
        tr = drop_feature_group(train, g)
        te = drop_feature_group(test, g)
        removed = [c for c in train.column_names if c not in tr.column_names]
        if not tr.column_names:
            raise StageError(f"ablate:{g}", ValueError("no columns left after dropping the group"))
        gsel, (run,) = train_models(cfg, [model], tr, te, prep.plan)
        entries.append(
            {
                "group": g,
                "removed_columns": removed,
                "selected": gsel.kept,
                "best_params": run.search.best_params,
                "metrics": {"mse": run.holdout.mse, "r2": run.holdout.r2},
                **_deltas(base.holdout, run.holdout),
            }
        )
    report = {
        "artifact_version": ARTIFACT_VERSION,
        "config": cfg.to_dict(),
        "model": model,
        "baseline": {
            "selected": sel.kept,
            "best_params": base.search.best_params,
            "metrics": {"mse": base.holdout.mse, "r2": base.holdout.r2},
        },
        "groups": entries,
    }
    with stage("write"), atomic_dir(cfg.output_dir) as out:
        _dump_json(report, os.path.join(out, "ablation.json"))
    return report


def run_compare(cfg: ExperimentConfig, family_a: str, family_b: str) -> TTestResult:
    """Paired t-test on per-row squared hold-out errors of two tuned models."""
    from .config import ConfigError

    for m in (family_a, family_b):
        if m not in cfg.models:
            raise ConfigError("models", f"{m!r} is not among the configured models")
    prep = prepare(cfg)
    names = list(dict.fromkeys([family_a, family_b]))
    _, runs = train_models(cfg, names, prep.train, prep.test, prep.plan)
    by = {r.name: r for r in runs}
    res = paired_t_test(by[family_a].sq_errors, by[family_b].sq_errors)
    report = {
        "artifact_version": ARTIFACT_VERSION,
        "config": cfg.to_dict(),
        "a": family_a,
        "b": family_b,
        "pairing": "per-row squared errors on the shared hold-out split",
        "holdout_mse": {family_a: by[family_a].holdout.mse, family_b: by[family_b].holdout.mse},
        "ttest": res.to_dict(),
    }
    with stage("write"), atomic_dir(cfg.output_dir) as out:
        _dump_json(report, os.path.join(out, "compare.json"))
    return res


# -- scoring new orders -----------------------------------------------------


def predict_cli(model_path, encodings_path, input_csv, output_csv, rejects_csv=None) -> dict:
    """Score raw-schema rows with a saved model; returns counts.

    Rows that fail cleaning, carry unseen categories under the ``error``
    policy, or lie beyond the training distance cap are written to the
    rejects file instead.
    """
    model = load_model(model_path)
    encodings = load_encodings(encodings_path)
    with stage("ingest"):
        parsed = parse_records(input_csv, require_target=False)
    clean, _, drops = clean_records(parsed.records, require_target=False, return_drops=True)
    reasons = {i: r for i, r in drops}
    clean_of = {}
    j = 0
    for i in range(len(parsed.records)):
        if i not in reasons:
            clean_of[i] = clean[j]
            j += 1
    ok = []
    for i, rec in clean_of.items():
        bad = None
        for col in model.columns:
            enc = encodings.get(col)
            if enc is not None and enc.unknown_policy == "error" and getattr(rec, col) not in enc.mapping:
                bad = f"unknown_category:{col}={getattr(rec, col)}"
                break
        if bad is None:
            d = haversine_km(rec.restaurant_lat, rec.restaurant_lon, rec.delivery_lat, rec.delivery_lon)
            cap = model.info.get("max_distance_km")
            if cap is not None and d > cap:
                bad = "distance_outlier"
        if bad is None:
            ok.append(i)
        else:
            reasons[i] = bad
    preds = np.zeros(0)
    if ok:
        fm = build_matrix([clean_of[i] for i in ok], encodings, model.columns, max_distance_km=None)
        preds = predict(model, fm)
    cols = RAW_COLUMNS if parsed.has_target else RAW_COLUMNS[:-1]
    with open(output_csv, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([h for h, _ in cols] + [PREDICTION_COLUMN])
        for i, p in zip(ok, preds):
            rec = parsed.records[i]
            w.writerow([getattr(rec, a) for _, a in cols] + [repr(float(p))])
    rejects_csv = rejects_csv or os.path.splitext(output_csv)[0] + ".rejects.csv"
    rows = [("parse", r.row, r.reason) for r in parsed.rejects]
    rows += [("score", i, reasons[i]) for i in sorted(reasons)]
    _write_rejects(rows, rejects_csv)
    return {"scored": len(ok), "rejected": len(rows), "output": output_csv, "rejects": rejects_csv}


# -- exploratory summary ----------------------------------------------------


def _mean_std(values):
    if not values:
        return {"n": 0, "mean": None, "std": None}
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    return {"n": len(values), "mean": statistics.fmean(values), "std": sd}


def summarize(csv_path) -> dict:
    """Grouped target statistics, ratings histogram and numeric correlations."""
    parsed = parse_records(csv_path)
    clean, summary = clean_records(parsed.records)
    out = {"rows": {"raw": summary.raw_rows, "clean": summary.clean_rows, "dropped": summary.dropped_by_reason}}
    for attr in ("city", "traffic_density", "weather"):
        groups = {}
        for r in clean:
            groups.setdefault(getattr(r, attr), []).append(r.time_taken_min)
        out[f"time_by_{attr}"] = {k: _mean_std(v) for k, v in sorted(groups.items())}
    hist = {}
    for r in clean:
        lo = math.floor(r.delivery_person_ratings * 2) / 2
        key = f"[{lo:.1f}, {lo + 0.5:.1f})"
        hist[key] = hist.get(key, 0) + 1
    out["ratings_histogram"] = dict(sorted(hist.items()))
    names = ["delivery_person_age", "delivery_person_ratings", "vehicle_condition", "multiple_deliveries"]
    cols = [[getattr(r, n) for r in clean] for n in names]
    names += ["distance_km", "time_taken_min"]
    cols.append(
        [haversine_km(r.restaurant_lat, r.restaurant_lon, r.delivery_lat, r.delivery_lon) for r in clean]
    )
    cols.append([r.time_taken_min for r in clean])
    corr = {}
    if len(clean) > 1:
        A = np.asarray(cols, dtype=np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            C = np.corrcoef(A)
        for a, na in enumerate(names):
            corr[na] = {nb: (None if not np.isfinite(C[a, b]) else float(C[a, b])) for b, nb in enumerate(names)}
    out["correlation"] = corr
    return out


__all__ = [
    "ARTIFACT_VERSION",
    "PREDICTION_COLUMN",
    "Prepared",
    "StageError",
    "prepare",
    "predict_cli",
    "run_ablation",
    "run_compare",
    "run_experiment",
    "summarize",
    "train_models",
]
