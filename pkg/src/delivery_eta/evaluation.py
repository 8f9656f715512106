"""Splits, cross-validation, grid search, metrics and significance tests."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .features import FeatureMatrix
from .models import ModelConfig, TrainedModel, fit_model, predict
from .stats import t_sf2


class UndefinedVarianceError(ValueError):
    pass


class FoldError(RuntimeError):
    def __init__(self, fold, exc):
        super().__init__(f"fold {fold}: {exc}")
        self.fold = fold
        self.__cause__ = exc


class GridSearchError(RuntimeError):
    def __init__(self, failures):
        lines = "; ".join(f"{p}: {e}" for p, e in failures)
        super().__init__(f"every grid candidate failed: {lines}")
        self.failures = failures


# -- splits -----------------------------------------------------------------


def train_test_split(n: int, test_fraction: float = 0.2, seed: int = 42):
    """Seeded shuffle, then the first ``round(n * test_fraction)`` rows form the test set."""
    if n < 2:
        raise ValueError("need at least two rows to split")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(n)
    n_test = min(max(int(round(n * test_fraction)), 1), n - 1)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


@dataclass
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int

    @classmethod
    def make(cls, n: int, k: int = 5, seed: int = 42):
        """Contiguous blocks of a seeded permutation; sizes differ by at most one."""
        if k < 2:
            raise ValueError("k must be >= 2")
        if n < k:
            raise ValueError(f"cannot make {k} folds from {n} rows")
        perm = np.random.default_rng(seed).permutation(n)
        assignments = np.empty(n, dtype=np.int64)
        for f, block in enumerate(np.array_split(perm, k)):
            assignments[block] = f
        return cls(k, assignments, seed)

    @property
    def n(self):
        return self.assignments.shape[0]

    def split(self, fold):
        test = np.flatnonzero(self.assignments == fold)
        train = np.flatnonzero(self.assignments != fold)
        return train, test


# -- metrics ----------------------------------------------------------------


def _pair(y, yhat, min_len):
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1:
        raise ValueError("y and yhat must be 1-D and of equal length")
    if y.size < min_len:
        raise ValueError(f"need at least {min_len} values")
    return y, yhat


def mse(y, yhat) -> float:
    y, yhat = _pair(y, yhat, 1)
    r = y - yhat
    return float(np.mean(r * r))


def r2(y, yhat) -> float:
    y, yhat = _pair(y, yhat, 2)
    r = y - yhat
    sse = float(np.sum(r * r))
    c = y - y.mean()
    sst = float(np.sum(c * c))
    if sst == 0.0:
        if sse == 0.0:
            return 1.0
        raise UndefinedVarianceError("R^2 is undefined: target is constant but residuals are not")
    return 1.0 - sse / sst


@dataclass
class Metrics:
    mse: float
    r2: float

    @classmethod
    def of(cls, y, yhat):
        return cls(mse(y, yhat), r2(y, yhat))


# -- cross-validation and grid search --------------------------------------


@dataclass
class CVResult:
    folds: list[Metrics]

    @property
    def mse_scores(self):
        return [m.mse for m in self.folds]

    @property
    def mean_mse(self):
        return float(np.mean(self.mse_scores))

    @property
    def std_mse(self):
        return float(np.std(self.mse_scores))

    @property
    def mean_r2(self):
        """Mean over folds where R^2 is defined; NaN if none is."""
        vals = [m.r2 for m in self.folds if not math.isnan(m.r2)]
        return float(np.mean(vals)) if vals else math.nan

    def to_dict(self):
        return {
            "folds": [{"mse": m.mse, "r2": None if math.isnan(m.r2) else m.r2} for m in self.folds],
            "mean_mse": self.mean_mse,
            "std_mse": self.std_mse,
            "mean_r2": None if math.isnan(self.mean_r2) else self.mean_r2,
        }


def _fold_task(config, fm, plan, fold):
    train, test = plan.split(fold)
    try:
        model = fit_model(config, fm.take_rows(train))
        sub = fm.take_rows(test)
        yhat = predict(model, sub)
        try:
            fold_r2 = r2(sub.target, yhat)
        except ValueError:
            # single-row or constant-target fold: R^2 undefined, MSE still scores it
            fold_r2 = math.nan
        return Metrics(mse(sub.target, yhat), fold_r2)
    except Exception as exc:
        raise FoldError(fold, exc) from exc


def _run(tasks, n_jobs):
    if n_jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            futures = [pool.submit(t) for t in tasks]
            return [f.exception() or f.result() for f in futures]
    out = []
    for t in tasks:
        try:
            out.append(t())
        except Exception as exc:
            out.append(exc)
    return out


def cross_validate(config: ModelConfig, fm: FeatureMatrix, plan: FoldPlan, n_jobs: int = 1) -> CVResult:
    if plan.n != fm.n_rows:
        raise ValueError("fold plan does not cover the matrix rows")
    results = _run([lambda f=f: _fold_task(config, fm, plan, f) for f in range(plan.k)], n_jobs)
    for r in results:
        if isinstance(r, Exception):
            raise r
    return CVResult(results)


@dataclass
class Candidate:
    params: dict
    fold_mse: list[float] = field(default_factory=list)
    mean_mse: float = math.inf
    error: str | None = None


@dataclass
class GridSearchResult:
    family: str
    candidates: list[Candidate]
    best_index: int
    best_params: dict
    best_cv: CVResult
    model: TrainedModel

    def to_dict(self):
        return {
            "family": self.family,
            "best_index": self.best_index,
            "best_params": self.best_params,
            "best_cv": self.best_cv.to_dict(),
            "candidates": [asdict(c) for c in self.candidates],
        }


def grid_search(
    family: str,
    grid: Sequence[dict],
    fm: FeatureMatrix,
    plan: FoldPlan,
    seed: int = 42,
    n_jobs: int = 1,
) -> GridSearchResult:
    """k-fold CV of every candidate; the lowest mean MSE wins (earliest on ties).

    The winner is refit on all of ``fm``.
    """
    grid = [dict(g) for g in grid]
    if not grid:
        raise ValueError("grid is empty")
    configs = [ModelConfig(family, g, seed) for g in grid]
    for c in configs:
        c.resolved()  # reject bad candidates before any fitting
    tasks = [
        (ci, f, lambda c=c, f=f: _fold_task(c, fm, plan, f)) for ci, c in enumerate(configs) for f in range(plan.k)
    ]
    results = _run([t[2] for t in tasks], n_jobs)

    cands = [Candidate(g) for g in grid]
    per_fold = [[None] * plan.k for _ in grid]
    for (ci, f, _), r in zip(tasks, results):
        if isinstance(r, Exception):
            cands[ci].error = cands[ci].error or str(r)
        else:
            per_fold[ci][f] = r
    best = -1
    for ci, cand in enumerate(cands):
        if cand.error is None:
            cand.fold_mse = [m.mse for m in per_fold[ci]]
            cand.mean_mse = float(np.mean(cand.fold_mse))
            if best < 0 or cand.mean_mse < cands[best].mean_mse:
                best = ci
    if best < 0:
        raise GridSearchError([(c.params, c.error) for c in cands])
    model = fit_model(configs[best], fm)
    return GridSearchResult(family, cands, best, grid[best], CVResult(per_fold[best]), model)


# -- significance -----------------------------------------------------------


@dataclass
class TTestResult:
    t: float
    df: int
    p: float
    n: int
    mean_diff: float
    degenerate: bool = False

    def to_dict(self):
        return asdict(self)


def paired_t_test(errors_a, errors_b) -> TTestResult:
    """Two-sided paired t-test on ``errors_a - errors_b``."""
    a = np.asarray(errors_a, dtype=np.float64)
    b = np.asarray(errors_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("error sequences must be 1-D and aligned")
    n = a.size
    if n < 2:
        raise ValueError("need at least two pairs")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, n - 1, 1.0, n, 0.0)
        return TTestResult(math.copysign(math.inf, mean), n - 1, 0.0, n, mean, degenerate=True)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(t, n - 1, t_sf2(t, n - 1), n, mean)


# -- residuals --------------------------------------------------------------


@dataclass
class ResidualDiagnostics:
    mean: float
    std: float
    skewness: float
    excess_kurtosis: float
    heteroscedasticity: float
    degenerate: bool = False

    def to_dict(self):
        return asdict(self)


def spearman(a, b):
    """Spearman rank correlation (average ranks for ties); None if a side is constant."""
    ra = rankdata(a)
    rb = rankdata(b)
    ra = ra - ra.mean()
    rb = rb - rb.mean()
    den = math.sqrt(float(ra @ ra) * float(rb @ rb))
    if den == 0.0:
        return None
    return max(-1.0, min(1.0, float(ra @ rb) / den))


def residual_diagnostics(y, yhat) -> ResidualDiagnostics:
    """Moments of ``y - yhat`` and the rank correlation of ``|residual|`` with ``yhat``."""
    y, yhat = _pair(y, yhat, 3)
    r = y - yhat
    mean = float(r.mean())
    c = r - mean
    m2 = float(np.mean(c**2))
    if m2 > 0:
        skew = float(np.mean(c**3)) / m2**1.5
        kurt = float(np.mean(c**4)) / m2**2 - 3.0
    else:
        skew = kurt = 0.0
    rho = spearman(np.abs(r), yhat)
    return ResidualDiagnostics(
        mean=mean,
        std=float(r.std(ddof=1)),
        skewness=skew,
        excess_kurtosis=kurt,
        heteroscedasticity=0.0 if rho is None else rho,
        degenerate=rho is None,
    )
