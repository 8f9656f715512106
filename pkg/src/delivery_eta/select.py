"""Mutual-information feature ranking (plug-in estimator over quantile bins)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureMatrix


@dataclass(frozen=True)
class MiScore:
    column: str
    score: float


@dataclass
class SelectionResult:
    scores: list[MiScore]
    kept: list[str]

    def to_dict(self):
        return {"scores": [{"column": s.column, "score": s.score} for s in self.scores], "kept": list(self.kept)}

    @classmethod
    def from_dict(cls, d):
        return cls([MiScore(s["column"], s["score"]) for s in d["scores"]], list(d["kept"]))


def discretize(values, bins: int) -> np.ndarray:
    """Equal-frequency binning.

    A value's bin is ``floor(r * bins / n)`` where ``r`` is the number of
    values strictly below it, so tied values share the lowest bin any of
    them would reach.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    x = np.asarray(values, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    rank = np.searchsorted(np.sort(x), x, side="left")
    return (rank * bins) // n


def _dense_codes(x):
    _, codes = np.unique(x, return_inverse=True)
    return codes.ravel()


def mutual_information(x, y) -> float:
    """Plug-in MI (nats) between two integer-coded sequences."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D sequences of equal length")
    if x.size == 0:
        raise ValueError("empty input")
    n = x.size
    xc = _dense_codes(x)
    yc = _dense_codes(y)
    kx, ky = xc.max() + 1, yc.max() + 1
    joint = np.bincount(xc * ky + yc, minlength=kx * ky).reshape(kx, ky) / n
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    i, j = np.nonzero(joint)
    pij = joint[i, j]
    mi = np.sum(pij * ((np.log(pij) - np.log(px[i])) - np.log(py[j])))
    return max(float(mi), 0.0)


def entropy(x) -> float:
    """Plug-in entropy (nats) of an integer-coded sequence."""
    xc = _dense_codes(np.asarray(x))
    p = np.bincount(xc) / xc.size
    p = p[p > 0]
    return float(np.sum(p * (0.0 - np.log(p))))


def _codes_for(col, bins):
    # integer-valued columns with few levels are already categorical
    if np.all(col == np.round(col)) and np.unique(col).size <= bins:
        return _dense_codes(col)
    return discretize(col, bins)


def select_top_k(m: FeatureMatrix, k: int = 10, bins: int = 16) -> SelectionResult:
    """Rank columns by MI with the target and keep the best ``k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if m.n_rows == 0 or m.n_cols == 0 or m.target is None:
        raise ValueError("cannot select features from an empty matrix")
    ycodes = _codes_for(m.target, bins)
    scores = [
        MiScore(name, mutual_information(_codes_for(m.values[:, j], bins), ycodes))
        for j, name in enumerate(m.column_names)
    ]
    scores.sort(key=lambda s: (-s.score, s.column))
    kept = [s.column for s in scores[: min(k, len(scores))]]
    return SelectionResult(scores, kept)
