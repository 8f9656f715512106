"""Ordinary least squares and elastic-net regression."""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .base import TrainedModel


class SingularDesignError(ValueError):
    def __init__(self, columns):
        super().__init__(f"design matrix is rank deficient; dependent columns: {columns}")
        self.columns = columns


class LinearPredictor:
    kind = "linear"

    def __init__(self, coef, intercept):
        self.coef = np.asarray(coef, dtype=np.float64)
        self.intercept = float(intercept)

    def predict(self, X):
        return X @ self.coef + self.intercept

    def to_dict(self):
        return {"kind": self.kind, "coef": self.coef.tolist(), "intercept": self.intercept}

    @classmethod
    def from_dict(cls, d):
        return cls(d["coef"], d["intercept"])


def fit_linear(fm, min_norm=False, seed=42):
    """OLS with intercept via column-pivoted QR.

    A rank-deficient design raises :class:`SingularDesignError` naming the
    dependent columns, unless ``min_norm`` is set, in which case the
    minimum-norm least-squares solution is returned.
    """
    X = np.asarray(fm.values, dtype=np.float64)
    y = np.asarray(fm.target, dtype=np.float64)
    n, p = X.shape
    if n <= p:
        raise ValueError(f"need more rows than columns (got {n} x {p})")
    A = np.column_stack([np.ones(n), X])
    Q, R, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    tol = d[0] * max(A.shape) * np.finfo(np.float64).eps
    rank = int(np.sum(d > tol))
    if rank < p + 1:
        names = ["(intercept)"] + list(fm.column_names)
        dependent = [names[j] for j in piv[rank:]]
        if not min_norm:
            raise SingularDesignError(dependent)
        beta = np.linalg.lstsq(A, y, rcond=None)[0]
    else:
        beta = np.empty(p + 1)
        beta[piv] = scipy.linalg.solve_triangular(R, Q.T @ y)
    return TrainedModel(
        "Linear",
        {"min_norm": min_norm},
        list(fm.column_names),
        LinearPredictor(beta[1:], beta[0]),
        info={"rank": rank},
        seed=seed,
    )


def soft_threshold(z, gamma):
    return np.sign(z) * max(abs(z) - gamma, 0.0)


def fit_elastic_net(fm, alpha=0.1, l1_ratio=0.5, tol=1e-6, max_iter=10_000, seed=42):
    """Cyclic coordinate descent on standardized columns.

    Minimizes ``(1/2n)||y - Xw||^2 + alpha * (l1_ratio * |w|_1 +
    (1 - l1_ratio)/2 * |w|^2)`` with standardized ``X`` and centered ``y``,
    then maps the coefficients back to the original scale. Sweeps stop
    when the largest coefficient change falls below ``tol``; the result
    carries ``info["converged"]``.
    """
    X = np.asarray(fm.values, dtype=np.float64)
    y = np.asarray(fm.target, dtype=np.float64)
    n, p = X.shape
    if n == 0:
        raise ValueError("cannot fit on an empty matrix")
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    const = sd == 0
    sd[const] = 1.0
    Z = (X - mu) / sd
    Z[:, const] = 0.0
    ybar = float(y.mean())
    yc = y - ybar
    gram = Z.T @ Z / n
    corr = Z.T @ yc / n

    l1 = alpha * l1_ratio
    l2 = alpha * (1.0 - l1_ratio)
    w = np.zeros(p)
    converged = False
    n_iter = 0
    delta = np.inf
    for n_iter in range(1, max_iter + 1):
        delta = 0.0
        for j in range(p):
            if const[j]:
                continue
            rho = corr[j] - gram[j] @ w + gram[j, j] * w[j]
            new = soft_threshold(rho, l1) / (gram[j, j] + l2)
            delta = max(delta, abs(new - w[j]))
            w[j] = new
        if delta < tol:
            converged = True
            break

    coef = w / sd
    intercept = ybar - float(coef @ mu)
    return TrainedModel(
        "ElasticNet",
        {"alpha": alpha, "l1_ratio": l1_ratio, "tol": tol, "max_iter": max_iter},
        list(fm.column_names),
        LinearPredictor(coef, intercept),
        info={"converged": converged, "n_iter": n_iter, "last_change": float(delta), "coef_std": w.tolist()},
        seed=seed,
    )
