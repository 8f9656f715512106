"""Epsilon-insensitive support vector regression trained by SMO.

The dual is written over ``2n`` variables ``a = (alpha, alpha*)`` with signs
``s = (+1, -1)``:

    min 1/2 a'Qa + p'a   s.t.  s'a = 0,  0 <= a <= C

where ``Q_tu = s_t s_u K(x_t, x_u)``, ``p = (eps - y, eps + y)``. Each step
optimizes one pair picked by maximal violation plus second-order gain.
The regression coefficients are ``beta = alpha - alpha*``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._accel import active_backend, njit
from .._seeding import derive_seed
from .base import TrainedModel

TAU = 1e-12


def kernel_matrix(A, B, kernel, gamma):
    if kernel == "Linear":
        return A @ B.T
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


def _pair_update(ai, aj, Gi, Gj, si, sj, Kii, Kjj, Kij, C):
    # analytic two-variable step with box clipping
    if si != sj:
        quad = Kii + Kjj + 2.0 * (si * sj * Kij)
        if quad <= 0.0:
            quad = TAU
        delta = (-Gi - Gj) / quad
        diff = ai - aj
        ai += delta
        aj += delta
        if diff > 0.0:
            if aj < 0.0:
                aj = 0.0
                ai = diff
        else:
            if ai < 0.0:
                ai = 0.0
                aj = -diff
        if diff > 0.0:
            if ai > C:
                ai = C
                aj = C - diff
        else:
            if aj > C:
                aj = C
                ai = C + diff
    else:
        quad = Kii + Kjj - 2.0 * (si * sj * Kij)
        if quad <= 0.0:
            quad = TAU
        delta = (Gi - Gj) / quad
        total = ai + aj
        ai -= delta
        aj += delta
        if total > C:
            if ai > C:
                ai = C
                aj = total - C
        else:
            if aj < 0.0:
                aj = 0.0
                ai = total
        if total > C:
            if aj > C:
                aj = C
                ai = total - C
        else:
            if ai < 0.0:
                ai = 0.0
                aj = total
    return ai, aj


_pair_update_nb = njit(_pair_update)


def _rho(alpha, G, s, C):
    ub, lb = np.inf, -np.inf
    nfree, sfree = 0, 0.0
    for t in range(alpha.shape[0]):
        yG = s[t] * G[t]
        if alpha[t] >= C:
            if s[t] < 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        elif alpha[t] <= 0.0:
            if s[t] > 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        else:
            nfree += 1
            sfree += yG
    if nfree > 0:
        return sfree / nfree
    return 0.5 * (ub + lb)


_rho_nb = njit(_rho)


@njit
def _smo_nb(K, y, C, eps, tol, max_iter):
    n = y.shape[0]
    m = 2 * n
    alpha = np.zeros(m)
    G = np.empty(m)
    s = np.empty(m)
    for i in range(n):
        s[i] = 1.0
        s[i + n] = -1.0
        G[i] = eps - y[i]
        G[i + n] = eps + y[i]
    it = 0
    gap = np.inf
    while it < max_iter:
        Gmax = -np.inf
        i = -1
        for t in range(m):
            if s[t] > 0:
                if alpha[t] < C and -G[t] > Gmax:
                    Gmax = -G[t]
                    i = t
            else:
                if alpha[t] > 0 and G[t] > Gmax:
                    Gmax = G[t]
                    i = t
        if i < 0:
            gap = 0.0
            break
        ki = i if i < n else i - n
        Gmax2 = -np.inf
        j = -1
        objmin = np.inf
        for t in range(m):
            kt = t if t < n else t - n
            if s[t] > 0:
                low = alpha[t] > 0
                v = G[t]
            else:
                low = alpha[t] < C
                v = -G[t]
            if not low:
                continue
            if v > Gmax2:
                Gmax2 = v
            gd = Gmax + v
            if gd > 0:
                quad = K[ki, ki] + K[kt, kt] - 2.0 * K[ki, kt]
                if not quad > 0:
                    quad = TAU
                obj = -(gd * gd) / quad
                if obj < objmin:
                    objmin = obj
                    j = t
        gap = Gmax + Gmax2
        if gap < tol or j < 0:
            break
        kj = j if j < n else j - n
        ai_old = alpha[i]
        aj_old = alpha[j]
        ai, aj = _pair_update_nb(ai_old, aj_old, G[i], G[j], s[i], s[j], K[ki, ki], K[kj, kj], K[ki, kj], C)
        alpha[i] = ai
        alpha[j] = aj
        dai = ai - ai_old
        daj = aj - aj_old
        for t in range(m):
            kt = t if t < n else t - n
            G[t] += (s[t] * s[i] * K[kt, ki]) * dai + (s[t] * s[j] * K[kt, kj]) * daj
        it += 1
    rho = _rho_nb(alpha, G, s, C)
    return alpha, G, rho, gap, it


def _smo_np(K, y, C, eps, tol, max_iter):
    n = y.shape[0]
    s = np.concatenate([np.ones(n), -np.ones(n)])
    G = np.concatenate([eps - y, eps + y])
    alpha = np.zeros(2 * n)
    kidx = np.concatenate([np.arange(n), np.arange(n)])
    Kd = np.diag(K)[kidx]
    it = 0
    gap = np.inf
    while it < max_iter:
        up = np.where(s > 0, alpha < C, alpha > 0)
        v1 = np.where(up, -s * G, -np.inf)
        i = int(np.argmax(v1))
        Gmax = v1[i]
        if Gmax == -np.inf:
            gap = 0.0
            break
        low = np.where(s > 0, alpha > 0, alpha < C)
        v2 = np.where(low, s * G, -np.inf)
        Gmax2 = v2.max()
        Ki = K[kidx[i], kidx]
        gd = Gmax + v2
        quad = Kd[i] + Kd - 2.0 * Ki
        quad = np.where(quad > 0, quad, TAU)
        with np.errstate(invalid="ignore"):
            obj = np.where(low & (gd > 0), -(gd * gd) / quad, np.inf)
        j = int(np.argmin(obj))
        gap = Gmax + Gmax2
        if gap < tol or obj[j] == np.inf:
            break
        ki, kj = kidx[i], kidx[j]
        ai, aj = _pair_update(alpha[i], alpha[j], G[i], G[j], s[i], s[j], K[ki, ki], K[kj, kj], K[ki, kj], C)
        dai, daj = ai - alpha[i], aj - alpha[j]
        alpha[i], alpha[j] = ai, aj
        Kj = K[kj, kidx]
        G += (s * s[i] * Ki) * dai + (s * s[j] * Kj) * daj
        it += 1
    rho = _rho(alpha, G, s, C)
    return alpha, G, rho, gap, it


@dataclass
class SmoResult:
    alpha: np.ndarray
    alpha_star: np.ndarray
    b: float
    gap: float
    n_iter: int
    converged: bool

    @property
    def beta(self):
        return self.alpha - self.alpha_star


def smo_solve(K, y, C, epsilon, tol=1e-3, max_iter=None) -> SmoResult:
    """Solve the SVR dual for a precomputed kernel matrix ``K``."""
    K = np.asarray(K, dtype=np.float64)
    K = np.ascontiguousarray(0.5 * (K + K.T))
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[0]
    if max_iter is None:
        max_iter = 200 * max(n, 1)
    solver = _smo_nb if active_backend() == "numba" else _smo_np
    alpha, _, rho, gap, it = solver(K, y, float(C), float(epsilon), float(tol), int(max_iter))
    return SmoResult(alpha[:n].copy(), alpha[n:].copy(), -float(rho), float(gap), int(it), bool(gap < tol))


def kkt_violations(res: SmoResult, K, y, C, epsilon):
    """Per-row distance from the optimality conditions, in target units."""
    r = y - (K @ res.beta + res.b)
    out = np.zeros(y.shape[0])
    for a, target, sign in ((res.alpha, epsilon, 1.0), (res.alpha_star, -epsilon, -1.0)):
        # sign=+1: alpha rows want r <= eps at 0, r == eps free, r >= eps at C
        d = sign * (r - target)
        v = np.where(a <= 0.0, np.maximum(d, 0.0), np.where(a >= C, np.maximum(-d, 0.0), np.abs(d)))
        out = np.maximum(out, v)
    return out


class SvrPredictor:
    kind = "svr"

    def __init__(self, kernel, gamma, mean, scale, support, coef, b):
        self.kernel = kernel
        self.gamma = float(gamma)
        self.mean = np.asarray(mean, dtype=np.float64)
        self.scale = np.asarray(scale, dtype=np.float64)
        self.support = np.asarray(support, dtype=np.float64).reshape(-1, self.mean.shape[0])
        self.coef = np.asarray(coef, dtype=np.float64)
        self.b = float(b)

    def predict(self, X, chunk=4096):
        Z = (X - self.mean) / self.scale
        out = np.empty(Z.shape[0])
        for a in range(0, Z.shape[0], chunk):
            Kz = kernel_matrix(Z[a : a + chunk], self.support, self.kernel, self.gamma)
            out[a : a + chunk] = Kz @ self.coef + self.b
        return out

    def to_dict(self):
        return {
            "kind": self.kind,
            "kernel": self.kernel,
            "gamma": self.gamma,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "support": self.support.tolist(),
            "coef": self.coef.tolist(),
            "b": self.b,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["kernel"], d["gamma"], d["mean"], d["scale"], d["support"], d["coef"], d["b"])


def fit_svr(
    fm,
    kernel="Rbf",
    c=1.0,
    epsilon=0.1,
    gamma=0.1,
    tol=1e-3,
    max_passes=200,
    max_train_rows=8000,
    seed=42,
):
    """Fit an epsilon-SVR on standardized features.

    Training sets larger than ``max_train_rows`` are reduced by seeded
    uniform sampling without replacement.
    """
    X = np.asarray(fm.values, dtype=np.float64)
    y = np.asarray(fm.target, dtype=np.float64)
    n = X.shape[0]
    if n == 0:
        raise ValueError("cannot fit on an empty matrix")
    if n > max_train_rows:
        rng = np.random.default_rng(derive_seed(seed, "svr-subsample"))
        rows = np.sort(rng.choice(n, size=max_train_rows, replace=False))
        X, y = X[rows], y[rows]
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale
    K = kernel_matrix(Z, Z, kernel, gamma)
    res = smo_solve(K, y, c, epsilon, tol, max_passes * Z.shape[0])
    del K
    beta = res.beta
    sv = np.flatnonzero(beta != 0.0)
    params = dict(
        kernel=kernel, c=c, epsilon=epsilon, gamma=gamma, tol=tol, max_passes=max_passes, max_train_rows=max_train_rows
    )
    return TrainedModel(
        "Svr",
        params,
        list(fm.column_names),
        SvrPredictor(kernel, gamma, mean, scale, Z[sv], beta[sv], res.b),
        info={
            "converged": res.converged,
            "kkt_gap": res.gap,
            "n_iter": res.n_iter,
            "n_support": int(sv.size),
            "n_train": int(Z.shape[0]),
        },
        seed=seed,
    )
