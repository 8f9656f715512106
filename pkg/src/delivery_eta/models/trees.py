"""CART regression trees, bagging, random forests and gradient boosting."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .._seeding import derive_seed
from . import _tree_kernels as K
from .base import TrainedModel


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    @property
    def n_leaves(self):
        return int(np.sum(self.feature < 0))

    def depth(self):
        d = np.zeros(self.n_nodes, dtype=np.int64)
        for j in range(self.n_nodes):
            if self.feature[j] >= 0:
                d[self.left[j]] = d[self.right[j]] = d[j] + 1
        return int(d.max()) if d.size else 0

    def apply(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        return K.kernels()["apply"](X, self.feature, self.threshold, self.left, self.right)

    def predict(self, X):
        return self.value[self.apply(X)]

    def with_offset(self, offset):
        return Tree(self.feature, self.threshold, self.left, self.right, offset + self.value, self.count, self.gain)

    def to_dict(self):
        def node(j):
            d = {"value": float(self.value[j]), "count": int(self.count[j])}
            if self.feature[j] >= 0:
                d.update(
                    feature=int(self.feature[j]),
                    threshold=float(self.threshold[j]),
                    gain=float(self.gain[j]),
                    left=node(self.left[j]),
                    right=node(self.right[j]),
                )
            return d

        return node(0)

    @classmethod
    def from_dict(cls, root):
        cols = {k: [] for k in ("feature", "threshold", "left", "right", "value", "count", "gain")}
        queue = [root]
        i = 0
        while i < len(queue):
            d = queue[i]
            leaf = "feature" not in d
            cols["feature"].append(-1 if leaf else d["feature"])
            cols["threshold"].append(0.0 if leaf else d["threshold"])
            cols["gain"].append(0.0 if leaf else d["gain"])
            cols["value"].append(d["value"])
            cols["count"].append(d["count"])
            if leaf:
                cols["left"].append(-1)
                cols["right"].append(-1)
            else:
                cols["left"].append(len(queue))
                cols["right"].append(len(queue) + 1)
                queue.extend([d["left"], d["right"]])
            i += 1
        f64, i64 = np.float64, np.int64
        return cls(
            np.array(cols["feature"], dtype=i64),
            np.array(cols["threshold"], dtype=f64),
            np.array(cols["left"], dtype=i64),
            np.array(cols["right"], dtype=i64),
            np.array(cols["value"], dtype=f64),
            np.array(cols["count"], dtype=i64),
            np.array(cols["gain"], dtype=f64),
        )


class TreeEnsemble:
    """``base + scale * sum(tree(x))``, or the mean of the trees when ``average``."""

    kind = "trees"

    def __init__(self, trees, base=0.0, scale=1.0, average=False):
        self.trees = list(trees)
        self.base = float(base)
        self.scale = float(scale)
        self.average = bool(average)
        self._pack()

    def _pack(self):
        ts = self.trees
        self._offsets = np.zeros(len(ts) + 1, dtype=np.int64)
        if ts:
            self._offsets[1:] = np.cumsum([t.n_nodes for t in ts])
            cat = lambda a: np.ascontiguousarray(np.concatenate([getattr(t, a) for t in ts]))
            self._packed = tuple(cat(a) for a in ("feature", "threshold", "left", "right", "value"))
        else:
            empty_i = np.zeros(0, dtype=np.int64)
            empty_f = np.zeros(0)
            self._packed = (empty_i, empty_f, empty_i, empty_i, empty_f)

    def predict(self, X):
        out = np.full(X.shape[0], 0.0 if self.average else self.base)
        out = K.kernels()["accumulate"](X, out, 1.0 if self.average else self.scale, *self._packed, self._offsets)
        if self.average:
            out = out / len(self.trees)
        return out

    def member_predictions(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        return np.stack([t.predict(X) for t in self.trees]) if self.trees else np.zeros((0, X.shape[0]))

    def to_dict(self):
        return {
            "kind": self.kind,
            "base": self.base,
            "scale": self.scale,
            "average": self.average,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d):
        return cls([Tree.from_dict(t) for t in d["trees"]], d["base"], d["scale"], d["average"])


def _xy(fm):
    X = np.ascontiguousarray(fm.values, dtype=np.float64)
    if fm.target is None:
        raise ValueError("feature matrix has no target")
    y = np.ascontiguousarray(fm.target, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("cannot fit on an empty matrix")
    return X, y


def grow_exact_tree(
    Xr,
    g,
    h,
    max_depth=None,
    min_samples_split=2,
    min_samples_leaf=1,
    lambda_l2=0.0,
    alpha_l1=0.0,
    min_gain=0.0,
    m_try=None,
    seed=0,
    order=None,
):
    """Grow one exact greedy tree on gradient statistics; returns ``(tree, leaf_of_row)``."""
    Xr = np.ascontiguousarray(Xr, dtype=np.float64)
    p = Xr.shape[1]
    order = K.presort(Xr) if order is None else order.copy()
    out = K.kernels()["grow_exact"](
        Xr,
        order,
        np.ascontiguousarray(g, dtype=np.float64),
        np.ascontiguousarray(h, dtype=np.float64),
        -1 if max_depth is None else int(max_depth),
        int(min_samples_split),
        int(min_samples_leaf),
        float(lambda_l2),
        float(alpha_l1),
        float(min_gain),
        int(p if m_try is None else m_try),
        int(seed),
    )
    return Tree(*out[:7]), out[7]


def _cart(Xr, yr, max_depth, min_samples_split, min_samples_leaf, m_try=None, seed=0):
    ybar = float(np.mean(yr))
    g = ybar - yr
    tree, leaf_of = grow_exact_tree(
        Xr, g, np.ones_like(yr), max_depth, min_samples_split, min_samples_leaf, m_try=m_try, seed=seed
    )
    tree = tree.with_offset(ybar)
    # leaves hold the plain sample mean, not ybar plus a rounded correction
    sums = np.bincount(leaf_of, weights=yr, minlength=tree.n_nodes)
    cnt = np.bincount(leaf_of, minlength=tree.n_nodes)
    leaf = cnt > 0
    tree.value[leaf] = sums[leaf] / cnt[leaf]
    return tree


def _importances(trees, p):
    imp = np.zeros(p)
    for t in trees:
        split = t.feature >= 0
        np.add.at(imp, t.feature[split], t.gain[split])
    total = imp.sum()
    return imp / total if total > 0 else imp


def fit_tree(fm, max_depth=None, min_samples_split=2, min_samples_leaf=1, seed=42):
    """Greedy CART regression tree (variance reduction, midpoint thresholds)."""
    X, y = _xy(fm)
    tree = _cart(X, y, max_depth, min_samples_split, min_samples_leaf)
    params = dict(max_depth=max_depth, min_samples_split=min_samples_split, min_samples_leaf=min_samples_leaf)
    return TrainedModel(
        "Tree",
        params,
        list(fm.column_names),
        TreeEnsemble([tree]),
        info={"n_leaves": tree.n_leaves, "depth": tree.depth()},
        feature_importances=_importances([tree], X.shape[1]),
        seed=seed,
    )


def _fit_members(X, y, n_estimators, bootstrap, seed, n_jobs, tree_kw, m_try):
    n = X.shape[0]

    def one(i):
        s = derive_seed(seed, "member", i)
        if bootstrap:
            rows = np.sort(np.random.default_rng(s).integers(0, n, n))
            Xr, yr = X[rows], y[rows]
        else:
            Xr, yr = X, y
        return _cart(Xr, yr, m_try=m_try, seed=s, **tree_kw)

    if n_jobs > 1 and n_estimators > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(one, range(n_estimators)))
    return [one(i) for i in range(n_estimators)]


def fit_bagging(
    fm,
    max_depth=None,
    min_samples_split=2,
    min_samples_leaf=1,
    n_estimators=10,
    bootstrap=True,
    n_jobs=1,
    seed=42,
):
    """Average of CART trees fit on bootstrap resamples."""
    X, y = _xy(fm)
    tree_kw = dict(max_depth=max_depth, min_samples_split=min_samples_split, min_samples_leaf=min_samples_leaf)
    trees = _fit_members(X, y, n_estimators, bootstrap, seed, n_jobs, tree_kw, None)
    params = dict(tree_kw, n_estimators=n_estimators, bootstrap=bootstrap, n_jobs=n_jobs)
    return TrainedModel(
        "Bagging",
        params,
        list(fm.column_names),
        TreeEnsemble(trees, average=True),
        feature_importances=_importances(trees, X.shape[1]),
        seed=seed,
    )


def fit_random_forest(
    fm,
    max_depth=None,
    min_samples_split=2,
    min_samples_leaf=1,
    n_estimators=100,
    m_try=None,
    bootstrap=True,
    n_jobs=1,
    seed=42,
):
    """Bagging plus ``m_try`` candidate features drawn afresh at every node.

    ``m_try=None`` uses ``max(1, n_cols // 3)``.
    """
    X, y = _xy(fm)
    p = X.shape[1]
    if m_try is None:
        m_try = max(1, p // 3)
    if not 1 <= m_try <= p:
        raise ValueError(f"m_try must be in [1, {p}], got {m_try}")
    tree_kw = dict(max_depth=max_depth, min_samples_split=min_samples_split, min_samples_leaf=min_samples_leaf)
    trees = _fit_members(X, y, n_estimators, bootstrap, seed, n_jobs, tree_kw, m_try)
    params = dict(tree_kw, n_estimators=n_estimators, m_try=m_try, bootstrap=bootstrap, n_jobs=n_jobs)
    return TrainedModel(
        "RandomForest",
        params,
        list(fm.column_names),
        TreeEnsemble(trees, average=True),
        feature_importances=_importances(trees, p),
        seed=seed,
    )


def squared_loss(y, yhat):
    """Half sum of squared errors; its gradient in ``yhat`` is ``yhat - y``."""
    r = np.asarray(yhat, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return 0.5 * float(np.dot(r, r))


def squared_loss_grad(y, yhat):
    return np.asarray(yhat, dtype=np.float64) - np.asarray(y, dtype=np.float64)


def fit_gbdt(
    fm,
    n_estimators=100,
    learning_rate=0.1,
    growth="LevelWise",
    max_depth=6,
    max_leaves=31,
    lambda_l2=1.0,
    alpha_l1=0.0,
    min_gain=0.0,
    histogram_bins=255,
    min_samples_leaf=None,
    seed=42,
):
    """Gradient-boosted trees on squared loss with second-order leaves.

    ``growth="LevelWise"`` grows exact trees breadth-first to ``max_depth``.
    ``growth="LeafWise"`` repeatedly splits the best leaf of a quantile
    histogram tree until it has ``max_leaves`` leaves (``max_depth`` is not
    applied). ``min_samples_leaf`` defaults to 1 level-wise, 20 leaf-wise.
    """
    X, y = _xy(fm)
    n, p = X.shape
    if min_samples_leaf is None:
        min_samples_leaf = 1 if growth == "LevelWise" else 20
    base = float(np.mean(y))
    pred = np.full(n, base)
    h = np.ones(n)
    lr = float(learning_rate)

    if growth == "LevelWise":
        order = K.presort(X)
    elif growth == "LeafWise":
        cuts, nbins = K.make_bins(X, histogram_bins)
        codes = K.bin_codes(X, cuts, nbins)
    else:
        raise ValueError(f"unknown growth policy {growth!r}")

    trees = []
    history = [float(np.mean((y - pred) ** 2))]
    degenerate = False
    for t in range(n_estimators):
        g = pred - y
        if growth == "LevelWise":
            tree, leaf_of = grow_exact_tree(
                X, g, h, max_depth, 2, min_samples_leaf, lambda_l2, alpha_l1, min_gain, order=order
            )
        else:
            out = K.kernels()["grow_hist"](
                codes, nbins, cuts, g, h, int(max_leaves), -1, int(min_samples_leaf),
                float(lambda_l2), float(alpha_l1), float(min_gain),
            )
            tree, leaf_of = Tree(*out[:7]), out[7]
        if t == 0 and tree.n_nodes == 1:
            degenerate = True
            break
        trees.append(tree)
        pred = pred + lr * tree.value[leaf_of]
        history.append(float(np.mean((y - pred) ** 2)))

    params = dict(
        n_estimators=n_estimators,
        learning_rate=learning_rate,
        growth=growth,
        max_depth=max_depth,
        max_leaves=max_leaves,
        lambda_l2=lambda_l2,
        alpha_l1=alpha_l1,
        min_gain=min_gain,
        histogram_bins=histogram_bins,
        min_samples_leaf=min_samples_leaf,
    )
    return TrainedModel(
        "Gbdt",
        params,
        list(fm.column_names),
        TreeEnsemble(trees, base=base, scale=lr),
        info={"degenerate": degenerate, "n_trees": len(trees), "train_mse": history},
        feature_importances=_importances(trees, p),
        seed=seed,
    )
