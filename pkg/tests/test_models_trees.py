import numpy as np
import pytest

from delivery_eta.features import FeatureMatrix
from delivery_eta.models import fit_bagging, fit_gbdt, fit_random_forest, fit_tree, predict
from delivery_eta.models.trees import squared_loss, squared_loss_grad
from oracles import brute_tree_sse, finite_diff


def _fm(X, y):
    return FeatureMatrix.from_arrays(X, y)


def _tree(model):
    (t,) = model.predictor.trees
    return t


def test_step_function_depth_one(rng):
    x = rng.uniform(-1, 1, 200)
    y = (x > 0).astype(float)
    m = fit_tree(_fm(x, y), max_depth=1)
    t = _tree(m)
    assert t.n_leaves == 2 and abs(t.threshold[0]) < 0.05
    assert np.mean((m.predict_array(x[:, None]) - y) ** 2) == 0.0


def test_constant_target_single_leaf(rng):
    m = fit_tree(_fm(rng.normal(size=(30, 2)), np.full(30, 4.0)))
    assert _tree(m).n_nodes == 1
    np.testing.assert_array_equal(m.predict_array(rng.normal(size=(5, 2))), 4.0)


def test_four_plateaus_exact_recovery(rng):
    X = rng.uniform(0, 1, (160, 2))
    y = 10 * (X[:, 0] > 0.5) + 3 * (X[:, 1] > 0.3)
    m = fit_tree(_fm(X, y), max_depth=2)
    sse = np.sum((m.predict_array(X) - y) ** 2)
    assert sse == 0.0 == brute_tree_sse(X, y, 2)


def test_greedy_matches_brute_force(rng):
    for _ in range(30):
        n = int(rng.integers(5, 120))
        p = int(rng.integers(1, 4))
        X = np.round(rng.normal(size=(n, p)), 1)
        y = rng.normal(size=n)
        depth = int(rng.integers(1, 3))
        m = fit_tree(_fm(X, y), max_depth=depth)
        sse = float(np.sum((m.predict_array(X) - y) ** 2))
        assert sse == pytest.approx(brute_tree_sse(X, y, depth), rel=1e-9, abs=1e-9)


def test_tie_prefers_lower_feature_then_threshold(rng):
    x = rng.uniform(size=50)
    X = np.column_stack([x, x])
    y = (x > 0.5) * 1.0
    t = _tree(fit_tree(_fm(X, y), max_depth=1))
    assert t.feature[0] == 0
    # two thresholds with equal gain on one feature: 0,0 | 1,1 | 0,0 is symmetric
    t = _tree(fit_tree(_fm(np.arange(6.0), np.array([0, 0, 1, 1, 0, 0.0])), max_depth=1))
    assert t.threshold[0] == 1.5


def test_training_predictions_are_leaf_means(rng):
    X = rng.normal(size=(120, 3))
    y = rng.normal(size=120)
    m = fit_tree(_fm(X, y), max_depth=4, min_samples_leaf=3)
    t = _tree(m)
    leaf = t.apply(X)
    for j in np.unique(leaf):
        assert t.value[j] == pytest.approx(y[leaf == j].mean(), abs=1e-12)
        assert np.sum(leaf == j) >= 3
    assert t.depth() <= 4


def test_bagging_reduction_and_constant(rng):
    X = rng.normal(size=(100, 3))
    y = X[:, 0] ** 2 + rng.normal(size=100)
    t = fit_tree(_fm(X, y), max_depth=5)
    b = fit_bagging(_fm(X, y), max_depth=5, n_estimators=1, bootstrap=False)
    np.testing.assert_array_equal(t.predict_array(X), b.predict_array(X))
    c = fit_bagging(_fm(X, np.full(100, 2.5)), n_estimators=7)
    np.testing.assert_allclose(c.predict_array(X), 2.5, atol=1e-12)


def test_bagging_seed_determinism_and_workers(rng):
    X = rng.normal(size=(150, 4))
    y = X @ np.ones(4) + rng.normal(size=150)
    a = fit_bagging(_fm(X, y), n_estimators=8, seed=1)
    b = fit_bagging(_fm(X, y), n_estimators=8, seed=1, n_jobs=4)
    c = fit_bagging(_fm(X, y), n_estimators=8, seed=2)
    np.testing.assert_array_equal(a.predict_array(X), b.predict_array(X))
    assert not np.array_equal(a.predict_array(X), c.predict_array(X))


def test_forest_reduction_importances_and_mean(rng):
    X = rng.normal(size=(200, 4))
    y = 5 * X[:, 2] + 0.1 * rng.normal(size=200)
    t = fit_tree(_fm(X, y), max_depth=6)
    f1 = fit_random_forest(_fm(X, y), max_depth=6, n_estimators=1, m_try=4, bootstrap=False)
    np.testing.assert_array_equal(t.predict_array(X), f1.predict_array(X))
    f = fit_random_forest(_fm(X, y), n_estimators=50, m_try=2, seed=3)
    imp = f.feature_importances
    assert imp.sum() == pytest.approx(1.0, abs=1e-9) and np.all(imp >= 0)
    assert imp[2] > 0.8
    members = f.predictor.member_predictions(X)
    np.testing.assert_allclose(f.predict_array(X), members.mean(axis=0), atol=1e-12)
    with pytest.raises(ValueError):
        fit_random_forest(_fm(X, y), m_try=5)


def test_gbdt_single_round_is_cart(rng):
    X = rng.normal(size=(150, 3))
    y = np.sin(X[:, 0]) + X[:, 1] + 0.1 * rng.normal(size=150)
    g = fit_gbdt(_fm(X, y), n_estimators=1, learning_rate=1.0, lambda_l2=0.0, max_depth=3)
    t = fit_tree(_fm(X, y), max_depth=3)
    np.testing.assert_allclose(g.predict_array(X), t.predict_array(X), atol=1e-9)


@pytest.mark.parametrize("growth", ["LevelWise", "LeafWise"])
def test_gbdt_monotone_loss_and_leaf_values(rng, growth):
    X = rng.normal(size=(300, 4))
    y = X[:, 0] * X[:, 1] + X[:, 2] + 0.3 * rng.normal(size=300)
    lam, lr = 2.0, 0.3
    m = fit_gbdt(_fm(X, y), n_estimators=20, learning_rate=lr, growth=growth, lambda_l2=lam, max_depth=3,
                 max_leaves=8, histogram_bins=32)
    hist = m.info["train_mse"]
    assert len(hist) == 21 and all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))
    ens = m.predictor
    pred = np.full(300, ens.base)
    for t in ens.trees:
        g = pred - y
        leaf = t.apply(X)
        for j in np.unique(leaf):
            G, H = g[leaf == j].sum(), np.sum(leaf == j)
            assert t.value[j] == pytest.approx(-G / (H + lam), abs=1e-9)
        pred = pred + lr * t.predict(X)
    np.testing.assert_allclose(pred, m.predict_array(X), atol=1e-9)


def test_gbdt_leafwise_respects_max_leaves(rng):
    X = rng.normal(size=(500, 3))
    y = X.sum(axis=1) + rng.normal(size=500)
    m = fit_gbdt(_fm(X, y), n_estimators=5, growth="LeafWise", max_leaves=7)
    assert all(t.n_leaves <= 7 for t in m.predictor.trees)
    assert max(t.n_leaves for t in m.predictor.trees) == 7


def test_gbdt_l1_shrinks_leaves(rng):
    X = rng.normal(size=(200, 2))
    y = X[:, 0] + rng.normal(size=200)
    a = fit_gbdt(_fm(X, y), n_estimators=1, learning_rate=1.0, max_depth=2)
    b = fit_gbdt(_fm(X, y), n_estimators=1, learning_rate=1.0, max_depth=2, alpha_l1=5.0)
    va = np.abs(a.predictor.trees[0].value)
    vb = np.abs(b.predictor.trees[0].value)
    assert vb.sum() < va.sum()


def test_gbdt_degenerate_flag(rng):
    m = fit_gbdt(_fm(rng.normal(size=(40, 2)), np.full(40, 3.0)), n_estimators=5)
    assert m.info["degenerate"] and m.info["n_trees"] == 0
    np.testing.assert_array_equal(m.predict_array(np.zeros((3, 2))), 3.0)


def test_squared_loss_gradient(rng):
    y = rng.normal(size=8)
    yhat = rng.normal(size=8)
    fd = finite_diff(lambda v: squared_loss(y, v), yhat)
    np.testing.assert_allclose(squared_loss_grad(y, yhat), fd, rtol=1e-6)


def test_predict_empty_matrix(rng):
    m = fit_tree(_fm(rng.normal(size=(20, 2)), rng.normal(size=20)))
    assert predict(m, _fm(np.zeros((0, 2)), None)).shape == (0,)
