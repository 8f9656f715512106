import math

import numpy as np
import pytest

from delivery_eta.features import FeatureMatrix
from delivery_eta.select import SelectionResult, discretize, entropy, mutual_information, select_top_k
from oracles import entropy_counts, mi_counts


def test_discretize_examples(rng):
    assert discretize([1, 2, 3, 4], 2).tolist() == [0, 0, 1, 1]
    assert discretize([5, 5, 5], 4).tolist() == [0, 0, 0]
    counts = np.bincount(discretize(rng.uniform(size=1000), 10), minlength=10)
    assert np.all(np.abs(counts - 100) <= 1)


def test_discretize_ties_go_low():
    assert discretize([1, 1, 1, 2], 2).tolist() == [0, 0, 0, 1]
    with pytest.raises(ValueError):
        discretize([1.0], 1)


def test_mi_identical_uniform(rng):
    x = rng.integers(0, 4, 10_000)
    assert mutual_information(x, x) == pytest.approx(math.log(4), abs=0.01)


def test_mi_independent(rng):
    x = rng.integers(0, 4, 10_000)
    y = rng.integers(0, 4, 10_000)
    assert 0.0 <= mutual_information(x, y) <= 0.01


def test_mi_against_count_oracle(rng):
    x = rng.integers(0, 5, 700)
    y = (x + rng.integers(0, 3, 700)) % 6
    assert mutual_information(x, y) == pytest.approx(mi_counts(x.tolist(), y.tolist()), abs=1e-12)
    assert mutual_information(x, y) == pytest.approx(mutual_information(y, x), abs=1e-12)
    assert entropy(x) == pytest.approx(entropy_counts(x.tolist()), abs=1e-12)


def test_mi_self_equals_entropy_exactly(rng):
    x = rng.integers(0, 9, 1234)
    assert mutual_information(x, x) == entropy(x)


def test_mi_contract_errors():
    with pytest.raises(ValueError):
        mutual_information([0, 1], [0])
    with pytest.raises(ValueError):
        mutual_information([], [])


def _matrix(cols, y):
    names = list(cols)
    return FeatureMatrix.from_arrays(np.column_stack([cols[n] for n in names]), y, names)


def test_select_signal_over_noise(rng):
    y = rng.normal(size=2000)
    fm = _matrix({"noise": rng.normal(size=2000), "signal": y.copy()}, y)
    res = select_top_k(fm, k=1)
    assert res.kept == ["signal"]
    assert [s.column for s in res.scores] == ["signal", "noise"]


def test_select_saturates_and_ties_by_name(rng):
    y = rng.normal(size=500)
    x = y + rng.normal(size=500)
    fm = _matrix({"b": x, "a": x.copy(), "c": rng.normal(size=500)}, y)
    assert select_top_k(fm, k=1).kept == ["a"]
    res = select_top_k(fm, k=10)
    assert res.kept == [s.column for s in res.scores] and len(res.kept) == 3
    scores = [s.score for s in res.scores]
    assert scores == sorted(scores, reverse=True) and min(scores) >= 0


def test_select_constant_column_does_not_disturb(rng):
    y = rng.normal(size=800)
    cols = {f"x{i}": y * (i % 3) + rng.normal(size=800) for i in range(6)}
    base = select_top_k(_matrix(cols, y), k=3).kept
    more = select_top_k(_matrix({**cols, "const": np.full(800, 2.0)}, y), k=3).kept
    assert base == more


def test_select_deterministic_and_serializable(rng):
    y = rng.normal(size=300)
    fm = _matrix({"u": rng.normal(size=300), "v": y ** 2}, y)
    a, b = select_top_k(fm, 1), select_top_k(fm, 1)
    assert a == b
    assert SelectionResult.from_dict(a.to_dict()) == a


def test_select_contract_errors():
    with pytest.raises(ValueError):
        select_top_k(FeatureMatrix.from_arrays(np.zeros((0, 2)), np.zeros(0)), 1)
    with pytest.raises(ValueError):
        select_top_k(FeatureMatrix.from_arrays(np.zeros((3, 2)), np.zeros(3)), 0)
