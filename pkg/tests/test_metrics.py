import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import brute_dtw, brute_lcss, monotone_paths
from tildeq.metrics import LcssConfig, dtw, evaluate, evaluate_batch, is_valid_path, lcss, mse, tdi


def test_dtw_identical_is_zero_on_diagonal():
    y = np.array([0.3, -1.0, 2.0, 0.5])
    value, path = dtw(y, y)
    assert value == 0.0
    assert path == [(i, i) for i in range(4)]


def test_dtw_worked_example():
    value, path = dtw([0, 1, 0], [0, 0, 1])
    assert value == pytest.approx(1.0)
    assert value == pytest.approx(brute_dtw([0, 1, 0], [0, 0, 1]))
    assert path == [(0, 0), (0, 1), (1, 2), (2, 2)]
    assert tdi(path) == pytest.approx(2 / 9)


def test_dtw_constant_gap():
    y = np.array([0.0, 1.0, -1.0, 2.0])
    value, path = dtw(y, y + 0.5)
    assert value == pytest.approx(4 * 0.25)
    assert value == pytest.approx(brute_dtw(y, y + 0.5))


def _preferred_optimal_path(y, p):
    # read backwards, steps rank diagonal < i-advancing < j-advancing
    rank = {(1, 1): 0, (1, 0): 1, (0, 1): 2}
    paths = monotone_paths(len(y), len(p))
    costs = [sum((y[i] - p[j]) ** 2 for i, j in path) for path in paths]
    best = min(costs)
    keyed = []
    for path, c in zip(paths, costs):
        if abs(c - best) < 1e-12:
            back = path[::-1]
            keyed.append(([rank[(a[0] - b[0], a[1] - b[1])] for a, b in zip(back, back[1:])], path))
    return min(keyed)[1]


def test_dtw_tie_breaking_matches_enumeration():
    assert dtw(np.zeros(3), np.zeros(3))[1] == [(0, 0), (1, 1), (2, 2)]
    rng = np.random.default_rng(7)
    ties = 0
    for _ in range(300):
        T = int(rng.integers(2, 6))
        y = rng.integers(0, 2, size=T).astype(float)
        p = rng.integers(0, 2, size=T).astype(float)
        path = dtw(y, p)[1]
        assert path == _preferred_optimal_path(y, p)
        ties += path != [(i, i) for i in range(T)]
    assert ties > 0


def test_tdi_examples():
    assert tdi([(0, 0), (1, 1), (2, 2)]) == 0.0
    assert tdi([(0, 0), (0, 1), (1, 1)]) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        tdi([(0, 0), (2, 2)])


def test_lcss_examples():
    y = np.array([0.0, 1.0, 2.0, 3.0])
    assert lcss(y, y) == 1.0
    assert lcss(y, y + 100) == 0.0
    assert lcss(y, [0, 1, 9, 3], LcssConfig(0.5, 4)) == 0.75


def test_lcss_config_defaults():
    y = np.array([0.0, 2.0, 0.0, 2.0])
    assert LcssConfig().resolve(y) == (pytest.approx(0.1), 4)
    with pytest.raises(ValueError):
        LcssConfig(epsilon=0)
    # constant truth still gets a usable threshold
    assert lcss(np.ones(5), np.ones(5)) == 1.0


def test_dtw_and_lcss_equal_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(300):
        T = int(rng.integers(1, 7))
        y = np.round(rng.normal(size=T), 1)
        p = np.round(rng.normal(size=T), 1)
        value, path = dtw(y, p)
        assert value == pytest.approx(brute_dtw(y, p), abs=1e-12)
        assert is_valid_path(path, T)
        assert sum((y[i] - p[j]) ** 2 for i, j in path) == pytest.approx(value, abs=1e-12)
        eps = float(rng.uniform(0.1, 1.5))
        delta = int(rng.integers(0, T + 1))
        assert lcss(y, p, LcssConfig(eps, delta)) == brute_lcss(y, p, eps, delta)


@given(arrays(np.float64, st.integers(1, 12), elements=st.floats(-5, 5)))
def test_metric_invariants(y):
    rng = np.random.default_rng(len(y))
    p = y + rng.normal(size=y.size)
    value, path = dtw(y, p)
    assert value <= mse(y, p) * y.size + 1e-9
    assert tdi(path, y.size) >= 0
    score = lcss(y, p, LcssConfig(0.5))
    assert 0.0 <= score <= 1.0
    assert lcss(y, p, LcssConfig(0.25)) <= score


def test_paths_enumeration_sanity():
    assert len(monotone_paths(3, 3)) == 13


def test_evaluate_keys_and_batch():
    y = np.array([[0.0, 1.0, 0.0], [1.0, 1.0, 1.0]])
    p = np.array([[0.0, 0.0, 1.0], [1.0, 1.0, 1.0]])
    one = evaluate(y[0], p[0])
    assert list(one) == ["mse", "dtw", "tdi", "lcss"]
    batch = evaluate_batch(y, p)
    assert batch["dtw"] == pytest.approx(0.5)
    assert batch["tdi"] == pytest.approx(1 / 9)


def test_length_mismatch():
    with pytest.raises(ValueError):
        dtw([1, 2], [1, 2, 3])
