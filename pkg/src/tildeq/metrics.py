"""Evaluation measures: MSE, hard DTW with its optimal path, TDI and LCSS."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import as_series


@dataclass(frozen=True)
class LcssConfig:
    epsilon: float | None = None  # None -> 0.1 * std(truth) per pair
    delta: int | None = None  # None -> unwindowed (T)

    def __post_init__(self):
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.delta is not None and self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")

    def resolve(self, truth: np.ndarray) -> tuple[float, int]:
        eps = self.epsilon
        if eps is None:
            eps = 0.1 * float(np.std(truth))
            if not eps > 0:
                eps = 1e-8
        delta = truth.size if self.delta is None else self.delta
        return eps, delta


def _pair(y, y_hat) -> tuple[np.ndarray, np.ndarray]:
    y = as_series(y, "truth")
    y_hat = as_series(y_hat, "pred")
    if y.size != y_hat.size:
        raise ValueError(f"length mismatch: {y.size} != {y_hat.size}")
    return y, y_hat


def mse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.mean((y_hat - y) ** 2))


def is_valid_path(path, n: int, m: int | None = None) -> bool:
    m = n if m is None else m
    if not path or tuple(path[0]) != (0, 0) or tuple(path[-1]) != (n - 1, m - 1):
        return False
    for (i0, j0), (i1, j1) in zip(path, path[1:]):
        if (i1 - i0, j1 - j0) not in ((1, 0), (0, 1), (1, 1)):
            return False
    return True


def dtw(y, y_hat) -> tuple[float, list[tuple[int, int]]]:
    """Hard DTW with squared-difference cost.

    Returns the optimal accumulated cost and one optimal path from ``(0, 0)``
    to ``(T-1, T-1)``. When backtracking, equal-cost predecessors are resolved
    diagonal first, then the step that advanced ``i``, then the one that
    advanced ``j``.
    """
    y, y_hat = _pair(y, y_hat)
    n = m = y.size
    cost = (y[:, None] - y_hat[None, :]) ** 2
    D = np.full((n + 1, m + 1), np.inf)
    D[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            D[i, j] = cost[i - 1, j - 1] + min(D[i - 1, j - 1], D[i - 1, j], D[i, j - 1])
    i, j = n, m
    path = [(i - 1, j - 1)]
    while (i, j) != (1, 1):
        options = ((D[i - 1, j - 1], i - 1, j - 1), (D[i - 1, j], i - 1, j), (D[i, j - 1], i, j - 1))
        best = min(options, key=lambda o: o[0])  # min keeps the first of equals
        _, i, j = best
        path.append((i - 1, j - 1))
    path.reverse()
    return float(D[n, m]), path


def tdi(path, length: int | None = None) -> float:
    """Squared diagonal deviation along a path: ``sum (i - j)^2 / T^2``."""
    if length is None:
        length = path[-1][0] + 1
    if not is_valid_path(list(map(tuple, path)), length):
        raise ValueError("invalid alignment path")
    steps = np.asarray(path, dtype=np.float64)
    return float(((steps[:, 0] - steps[:, 1]) ** 2).sum() / length ** 2)


def lcss(y, y_hat, cfg: LcssConfig = LcssConfig()) -> float:
    """Longest-common-subsequence ratio in ``[0, 1]`` (higher is better).

    Samples ``y[i]`` and ``y_hat[j]`` match when ``|y[i] - y_hat[j]| < epsilon``
    and ``|i - j| <= delta``.
    """
    y, y_hat = _pair(y, y_hat)
    eps, delta = cfg.resolve(y)
    n = y.size
    idx = np.arange(n)
    match = (np.abs(y[:, None] - y_hat[None, :]) < eps) & (np.abs(idx[:, None] - idx[None, :]) <= delta)
    table = np.zeros((n + 1, n + 1), dtype=np.int64)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if match[i - 1, j - 1]:
                table[i, j] = table[i - 1, j - 1] + 1
            else:
                table[i, j] = max(table[i - 1, j], table[i, j - 1])
    return float(table[n, n] / n)


METRIC_NAMES = ("mse", "dtw", "tdi", "lcss")


def evaluate(y, y_hat, lcss_cfg: LcssConfig = LcssConfig()) -> dict[str, float]:
    """All four metrics for one pair, keyed in reporting order."""
    value, path = dtw(y, y_hat)
    return {
        "mse": mse(y, y_hat),
        "dtw": value,
        "tdi": tdi(path, len(y)),
        "lcss": lcss(y, y_hat, lcss_cfg),
    }


def evaluate_batch(Y, Y_hat, lcss_cfg: LcssConfig = LcssConfig()) -> dict[str, float]:
    """Metric means over a batch of pairs, aggregated in index order."""
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    Y_hat = np.atleast_2d(np.asarray(Y_hat, dtype=np.float64))
    rows = [evaluate(a, b, lcss_cfg) for a, b in zip(Y, Y_hat)]
    return {k: float(np.mean([r[k] for r in rows])) for k in METRIC_NAMES}
