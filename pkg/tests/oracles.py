"""Slow, obviously-correct reference implementations used only by the tests.

None of these share code with the package: they are direct sums, exhaustive
enumerations and finite differences.
"""
from __future__ import annotations

import cmath
import itertools
import math
from functools import lru_cache

import numpy as np


def direct_dft(x):
    n = len(x)
    return np.array([
        sum(complex(x[t]) * cmath.exp(-2j * math.pi * k * t / n) for t in range(n))
        for k in range(n)
    ])


def direct_dft_matrix(x):
    # same sum as direct_dft, vectorized for the long lengths
    x = np.asarray(x, dtype=complex)
    n = x.size
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x


def direct_ncc(a, b):
    n = len(a)
    na = math.sqrt(sum(v * v for v in a))
    nb = math.sqrt(sum(v * v for v in b))
    return np.array([sum(a[t] * b[(t + lag) % n] for t in range(n)) / (na * nb)
                     for lag in range(n)])


def monotone_paths(n, m):
    """Every warping path from (0, 0) to (n-1, m-1)."""
    out = []

    def walk(i, j, acc):
        if (i, j) == (n - 1, m - 1):
            out.append(list(acc))
            return
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            a, b = i + di, j + dj
            if a < n and b < m:
                acc.append((a, b))
                walk(a, b, acc)
                acc.pop()

    walk(0, 0, [(0, 0)])
    return out


@lru_cache(maxsize=None)
def delannoy(n, m):
    """Number of warping paths on an n x m grid."""
    if n == 1 or m == 1:
        return 1
    return delannoy(n - 1, m) + delannoy(n, m - 1) + delannoy(n - 1, m - 1)


def brute_dtw(y, y_hat):
    best = math.inf
    for path in monotone_paths(len(y), len(y_hat)):
        best = min(best, sum((y[i] - y_hat[j]) ** 2 for i, j in path))
    return best


def brute_soft_alignment(cost, gamma):
    """-gamma * log sum_paths exp(-<path, cost> / gamma) by enumeration."""
    n, m = cost.shape
    totals = np.array([sum(cost[i, j] for i, j in p) for p in monotone_paths(n, m)])
    lo = totals.min()
    return lo - gamma * math.log(np.exp(-(totals - lo) / gamma).sum())


def brute_lcss(y, y_hat, eps, delta):
    """Largest k with index subsets I, J (|I| = |J| = k) matching pairwise in order."""
    n = len(y)
    for k in range(n, 0, -1):
        for I in itertools.combinations(range(n), k):
            for J in itertools.combinations(range(n), k):
                if all(abs(y[i] - y_hat[j]) < eps and abs(i - j) <= delta for i, j in zip(I, J)):
                    return k / n
    return 0.0


def central_diff(f, x, h=1e-5):
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        up = f(x)
        x[idx] = old - h
        down = f(x)
        x[idx] = old
        grad[idx] = (up - down) / (2 * h)
    return grad


def rel_err(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12))
