"""Generators for the six classic time-series distortions, plus an empirical
transformation-invariance check for losses.

A distortion is applied to a *source*: either a sampled array (sample ``i``
sits at time ``t_i = i``) or a callable ``f(t)`` that can be evaluated at any
time. Phase shifts and time scaling read the source at mapped times, so array
sources must cover those times; pass ``periodic=True`` to treat an array as
one period of a periodic signal instead.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .series import as_series


class Kind(enum.Enum):
    AMPLITUDE_SHIFT = "amplitude_shift"
    PHASE_SHIFT = "phase_shift"
    UNIFORM_AMPLIFICATION = "uniform_amplification"
    UNIFORM_TIME_SCALE = "uniform_time_scale"
    DYNAMIC_AMPLIFICATION = "dynamic_amplification"
    DYNAMIC_TIME_SCALE = "dynamic_time_scale"


class InsufficientSupportError(ValueError):
    """The distortion maps an output sample outside the source's range."""


@dataclass(frozen=True)
class DistortionSpec:
    kind: Kind
    k: float = 0.0
    h: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is Kind.UNIFORM_AMPLIFICATION and self.k == 0:
            raise ValueError("uniform amplification needs k != 0")
        if kind is Kind.UNIFORM_TIME_SCALE and not self.k > 0:
            raise ValueError("uniform time scaling needs k > 0")
        if kind in (Kind.DYNAMIC_AMPLIFICATION, Kind.DYNAMIC_TIME_SCALE) and self.h is None:
            raise ValueError(f"{kind.value} needs a function h")


def amplitude_shift(k: float) -> DistortionSpec:
    return DistortionSpec(Kind.AMPLITUDE_SHIFT, k)


def phase_shift(k: float) -> DistortionSpec:
    return DistortionSpec(Kind.PHASE_SHIFT, k)


def uniform_amplification(k: float) -> DistortionSpec:
    return DistortionSpec(Kind.UNIFORM_AMPLIFICATION, k)


def uniform_time_scale(k: float) -> DistortionSpec:
    return DistortionSpec(Kind.UNIFORM_TIME_SCALE, k)


def dynamic_amplification(h) -> DistortionSpec:
    return DistortionSpec(Kind.DYNAMIC_AMPLIFICATION, h=h)


def dynamic_time_scale(h) -> DistortionSpec:
    return DistortionSpec(Kind.DYNAMIC_TIME_SCALE, h=h)


def smooth_gain(depth: float, period: float) -> Callable[[np.ndarray], np.ndarray]:
    """``h(t) = 1 + depth * sin(2 pi t / period)``; nonzero for ``|depth| < 1``."""
    if not abs(depth) < 1:
        raise ValueError("depth must satisfy |depth| < 1 to keep h nonzero")
    return lambda t: 1.0 + depth * np.sin(2 * np.pi * np.asarray(t, dtype=float) / period)


def smooth_warp(depth: float, period: float) -> Callable[[np.ndarray], np.ndarray]:
    """Integer-valued warp ``h(t) = t + floor(depth * (t - period / (2 pi) * sin(2 pi t / period)))``.

    The floored term is nondecreasing for ``depth >= 0``, so ``h`` is strictly
    increasing with ``h(0) = 0``; time runs fastest mid-period.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")

    def h(t):
        t = np.asarray(t, dtype=float)
        drift = t - period / (2 * np.pi) * np.sin(2 * np.pi * t / period)
        return t + np.floor(depth * drift + 1e-9)
    return h


def _sample(source, times: np.ndarray, periodic: bool) -> np.ndarray:
    if callable(source):
        return np.asarray(source(times), dtype=np.float64)
    arr = as_series(source, "source")
    n = arr.size
    if not np.allclose(times, np.round(times), atol=1e-9):
        raise ValueError("array sources can only be read at integer times")
    idx = np.round(times).astype(np.int64)
    if periodic:
        return arr[idx % n]
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise InsufficientSupportError(
            f"insufficient support: needs samples {idx.min()}..{idx.max()}, source has 0..{n - 1}"
        )
    return arr[idx]


def _default_length(source, spec: DistortionSpec) -> int:
    if callable(source):
        raise ValueError("length is required for callable sources")
    n = np.asarray(source).size
    if spec.kind is Kind.UNIFORM_TIME_SCALE:
        return max(1, int(math.floor(n / spec.k + 1e-9)))
    return n


def apply(source, spec: DistortionSpec, length: int | None = None, periodic: bool = False
          ) -> np.ndarray:
    """Apply ``spec`` to ``source`` and return ``length`` output samples.

    ``length`` defaults to the array length (or, for uniform time scaling by
    ``k``, the longest output the array supports).
    """
    if length is None:
        length = _default_length(source, spec)
    if length < 1:
        raise ValueError("length must be >= 1")
    t = np.arange(length, dtype=np.float64)
    kind, k = spec.kind, spec.k
    if kind is Kind.AMPLITUDE_SHIFT:
        return _sample(source, t, periodic) + k
    if kind is Kind.UNIFORM_AMPLIFICATION:
        return k * _sample(source, t, periodic)
    if kind is Kind.PHASE_SHIFT:
        return _sample(source, t + k, periodic)
    if kind is Kind.UNIFORM_TIME_SCALE:
        # output i (1-based) reads source sample ceil(k * i) (1-based)
        i = np.arange(1, length + 1)
        idx = np.ceil(k * i - 1e-12) - 1
        return _sample(source, idx, periodic)
    if kind is Kind.DYNAMIC_AMPLIFICATION:
        gain = np.asarray(spec.h(t), dtype=np.float64)
        if np.any(gain == 0):
            raise ValueError("dynamic amplification needs h(t) != 0 everywhere")
        return gain * _sample(source, t, periodic)
    if kind is Kind.DYNAMIC_TIME_SCALE:
        mapped = np.asarray(spec.h(t), dtype=np.float64)
        if np.any(np.diff(mapped) <= 0):
            raise ValueError("dynamic time scaling needs a strictly increasing h")
        if np.any(mapped < 0):
            raise ValueError("dynamic time scaling needs a non-negative h")
        return _sample(source, mapped, periodic)
    raise AssertionError(kind)


def invariance_holds(loss, spec: DistortionSpec, corpus, delta: float,
                     length: int | None = None, periodic: bool = False) -> bool:
    """True iff ``loss(Y, apply(Y, spec)) < delta`` for every ``Y`` in ``corpus``.

    ``loss`` may return a float or anything with a ``.value``. Callable corpus
    entries are sampled on ``0..length-1`` to obtain ``Y``.
    """
    if not delta > 0:
        raise ValueError("delta must be > 0")
    corpus = list(corpus)
    if not corpus:
        raise ValueError("corpus must not be empty")
    for source in corpus:
        if callable(source):
            if length is None:
                raise ValueError("length is required for callable corpus entries")
            truth = np.asarray(source(np.arange(length, dtype=np.float64)), dtype=np.float64)
        else:
            truth = as_series(source)
        distorted = apply(source, spec, length=truth.size, periodic=periodic)
        result = loss(truth, distorted)
        value = getattr(result, "value", result)
        if not value < delta:
            return False
    return True
