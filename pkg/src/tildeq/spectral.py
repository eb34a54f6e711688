"""Fourier and correlation kernels.

The transforms act on the last axis and broadcast over any leading batch axes.
Power-of-two lengths use an iterative radix-2 Cooley-Tukey FFT; every other
length goes through Bluestein's chirp-z algorithm, which rewrites the DFT as a
circular convolution of power-of-two size.

Convention: ``X[k] = sum_t x[t] * exp(-2j*pi*k*t/N)`` (unnormalized forward),
inverse carries the ``1/N``.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@lru_cache(maxsize=64)
def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.flags.writeable = False
    return rev


@lru_cache(maxsize=64)
def _twiddles(m: int) -> np.ndarray:
    w = np.exp(-2j * np.pi * np.arange(m // 2) / m)
    w.flags.writeable = False
    return w


def _fft_pow2(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    lead = x.shape[:-1]
    x = x[..., _bit_reverse(n)]
    m = 2
    while m <= n:
        half = m // 2
        blocks = x.reshape(*lead, n // m, m)
        u = blocks[..., :half]
        t = blocks[..., half:] * _twiddles(m)
        x = np.concatenate([u + t, u - t], axis=-1).reshape(*lead, n)
        m *= 2
    return x


@lru_cache(maxsize=64)
def _bluestein_plan(n: int) -> tuple[int, np.ndarray, np.ndarray]:
    k = np.arange(n)
    # k^2 mod 2n keeps the chirp phase exact for large k
    chirp = np.exp(-1j * np.pi * ((k * k) % (2 * n)) / n)
    size = 1 << (2 * n - 1).bit_length()
    kernel = np.zeros(size, dtype=complex)
    kernel[:n] = np.conj(chirp)
    kernel[size - n + 1:] = np.conj(chirp[1:][::-1])
    kernel_hat = _fft_pow2(kernel)
    chirp.flags.writeable = False
    kernel_hat.flags.writeable = False
    return size, chirp, kernel_hat


def _fft_bluestein(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    size, chirp, kernel_hat = _bluestein_plan(n)
    padded = np.zeros(x.shape[:-1] + (size,), dtype=complex)
    padded[..., :n] = x * chirp
    conv = _ifft_pow2(_fft_pow2(padded) * kernel_hat)
    return conv[..., :n] * chirp


def _ifft_pow2(x: np.ndarray) -> np.ndarray:
    return np.conj(_fft_pow2(np.conj(x))) / x.shape[-1]


def fft(x) -> np.ndarray:
    """Discrete Fourier transform along the last axis."""
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    if n == 0:
        raise ValueError("cannot transform an empty sequence")
    if n == 1:
        return x.copy()
    if _is_pow2(n):
        return _fft_pow2(x)
    return _fft_bluestein(x)


def ifft(X) -> np.ndarray:
    """Inverse of :func:`fft` (includes the 1/N factor)."""
    X = np.asarray(X, dtype=complex)
    return np.conj(fft(np.conj(X))) / X.shape[-1]


dft = fft


def magnitudes(spectrum) -> np.ndarray:
    return np.abs(spectrum)


def default_dominant_count(length: int) -> int:
    return max(1, math.ceil(length / 24))


def dominant_mask(spectrum, count: int) -> np.ndarray:
    """Boolean mask of the dominant bins of (a batch of) real-signal spectra.

    Bins ``k`` and ``N - k`` of a real signal share one frequency, so selection
    works on frequencies: the ``count`` frequencies of largest magnitude are
    picked (equal magnitudes go to the lower index) and both conjugate bins of
    each pick are marked. ``count`` is capped at the number of distinct
    frequencies, ``N // 2 + 1``.
    """
    spec = np.asarray(spectrum)
    n = spec.shape[-1]
    if not 1 <= count <= n:
        raise ValueError(f"count must lie in [1, {n}], got {count}")
    mag = np.abs(spec)
    reps = np.arange(n // 2 + 1)
    partners = (n - reps) % n
    freq_mag = np.maximum(mag[..., reps], mag[..., partners])
    count = min(count, reps.size)
    order = np.argsort(-freq_mag, axis=-1, kind="stable")[..., :count]
    mask = np.zeros(spec.shape, dtype=bool)
    np.put_along_axis(mask, reps[order], True, axis=-1)
    np.put_along_axis(mask, partners[order], True, axis=-1)
    return mask


def dominant_frequencies(spectrum, count: int) -> list[int]:
    """Sorted dominant bin indices of a single spectrum."""
    spec = np.asarray(spectrum)
    if spec.ndim != 1:
        raise ValueError("dominant_frequencies expects a single 1-D spectrum")
    return np.flatnonzero(dominant_mask(spec, count)).tolist()


def _center(x: np.ndarray) -> np.ndarray:
    return x - x.mean(axis=-1, keepdims=True)


def circular_correlation(a, b) -> np.ndarray:
    """Unnormalized ``c[tau] = sum_t a[t] * b[(t + tau) % N]`` via the FFT."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return ifft(np.conj(fft(a)) * fft(b)).real


def normalized_cross_correlation(a, b, center: bool = False) -> np.ndarray:
    """Circular cross-correlation divided by ``||a|| * ||b||``.

    ``R[tau] = sum_t a[t] * b[(t + tau) % N] / (||a||_2 * ||b||_2)``, so a
    positive lag means ``b`` runs ahead of ``a``. With ``center`` both inputs
    are mean-subtracted first. If exactly one input has zero norm the result is
    all zeros; if both do, ``ValueError`` is raised.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError("inputs must have equal length")
    if a.shape[-1] < 2:
        raise ValueError("inputs need at least two samples")
    if center:
        a, b = _center(a), _center(b)
    na = np.linalg.norm(a, axis=-1, keepdims=True)
    nb = np.linalg.norm(b, axis=-1, keepdims=True)
    if np.any((na == 0) & (nb == 0)):
        raise ValueError("zero norm: both inputs are zero")
    denom = na * nb
    corr = circular_correlation(a, b)
    safe = np.where(denom > 0, denom, 1.0)
    return np.where(denom > 0, corr / safe, 0.0)
