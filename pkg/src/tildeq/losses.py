"""Differentiable training objectives.

Every loss takes the ground truth ``y`` and the prediction ``y_hat`` (either
one horizon of shape ``(T,)`` or a batch ``(B, T)``) and returns a
:class:`LossValueGrad`: the batch-mean loss value and its gradient with respect
to ``y_hat``, shaped like ``y_hat``.

Available objectives: MSE; TILDE-Q and its three terms (amplitude-shift via
softmax, phase via dominant Fourier magnitudes, amplification via normalized
cross-correlation); soft-DTW and DILATE.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, partial
from typing import Callable, NamedTuple

import numpy as np

from . import spectral


class LossValueGrad(NamedTuple):
    value: float
    grad: np.ndarray


LossFn = Callable[[np.ndarray, np.ndarray], LossValueGrad]


@dataclass(frozen=True)
class TildeQConfig:
    alpha: float = 0.99
    gamma: float = 0.5
    dominant_count: int | None = None  # None -> max(1, ceil(T / 24))
    norm_p: float = 1.0
    phase_mode: str = "magnitude"  # or "complex"
    center_ncc: bool = False

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.norm_p < 1:
            raise ValueError(f"norm_p must be >= 1, got {self.norm_p}")
        if self.dominant_count is not None and self.dominant_count < 1:
            raise ValueError("dominant_count must be a positive integer")
        if self.phase_mode not in ("magnitude", "complex"):
            raise ValueError(f"unknown phase_mode {self.phase_mode!r}")

    def count_for(self, length: int) -> int:
        if self.dominant_count is None:
            return spectral.default_dominant_count(length)
        return self.dominant_count


@dataclass(frozen=True)
class DilateConfig:
    alpha: float = 0.5
    smoothing: float = 0.01

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.smoothing > 0:
            raise ValueError(f"smoothing must be > 0, got {self.smoothing}")


def _batched(y, y_hat) -> tuple[np.ndarray, np.ndarray, bool]:
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise ValueError(f"shape mismatch: truth {y.shape} vs prediction {y_hat.shape}")
    if y.ndim not in (1, 2) or y.shape[-1] == 0:
        raise ValueError("expected a horizon (T,) or a batch (B, T)")
    single = y.ndim == 1
    return np.atleast_2d(y), np.atleast_2d(y_hat), single


def _reduce(values: np.ndarray, grads: np.ndarray, single: bool) -> LossValueGrad:
    batch = values.shape[0]
    grads = grads / batch
    return LossValueGrad(float(values.mean()), grads[0] if single else grads)


def _norm_p(v: np.ndarray, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise ``||v||_p`` and its derivative (0 where the norm vanishes)."""
    a = np.abs(v)
    if p == 1:
        return a.sum(axis=-1), np.sign(v)
    norm = (a ** p).sum(axis=-1) ** (1.0 / p)
    safe = np.where(norm > 0, norm, 1.0)[..., None]
    deriv = np.sign(v) * (a / safe) ** (p - 1)
    deriv = np.where(norm[..., None] > 0, deriv, 0.0)
    return norm, deriv


def mse(y, y_hat) -> LossValueGrad:
    y, y_hat, single = _batched(y, y_hat)
    diff = y_hat - y
    T = y.shape[-1]
    return _reduce((diff ** 2).mean(axis=-1), 2.0 * diff / T, single)


def softmax(x: np.ndarray) -> np.ndarray:
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def ashift_loss(y, y_hat) -> LossValueGrad:
    """Amplitude-shift term: ``T * sum_i |1/T - softmax(y_hat - y)_i|``.

    Zero exactly when the prediction differs from the truth by the same
    constant at every step. The signed gap is ``d = y_hat - y``.
    """
    y, y_hat, single = _batched(y, y_hat)
    T = y.shape[-1]
    if T < 2:
        raise ValueError("ashift_loss needs a horizon of at least 2")
    s = softmax(y_hat - y)
    gap = s - 1.0 / T
    value = T * np.abs(gap).sum(axis=-1)
    g_s = T * np.sign(gap)
    g_d = s * (g_s - (g_s * s).sum(axis=-1, keepdims=True))
    return _reduce(value, g_d, single)


def phase_loss(y, y_hat, cfg: TildeQConfig = TildeQConfig()) -> LossValueGrad:
    """Fourier term over the dominant bins ``S`` of the ground-truth spectrum.

    magnitude mode: ``|| |F(y)|_S - |F(y_hat)|_S ||_p + || |F(y_hat)|_notS ||_p``
    complex mode:   ``|| (F(y) - F(y_hat))_S ||_p + || F(y_hat)_notS ||_p``

    ``F`` is the unnormalized DFT. Only magnitude mode is invariant to
    circular phase shifts of the prediction.
    """
    y, y_hat, single = _batched(y, y_hat)
    T = y.shape[-1]
    if T < 2:
        raise ValueError("phase_loss needs a horizon of at least 2")
    count = cfg.count_for(T)
    if count > T:
        raise ValueError(f"dominant_count {count} exceeds horizon {T}")
    Fy = spectral.fft(y)
    Fp = spectral.fft(y_hat)
    dom = spectral.dominant_mask(Fy, count)
    mag_p = np.abs(Fp)
    if cfg.phase_mode == "magnitude":
        inner = np.where(dom, mag_p - np.abs(Fy), 0.0)
        outer = np.where(dom, 0.0, mag_p)
        v1, d1 = _norm_p(inner, cfg.norm_p)
        v2, d2 = _norm_p(outer, cfg.norm_p)
        d_mag = np.where(dom, d1, d2)
        unit = np.divide(np.conj(Fp), mag_p, out=np.zeros_like(Fp), where=mag_p > 0)
        coeff = d_mag * unit
    else:
        resid = np.where(dom, Fp - Fy, Fp)
        r_mag = np.abs(resid)
        v1, d1 = _norm_p(np.where(dom, r_mag, 0.0), cfg.norm_p)
        v2, d2 = _norm_p(np.where(dom, 0.0, r_mag), cfg.norm_p)
        d_mag = np.where(dom, d1, d2)
        unit = np.divide(np.conj(resid), r_mag, out=np.zeros_like(resid), where=r_mag > 0)
        coeff = d_mag * unit
    # adjoint of the DFT applied to the magnitude sensitivities
    grad = spectral.fft(coeff).real
    return _reduce(v1 + v2, grad, single)


def amp_loss(y, y_hat, cfg: TildeQConfig = TildeQConfig()) -> LossValueGrad:
    """Amplification term: ``|| R(y, y) - R(y, y_hat) ||_p`` over all lags.

    ``R`` is the circular normalized cross-correlation, so any positive
    rescaling of the prediction leaves the value unchanged. A zero prediction
    gives ``R(y, y_hat) = 0`` and a zero gradient.
    """
    y, y_hat, single = _batched(y, y_hat)
    T = y.shape[-1]
    if T < 2:
        raise ValueError("amp_loss needs a horizon of at least 2")
    a, b = y, y_hat
    if cfg.center_ncc:
        a = a - a.mean(axis=-1, keepdims=True)
        b = b - b.mean(axis=-1, keepdims=True)
    na = np.linalg.norm(a, axis=-1)
    if np.any(na == 0):
        raise ValueError("zero norm: ground truth is identically zero")
    nb = np.linalg.norm(b, axis=-1)
    live = nb > 0
    denom = (na * np.where(live, nb, 1.0))[:, None]
    Fa = spectral.fft(a)
    r_auto = spectral.ifft(np.abs(Fa) ** 2).real / (na ** 2)[:, None]
    corr = spectral.ifft(np.conj(Fa) * spectral.fft(b)).real
    r_cross = np.where(live[:, None], corr / denom, 0.0)
    value, d_err = _norm_p(r_auto - r_cross, cfg.norm_p)
    w = -d_err
    # d R[tau] / d b[s] = a[s - tau] / denom - corr[tau] * b[s] / (denom * nb^2)
    conv = spectral.ifft(spectral.fft(w) * Fa).real
    nb2 = np.where(live, nb, 1.0)[:, None] ** 2
    grad = conv / denom - (w * corr).sum(axis=-1, keepdims=True) * b / (denom * nb2)
    grad = np.where(live[:, None], grad, 0.0)
    if cfg.center_ncc:
        grad = grad - grad.mean(axis=-1, keepdims=True)
    return _reduce(value, grad, single)


def tilde_q(y, y_hat, cfg: TildeQConfig = TildeQConfig()) -> LossValueGrad:
    """``alpha * ashift + (1 - alpha) * phase + gamma * amp``.

    Terms with zero weight are skipped entirely.
    """
    terms = [
        (cfg.alpha, ashift_loss, ()),
        (1.0 - cfg.alpha, phase_loss, (cfg,)),
        (cfg.gamma, amp_loss, (cfg,)),
    ]
    value = 0.0
    grad = np.zeros(np.shape(y_hat), dtype=np.float64)
    for weight, fn, extra in terms:
        if weight == 0:
            continue
        part = fn(y, y_hat, *extra)
        value += weight * part.value
        grad += weight * part.grad
    return LossValueGrad(value, grad)


def tilde_q_components(y, y_hat, cfg: TildeQConfig = TildeQConfig()) -> dict[str, float]:
    """Unweighted values of the three terms, for logging."""
    return {
        "ashift": ashift_loss(y, y_hat).value,
        "phase": phase_loss(y, y_hat, cfg).value,
        "amp": amp_loss(y, y_hat, cfg).value,
    }


def _softmin3(r0, r1, r2, gamma):
    rmin = np.minimum(np.minimum(r0, r1), r2)
    with np.errstate(invalid="ignore"):
        z = np.exp((rmin - r0) / gamma) + np.exp((rmin - r1) / gamma) + np.exp((rmin - r2) / gamma)
    return rmin - gamma * np.log(z)


@lru_cache(maxsize=64)
def _diagonals(n: int, m: int) -> tuple:
    """Cell indices of each anti-diagonal of an ``(n+2, m+2)`` padded table, flattened."""
    width = m + 2
    out = []
    for d in range(2, n + m + 1):
        i = np.arange(max(1, d - m), min(n, d - 1) + 1)
        out.append(i * width + (d - i))
    return tuple(out)


def soft_dtw_cost(cost: np.ndarray, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Soft-DTW over a batch of cost matrices ``(B, n, m)``.

    Returns the soft-min alignment values ``(B,)`` and the expected alignment
    matrices ``(B, n, m)``, which are the gradients of the values with respect
    to the costs. The recursions sweep anti-diagonals so each sweep step is a
    vectorized update.
    """
    cost = np.asarray(cost, dtype=np.float64)
    B, n, m = cost.shape
    width = m + 2
    size = (n + 2) * width
    C = np.zeros((B, n + 2, m + 2))
    C[:, 1:n + 1, 1:m + 1] = cost
    C = C.reshape(B, size)
    R = np.full((B, size), np.inf)
    R[:, 0] = 0.0
    diagonals = _diagonals(n, m)
    # flat offsets of the up-left, up and left neighbours
    for cell in diagonals:
        soft = _softmin3(R[:, cell - width - 1], R[:, cell - width], R[:, cell - 1], gamma)
        R[:, cell] = C[:, cell] + soft
    end = n * width + m
    values = R[:, end].copy()

    R = R.reshape(B, n + 2, m + 2)
    R[:, n + 1, :] = -np.inf
    R[:, :, m + 1] = -np.inf
    R[:, n + 1, m + 1] = R[:, n, m]
    R = R.reshape(B, size)
    E = np.zeros((B, size))
    E[:, size - 1] = 1.0
    for cell in reversed(diagonals):
        r = R[:, cell]
        down, right, diag = cell + width, cell + 1, cell + width + 1
        a = np.exp((R[:, down] - r - C[:, down]) / gamma)
        b = np.exp((R[:, right] - r - C[:, right]) / gamma)
        c = np.exp((R[:, diag] - r - C[:, diag]) / gamma)
        E[:, cell] = E[:, down] * a + E[:, right] * b + E[:, diag] * c
    return values, E.reshape(B, n + 2, m + 2)[:, 1:n + 1, 1:m + 1]


def temporal_penalty(n: int, m: int | None = None) -> np.ndarray:
    """Squared diagonal-deviation matrix ``(i - j)^2 / (n * m)``."""
    m = n if m is None else m
    i = np.arange(n)[:, None]
    j = np.arange(m)[None, :]
    return (i - j) ** 2 / float(n * m)


def _aligned_loss(y, y_hat, shape_weight: float, smoothing: float) -> LossValueGrad:
    y, y_hat, single = _batched(y, y_hat)
    T = y.shape[-1]
    delta = (y[:, :, None] - y_hat[:, None, :]) ** 2
    if shape_weight == 1.0:
        cost = delta
    else:
        cost = shape_weight * delta + (1.0 - shape_weight) * temporal_penalty(T)
    values, E = soft_dtw_cost(cost, smoothing)
    # d cost_ij / d y_hat_j = 2 * shape_weight * (y_hat_j - y_i)
    grad = 2.0 * shape_weight * (E * (y_hat[:, None, :] - y[:, :, None])).sum(axis=1)
    return _reduce(values, grad, single)


def soft_dtw(y, y_hat, cfg: DilateConfig = DilateConfig()) -> LossValueGrad:
    """Soft-DTW with squared-difference cost and temperature ``cfg.smoothing``."""
    return _aligned_loss(y, y_hat, 1.0, cfg.smoothing)


def dilate(y, y_hat, cfg: DilateConfig = DilateConfig()) -> LossValueGrad:
    """Soft-min alignment over the blended cost ``alpha * Delta + (1 - alpha) * Omega``."""
    return _aligned_loss(y, y_hat, cfg.alpha, cfg.smoothing)


LOSS_NAMES = ("mse", "dilate", "soft_dtw", "tilde_q", "ashift_only", "phase_only", "amp_only")


def make_loss(name: str, tildeq: TildeQConfig | None = None,
              dilate_cfg: DilateConfig | None = None) -> LossFn:
    """Build a two-argument loss callable by name."""
    tildeq = tildeq or TildeQConfig()
    dilate_cfg = dilate_cfg or DilateConfig()
    if name == "mse":
        return mse
    if name == "tilde_q":
        return partial(tilde_q, cfg=tildeq)
    if name == "ashift_only":
        return ashift_loss
    if name == "phase_only":
        return partial(phase_loss, cfg=tildeq)
    if name == "amp_only":
        return partial(amp_loss, cfg=tildeq)
    if name == "dilate":
        return partial(dilate, cfg=dilate_cfg)
    if name == "soft_dtw":
        return partial(soft_dtw, cfg=dilate_cfg)
    raise ValueError(f"unknown loss {name!r}; expected one of {', '.join(LOSS_NAMES)}")
