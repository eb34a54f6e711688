"""Minibatch Adam training with early stopping on validation loss."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .gru import GruForecaster, PARAM_NAMES
from .series import WindowedDataset

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainerConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 1000
    patience: int = 10
    batch_size: int = 32
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = 5.0
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ValueError("max_epochs and batch_size must be >= 1")


@dataclass
class TrainReport:
    initial_val_loss: float
    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = math.inf
    stopped_epoch: int = 0
    early_stopped: bool = False
    clipped_steps: int = 0
    clip_norm: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


class Adam:
    def __init__(self, params: dict, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        c1 = 1 - self.beta1 ** self.t
        c2 = 1 - self.beta2 ** self.t
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def clip_by_global_norm(grads: dict, max_norm: float | None) -> bool:
    """Rescale ``grads`` in place if their joint L2 norm exceeds ``max_norm``."""
    if max_norm is None:
        return False
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
        return True
    return False


def evaluate_loss(model: GruForecaster, inputs, targets, loss, batch_size: int = 512) -> float:
    """Item-weighted mean loss over a split."""
    total, count = 0.0, 0
    for start in range(0, len(inputs), batch_size):
        x = inputs[start:start + batch_size]
        y = targets[start:start + batch_size]
        pred = model.forward(x, y.shape[1])
        total += loss(y, pred).value * len(x)
        count += len(x)
    return total / count


def train(model: GruForecaster, data: WindowedDataset, loss, cfg: TrainerConfig = TrainerConfig()
          ) -> TrainReport:
    """Fit ``model`` on the train split of ``data``; restores the best-val weights.

    An epoch counts as an improvement only when the validation loss drops
    strictly below the best seen so far; training stops after ``patience``
    epochs without one.
    """
    x_tr, y_tr = data.split("train")
    x_va, y_va = data.split("val")
    if len(x_tr) == 0 or len(x_va) == 0:
        raise ValueError("training needs non-empty train and val splits")
    horizon = data.horizon
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(model.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)

    initial = evaluate_loss(model, x_va, y_va, loss)
    report = TrainReport(initial_val_loss=initial, clip_norm=cfg.clip_norm)
    # epoch 1 always counts as an improvement; the untrained weights are only a fallback
    best_params = model.copy_params()
    stale = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(x_tr))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            x, y = x_tr[idx], y_tr[idx]
            tape, p, out = model.trace(x, horizon)
            lv = loss(y, out.value)
            if not math.isfinite(lv.value) or not np.all(np.isfinite(lv.grad)):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch starting {start}: {lv.value}"
                )
            grads = dict(zip(PARAM_NAMES, tape.gradients(
                out, np.reshape(lv.grad, out.shape), [p[name] for name in PARAM_NAMES])))
            if clip_by_global_norm(grads, cfg.clip_norm):
                report.clipped_steps += 1
            opt.step(model.params, grads)
            epoch_loss += lv.value * len(idx)
        report.train_losses.append(epoch_loss / len(order))
        val = evaluate_loss(model, x_va, y_va, loss)
        if not math.isfinite(val):
            raise TrainingDivergedError(f"non-finite validation loss at epoch {epoch}")
        report.val_losses.append(val)
        report.stopped_epoch = epoch
        if val < report.best_val_loss:
            report.best_val_loss = val
            report.best_epoch = epoch
            best_params = model.copy_params()
            stale = 0
        else:
            stale += 1
        log.debug("epoch %d train %.6g val %.6g", epoch, report.train_losses[-1], val)
        if stale >= cfg.patience:
            report.early_stopped = True
            break
    model.params = best_params
    return report
