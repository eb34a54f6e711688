"""Shape-aware forecasting losses (amplitude-shift, phase and amplification
terms), alignment metrics, and a small GRU forecaster trained on a numpy
autodiff tape."""

__version__ = "0.1.0"

from .losses import (
    DilateConfig,
    LossValueGrad,
    TildeQConfig,
    amp_loss,
    ashift_loss,
    dilate,
    make_loss,
    mse,
    phase_loss,
    soft_dtw,
    tilde_q,
)
from .metrics import LcssConfig, dtw, evaluate, lcss, tdi
from .series import SplitSpec, WindowedDataset, window, window_splits

__all__ = [
    "DilateConfig", "LossValueGrad", "TildeQConfig", "amp_loss", "ashift_loss", "dilate",
    "make_loss", "mse", "phase_loss", "soft_dtw", "tilde_q", "LcssConfig", "dtw", "evaluate",
    "lcss", "tdi", "SplitSpec", "WindowedDataset", "window", "window_splits",
]
