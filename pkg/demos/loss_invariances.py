"""Which distortions each loss term forgives.

Builds one forecast target, distorts it four ways, and prints how MSE and the
three TILDE-Q terms score each distorted copy as a prediction.
"""
import numpy as np

from tildeq import distortions as dist
from tildeq import losses

T = 48
t = np.arange(T)
target = np.sin(2 * np.pi * 2 * t / T) + 0.5 * np.cos(2 * np.pi * 5 * t / T)

# A full-count dominant set makes the phase term see every frequency bin.
cfg = losses.TildeQConfig(dominant_count=T // 2 + 1)

distorted = {
    "amplitude shift +3": dist.apply(target, dist.amplitude_shift(3.0)),
    "uniform amplification x4": dist.apply(target, dist.uniform_amplification(4.0)),
    "phase shift by 7 samples": dist.apply(target, dist.phase_shift(7), periodic=True),
    "sign flip": dist.apply(target, dist.uniform_amplification(-1.0)),
}

print(f"{'prediction':28s} {'mse':>8s} {'ashift':>8s} {'phase':>8s} {'amp':>8s}")
for name, pred in distorted.items():
    row = [
        losses.mse(target, pred).value,
        losses.ashift_loss(target, pred).value,
        losses.phase_loss(target, pred, cfg).value,
        losses.amp_loss(target, pred, cfg).value,
    ]
    print(f"{name:28s} " + " ".join(f"{v:8.4f}" for v in row))

# Each term is zero (to rounding) exactly on the distortion it is built to ignore:
# ashift on the shift, amp on positive scaling, phase on the circular shift.
# The phase term compares correlation magnitudes, so it also forgives the sign
# flip; amp does not, because a sign flip is not a positive scaling.
