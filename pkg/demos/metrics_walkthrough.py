"""The four evaluation scores on tiny hand-made forecasts."""
import numpy as np

from tildeq import metrics

truth = np.array([0.0, 1.0, 0.0])
late = np.array([0.0, 0.0, 1.0])

cost, path = metrics.dtw(truth, late)
print("DTW cost", cost, "path", path)
print("TDI", metrics.tdi(path))
print("MSE", metrics.mse(truth, late))

# LCSS counts samples that can be matched within a value tolerance and time window.
wave = np.sin(np.arange(20) / 3)
shifted = np.roll(wave, 2)
for delta in (0, 1, 2, 4):
    print(f"LCSS delta={delta}:", metrics.lcss(wave, shifted, metrics.LcssConfig(epsilon=0.05, delta=delta)))
