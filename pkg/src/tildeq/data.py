"""Dataset construction: the two-peak/step synthetic generator, a sinusoid
family, and CSV ingestion presets for ECG5000-style and Traffic-style files.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .series import (
    SPLIT_NAMES,
    InsufficientLengthError,
    SplitSpec,
    WindowedDataset,
    read_series_csv,
    window_splits,
    zscore_normalize,
    zscore_stats,
)

PEAK_HALF_WIDTH = 3


@dataclass(frozen=True)
class SyntheticSpec:
    """Two triangular peaks in the input, one step in the target.

    The step starts ``step_lag`` samples after the second (later) peak, counted
    on the joint input+target time axis, and its height equals that peak's
    amplitude. ``lag_jitter`` adds a uniform integer offset in
    ``[-lag_jitter, lag_jitter]`` to the onset of each item.
    """

    count_train: int = 500
    count_val: int = 500
    count_test: int = 500
    input_len: int = 20
    horizon: int = 40
    amplitude_range: tuple = (0.2, 1.0)
    first_peak_range: tuple = (2, 8)
    min_peak_gap: int = 5
    step_lag: int = 20
    lag_jitter: int = 3
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.amplitude_range
        if not 0 < lo <= hi:
            raise ValueError("peak amplitudes must be positive")
        first_lo, first_hi = self.first_peak_range
        last = self.input_len - PEAK_HALF_WIDTH
        if first_lo < PEAK_HALF_WIDTH - 1 or first_hi + self.min_peak_gap > last:
            raise ValueError("peak position ranges do not keep both peaks inside the input")
        if self.min_peak_gap < 2 * PEAK_HALF_WIDTH - 1:
            raise ValueError("peaks closer than 2 * half-width - 1 would merge")
        earliest = first_lo + self.min_peak_gap + self.step_lag - self.lag_jitter - self.input_len
        latest = last + self.step_lag + self.lag_jitter - self.input_len
        if earliest < 1 or latest > self.horizon - 1:
            raise ValueError("step onset must fall strictly inside the target window")

    @property
    def counts(self) -> tuple[int, int, int]:
        return self.count_train, self.count_val, self.count_test


def _peak(length: int, position: int, amplitude: float) -> np.ndarray:
    t = np.arange(length)
    return amplitude * np.clip(1.0 - np.abs(t - position) / PEAK_HALF_WIDTH, 0.0, None)


def _stack_splits(inputs, targets, counts, meta) -> WindowedDataset:
    splits, start = {}, 0
    for name, count in zip(SPLIT_NAMES, counts):
        splits[name] = slice(start, start + count)
        start += count
    return WindowedDataset(np.asarray(inputs), np.asarray(targets), splits, meta=meta)


def generate_synthetic(spec: SyntheticSpec = SyntheticSpec()) -> WindowedDataset:
    rng = np.random.default_rng(spec.seed)
    total = sum(spec.counts)
    n, L = spec.input_len, spec.horizon
    last = n - PEAK_HALF_WIDTH
    inputs = np.zeros((total, n))
    targets = np.zeros((total, L))
    for item in range(total):
        p1 = int(rng.integers(spec.first_peak_range[0], spec.first_peak_range[1] + 1))
        p2 = int(rng.integers(p1 + spec.min_peak_gap, last + 1))
        a1, a2 = rng.uniform(*spec.amplitude_range, size=2)
        inputs[item] = _peak(n, p1, a1) + _peak(n, p2, a2)
        jitter = int(rng.integers(-spec.lag_jitter, spec.lag_jitter + 1)) if spec.lag_jitter else 0
        onset = p2 + spec.step_lag + jitter - n
        targets[item, onset:] = a2
    if spec.noise_std > 0:
        inputs = inputs + rng.normal(0.0, spec.noise_std, size=inputs.shape)
    return _stack_splits(inputs, targets, spec.counts, {"generator": "synthetic"})


@dataclass(frozen=True)
class SinusoidSpec:
    """Noisy-free sinusoid continuation: ``offset + A sin(2 pi t / period + phase)``.

    The input is the first ``input_len`` samples, the target the following
    ``horizon`` samples of the same wave.
    """

    count_train: int = 500
    count_val: int = 200
    count_test: int = 200
    input_len: int = 40
    horizon: int = 40
    amplitude_range: tuple = (0.5, 1.5)
    period_range: tuple = (10.0, 20.0)
    offset_range: tuple = (0.0, 0.0)
    noise_std: float = 0.0
    seed: int = 0

    @property
    def counts(self) -> tuple[int, int, int]:
        return self.count_train, self.count_val, self.count_test


def generate_sinusoids(spec: SinusoidSpec = SinusoidSpec()) -> WindowedDataset:
    rng = np.random.default_rng(spec.seed)
    total = sum(spec.counts)
    amp = rng.uniform(*spec.amplitude_range, size=(total, 1))
    period = rng.uniform(*spec.period_range, size=(total, 1))
    phase = rng.uniform(0.0, 2 * np.pi, size=(total, 1))
    offset = rng.uniform(*spec.offset_range, size=(total, 1))
    t = np.arange(spec.input_len + spec.horizon)[None, :]
    waves = offset + amp * np.sin(2 * np.pi * t / period + phase)
    if spec.noise_std > 0:
        waves = waves + rng.normal(0.0, spec.noise_std, size=waves.shape)
    return _stack_splits(waves[:, :spec.input_len], waves[:, spec.input_len:], spec.counts,
                         {"generator": "sinusoid"})


@dataclass(frozen=True)
class DatasetPreset:
    name: str
    n: int
    L: int
    split: SplitSpec = field(default_factory=SplitSpec)
    beat_length: int | None = None  # per-item files: fixed-length records, no windowing
    stride: int = 1


PRESETS = {
    "ecg5000": DatasetPreset("ecg5000", 84, 56, SplitSpec(0.1, 0.1, 0.8), beat_length=140),
    "traffic": DatasetPreset("traffic", 168, 24, SplitSpec(0.6, 0.2, 0.2)),
}


def preset(name: str, **overrides) -> DatasetPreset:
    if name == "custom":
        return DatasetPreset("custom", **overrides)
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)} or 'custom'")
    base = PRESETS[name]
    if overrides:
        return DatasetPreset(**{**base.__dict__, **overrides})
    return base


def _split_counts(total: int, split: SplitSpec) -> tuple[int, int, int]:
    train_end, val_end = split.boundaries(total)
    return train_end, val_end - train_end, total - val_end


def records_to_dataset(values: np.ndarray, preset: DatasetPreset, normalize: bool = True
                       ) -> WindowedDataset:
    """Cut a concatenation of fixed-length records into one item per record."""
    size = preset.beat_length
    if size != preset.n + preset.L:
        raise ValueError(f"record length {size} != n + L = {preset.n + preset.L}")
    if values.size < size:
        raise InsufficientLengthError(f"insufficient length: need at least one {size}-sample record")
    if values.size % size:
        raise ValueError(f"series length {values.size} is not a multiple of the record length {size}")
    records = values.reshape(-1, size)
    counts = _split_counts(len(records), preset.split)
    ds = _stack_splits(records[:, :preset.n], records[:, preset.n:], counts,
                       {"preset": preset.name, "records": len(records)})
    if normalize:
        ds = zscore_normalize(ds, stats=zscore_stats(records[:counts[0]]))
    return ds


def load_csv(path, preset: DatasetPreset, normalize: bool = True) -> WindowedDataset:
    """Load a one-value-per-row CSV and window it per ``preset``."""
    values = read_series_csv(path)
    if preset.beat_length:
        return records_to_dataset(values, preset, normalize)
    ds = window_splits(values, preset.n, preset.L, preset.split, preset.stride, normalize)
    ds.meta["preset"] = preset.name
    return ds


def save_dataset_csv(dataset: WindowedDataset, path) -> None:
    """Write items as rows: ``split, x_0..x_{n-1}, y_0..y_{L-1}``.

    Normalization statistics, if any, go in a leading ``# mean=..,std=..`` line.
    """
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    names = np.empty(len(dataset), dtype=object)
    names[:] = ""
    for name, sl in dataset.splits.items():
        names[sl] = name
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if dataset.normalization is not None:
            mean, std = dataset.normalization
            fh.write(f"# mean={mean!r},std={std!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["split"] + [f"x_{i}" for i in range(dataset.input_length)]
                        + [f"y_{i}" for i in range(dataset.horizon)])
        for name, x, y in zip(names, dataset.inputs, dataset.targets):
            writer.writerow([name] + [repr(float(v)) for v in x] + [repr(float(v)) for v in y])


def load_dataset_csv(path) -> WindowedDataset:
    normalization = None
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if lines and lines[0].startswith("#"):
        fields = dict(part.split("=") for part in lines[0][1:].strip().split(","))
        normalization = (float(fields["mean"]), float(fields["std"]))
        lines = lines[1:]
    rows = list(csv.reader(lines))
    if not rows:
        raise ValueError(f"{path}: empty dataset file")
    header = rows[0]
    n = sum(1 for h in header if h.startswith("x_"))
    L = sum(1 for h in header if h.startswith("y_"))
    names, inputs, targets = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 1 + n + L:
            raise ValueError(f"{path}:{lineno}: expected {1 + n + L} fields, got {len(row)}")
        try:
            vals = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
        names.append(row[0])
        inputs.append(vals[:n])
        targets.append(vals[n:])
    splits = {}
    for name in SPLIT_NAMES:
        idx = [i for i, s in enumerate(names) if s == name]
        if idx:
            if idx != list(range(idx[0], idx[-1] + 1)):
                raise ValueError(f"{path}: split {name!r} is not contiguous")
            splits[name] = slice(idx[0], idx[-1] + 1)
    return WindowedDataset(np.array(inputs).reshape(-1, n), np.array(targets).reshape(-1, L),
                           splits, normalization)


def dataset_summary(dataset: WindowedDataset) -> dict:
    return {
        "items": len(dataset),
        "input_length": dataset.input_length,
        "horizon": dataset.horizon,
        "splits": {k: v.stop - v.start for k, v in dataset.splits.items()},
        "normalization": dataset.normalization,
    }

