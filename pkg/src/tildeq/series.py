"""Core sequence types: series validation, windowing, chronological splits and
z-score normalization.

Everything here is univariate. A *series* is a 1-D float64 array; batches of
windows are 2-D arrays with one window per row.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

SPLIT_NAMES = ("train", "val", "test")


class InsufficientLengthError(ValueError):
    """Raised when a series is too short for the requested windows."""


def as_series(values, name: str = "series") -> np.ndarray:
    """Validate ``values`` as a non-empty, finite, 1-D float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must contain at least one sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite samples")
    return arr


@dataclass(frozen=True)
class ForecastPair:
    """Aligned ground truth and prediction horizons of equal length."""

    truth: np.ndarray
    pred: np.ndarray

    def __post_init__(self):
        truth = as_series(self.truth, "truth")
        pred = as_series(self.pred, "pred")
        if truth.shape != pred.shape:
            raise ValueError(
                f"truth and pred lengths differ: {truth.size} != {pred.size}"
            )
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "pred", pred)

    @property
    def horizon(self) -> int:
        return self.truth.size


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.6
    val_fraction: float = 0.2
    test_fraction: float = 0.2

    def __post_init__(self):
        fracs = (self.train_fraction, self.val_fraction, self.test_fraction)
        if any(not 0.0 <= f <= 1.0 for f in fracs):
            raise ValueError(f"split fractions must lie in [0, 1], got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {sum(fracs)}")

    def boundaries(self, length: int) -> tuple[int, int]:
        """End indices (exclusive) of the train and val segments."""
        train_end = int(math.floor(length * self.train_fraction + 1e-9))
        val_end = int(math.floor(length * (self.train_fraction + self.val_fraction) + 1e-9))
        return train_end, min(val_end, length)


@dataclass(frozen=True)
class WindowedDataset:
    """Input/target windows with contiguous train/val/test item ranges.

    ``inputs`` has shape (items, n) and ``targets`` shape (items, L). Items are
    ordered train, then val, then test; ``splits`` maps each split name to its
    item slice. ``normalization`` is ``(mean, std)`` once normalized.
    """

    inputs: np.ndarray
    targets: np.ndarray
    splits: dict = field(default_factory=dict)
    normalization: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if inputs.ndim != 2 or targets.ndim != 2:
            raise ValueError("inputs and targets must be 2-D (items, length)")
        if inputs.shape[0] != targets.shape[0]:
            raise ValueError("inputs and targets must have the same number of items")
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(targets))):
            raise ValueError("dataset contains non-finite samples")
        splits = dict(self.splits) or {"train": slice(0, inputs.shape[0])}
        if self.normalization is not None and not self.normalization[1] > 0:
            raise ValueError("normalization std must be positive")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "splits", splits)

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_length(self) -> int:
        return self.inputs.shape[1]

    @property
    def horizon(self) -> int:
        return self.targets.shape[1]

    def split(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(inputs, targets)`` for one named split (empty if absent)."""
        sl = self.splits.get(name, slice(0, 0))
        return self.inputs[sl], self.targets[sl]

    def denormalize(self, values: np.ndarray) -> np.ndarray:
        if self.normalization is None:
            return np.asarray(values, dtype=np.float64)
        mean, std = self.normalization
        return np.asarray(values, dtype=np.float64) * std + mean


def window_count(length: int, n: int, L: int, stride: int = 1) -> int:
    if length < n + L:
        return 0
    return (length - n - L) // stride + 1


def window(series, n: int, L: int, stride: int = 1) -> WindowedDataset:
    """Cut ``series`` into (input of length n, target of length L) windows.

    Window ``k`` reads ``series[t:t+n]`` as input and ``series[t+n:t+n+L]`` as
    target with ``t = k * stride``. All items land in the train split.
    """
    if n < 1 or L < 1 or stride < 1:
        raise ValueError("n, L and stride must all be >= 1")
    x = as_series(series)
    count = window_count(x.size, n, L, stride)
    if count == 0:
        raise InsufficientLengthError(
            f"insufficient length: series has {x.size} samples, need n + L = {n + L}"
        )
    starts = np.arange(count) * stride
    inputs = x[starts[:, None] + np.arange(n)]
    targets = x[starts[:, None] + n + np.arange(L)]
    return WindowedDataset(inputs, targets, {"train": slice(0, count)})


def split_series(series, spec: SplitSpec) -> dict[str, np.ndarray]:
    """Chronological, contiguous train/val/test segments of a series."""
    x = as_series(series)
    train_end, val_end = spec.boundaries(x.size)
    return {"train": x[:train_end], "val": x[train_end:val_end], "test": x[val_end:]}


def window_splits(series, n: int, L: int, spec: SplitSpec, stride: int = 1,
                  normalize: bool = True) -> WindowedDataset:
    """Split chronologically, then window each segment independently.

    Windows never straddle a split boundary. With ``normalize`` the z-score
    statistics come from the raw train segment only.
    """
    x = as_series(series)
    segments = split_series(x, spec)
    inputs, targets, splits = [], [], {}
    start = 0
    for name in SPLIT_NAMES:
        seg = segments[name]
        count = window_count(seg.size, n, L, stride)
        if count == 0:
            if name == "train":
                raise InsufficientLengthError(
                    f"insufficient length: train segment has {seg.size} samples, "
                    f"need n + L = {n + L}"
                )
            continue
        part = window(seg, n, L, stride)
        inputs.append(part.inputs)
        targets.append(part.targets)
        splits[name] = slice(start, start + count)
        start += count
    train_end, val_end = spec.boundaries(x.size)
    ds = WindowedDataset(
        np.concatenate(inputs), np.concatenate(targets), splits,
        meta={"segment_bounds": [0, train_end, val_end, x.size]},
    )
    if normalize:
        ds = zscore_normalize(ds, stats=zscore_stats(segments["train"]))
    return ds


def zscore_stats(values) -> tuple[float, float]:
    """Mean and population standard deviation of ``values``."""
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("cannot compute statistics of an empty array")
    mean = float(arr.mean())
    std = float(arr.std())
    if not std > 0:
        raise ValueError("constant series: standard deviation is zero")
    return mean, std


def zscore_normalize(dataset: WindowedDataset, stats: tuple[float, float] | None = None
                     ) -> WindowedDataset:
    """Z-score a dataset with train-split statistics.

    If ``stats`` is omitted they are computed from the train inputs and targets.
    A dataset that already carries normalization statistics is returned
    unchanged, so reapplying is a no-op.
    """
    if len(dataset) == 0:
        raise ValueError("cannot normalize an empty dataset")
    if dataset.normalization is not None:
        return dataset
    if stats is None:
        x, y = dataset.split("train")
        stats = zscore_stats(np.concatenate([x.ravel(), y.ravel()]))
    mean, std = stats
    if not std > 0:
        raise ValueError("constant series: standard deviation is zero")
    return replace(
        dataset,
        inputs=(dataset.inputs - mean) / std,
        targets=(dataset.targets - mean) / std,
        normalization=(float(mean), float(std)),
    )


def denormalize(dataset: WindowedDataset) -> WindowedDataset:
    """Undo :func:`zscore_normalize`."""
    if dataset.normalization is None:
        return dataset
    return replace(
        dataset,
        inputs=dataset.denormalize(dataset.inputs),
        targets=dataset.denormalize(dataset.targets),
        normalization=None,
    )


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_series_csv(path) -> np.ndarray:
    """Read a one-value-per-row CSV file.

    A non-numeric first row is treated as a header. Blank lines are skipped.
    Malformed rows raise ``ValueError`` naming the 1-based line number.
    """
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row]
            if not any(cells):
                continue
            if len(cells) != 1:
                raise ValueError(f"{path}:{lineno}: expected one value per row, got {len(cells)}")
            if not _is_number(cells[0]):
                if lineno == 1:
                    continue
                raise ValueError(f"{path}:{lineno}: malformed value {cells[0]!r}")
            v = float(cells[0])
            if not math.isfinite(v):
                raise ValueError(f"{path}:{lineno}: non-finite value {cells[0]!r}")
            values.append(v)
    if not values:
        raise ValueError(f"{path}: no numeric rows found")
    return np.asarray(values, dtype=np.float64)


def write_series_csv(path, values, header: str | None = "value") -> None:
    values = as_series(values)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header:
            fh.write(header + "\n")
        for v in values:
            fh.write(repr(float(v)) + "\n")
