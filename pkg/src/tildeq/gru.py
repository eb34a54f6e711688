"""Single-layer sequence-to-sequence GRU forecaster on the autodiff tape.

The encoder reads the input window one sample at a time. The decoder starts
from the encoder's final state, is fed the last observed value, and then
feeds back its own previous prediction for every further step.

Checkpoint format (little-endian)::

    bytes 0-3   magic  b"TQGR"
    bytes 4-7   uint32 format version (1)
    bytes 8-11  uint32 hidden_size
    then        float64 parameter blocks, C order, in PARAM_NAMES order
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from . import autodiff as ad

MAGIC = b"TQGR"
FORMAT_VERSION = 1


class NumericDivergenceError(FloatingPointError):
    """A forward pass produced a non-finite activation."""


def param_shapes(hidden_size: int) -> dict[str, tuple[int, ...]]:
    H = hidden_size
    shapes = {}
    for part in ("enc", "dec"):
        shapes[f"{part}_W_zr"] = (1 + H, 2 * H)
        shapes[f"{part}_b_zr"] = (2 * H,)
        shapes[f"{part}_W_n"] = (1 + H, H)
        shapes[f"{part}_b_n"] = (H,)
    shapes["out_W"] = (H, 1)
    shapes["out_b"] = (1,)
    return shapes


PARAM_NAMES = tuple(param_shapes(1))


class GruForecaster:
    def __init__(self, hidden_size: int = 128, seed: int | None = 0, params: dict | None = None):
        if hidden_size < 1:
            raise ValueError("hidden_size must be >= 1")
        self.hidden_size = hidden_size
        shapes = param_shapes(hidden_size)
        if params is None:
            rng = np.random.default_rng(seed)
            bound = 1.0 / np.sqrt(hidden_size)
            params = {name: rng.uniform(-bound, bound, size=shape) for name, shape in shapes.items()}
        else:
            params = {name: np.array(params[name], dtype=np.float64) for name in PARAM_NAMES}
            for name, shape in shapes.items():
                if params[name].shape != shape:
                    raise ValueError(f"{name}: expected shape {shape}, got {params[name].shape}")
        self.params = params

    def copy_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def num_parameters(self) -> int:
        return sum(v.size for v in self.params.values())

    # -- forward --------------------------------------------------------
    def _cell(self, tape, p, part, x, h):
        H = self.hidden_size
        gates = ad.sigmoid(ad.concat([x, h]) @ p[f"{part}_W_zr"] + p[f"{part}_b_zr"])
        z = gates[:, :H]
        r = gates[:, H:]
        cand = ad.tanh(ad.concat([x, r * h]) @ p[f"{part}_W_n"] + p[f"{part}_b_n"])
        return cand + z * (h - cand)

    def trace(self, inputs, horizon: int):
        """Run the forward pass on a fresh tape.

        Returns ``(tape, param_vars, output_var)``; ``output_var`` holds the
        ``(B, horizon)`` forecasts.
        """
        x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
        if x.shape[1] < 1:
            raise ValueError("input window must hold at least one sample")
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        tape = ad.Tape()
        p = {name: tape.var(value) for name, value in self.params.items()}
        B = x.shape[0]
        h = tape.var(np.zeros((B, self.hidden_size)))
        for t in range(x.shape[1]):
            h = self._cell(tape, p, "enc", x[:, t:t + 1], h)
        feed = tape.var(x[:, -1:])
        outputs = []
        for _ in range(horizon):
            h = self._cell(tape, p, "dec", feed, h)
            feed = h @ p["out_W"] + p["out_b"]
            outputs.append(feed)
        out = ad.concat(outputs, axis=1)
        if not np.all(np.isfinite(out.value)):
            raise NumericDivergenceError("numeric divergence: non-finite forecast")
        return tape, p, out

    def forward(self, inputs, horizon: int) -> np.ndarray:
        """Forecast ``horizon`` steps for one window ``(n,)`` or a batch ``(B, n)``."""
        single = np.ndim(inputs) == 1
        out = self.trace(inputs, horizon)[2].value
        return out[0] if single else out

    __call__ = forward

    def gradients(self, inputs, horizon: int, grad_output) -> tuple[np.ndarray, dict]:
        """Forecasts and the parameter gradients of ``sum(grad_output * forecasts)``."""
        tape, p, out = self.trace(inputs, horizon)
        grad_output = np.asarray(grad_output, dtype=np.float64).reshape(out.shape)
        grads = tape.gradients(out, grad_output, [p[name] for name in PARAM_NAMES])
        return out.value, dict(zip(PARAM_NAMES, grads))

    # -- persistence ----------------------------------------------------
    def to_bytes(self) -> bytes:
        header = MAGIC + struct.pack("<II", FORMAT_VERSION, self.hidden_size)
        body = b"".join(self.params[name].astype("<f8").tobytes(order="C") for name in PARAM_NAMES)
        return header + body

    @classmethod
    def from_bytes(cls, blob: bytes) -> "GruForecaster":
        if len(blob) < 12 or blob[:4] != MAGIC:
            raise ValueError("not a forecaster checkpoint (bad magic)")
        version, hidden = struct.unpack("<II", blob[4:12])
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        shapes = param_shapes(hidden)
        expected = 12 + 8 * sum(int(np.prod(s)) for s in shapes.values())
        if len(blob) != expected:
            raise ValueError(f"checkpoint size {len(blob)} != expected {expected}")
        params, offset = {}, 12
        for name in PARAM_NAMES:
            count = int(np.prod(shapes[name]))
            params[name] = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shapes[name])
            offset += 8 * count
        return cls(hidden, params=params)

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "GruForecaster":
        return cls.from_bytes(Path(path).read_bytes())
