"""Experiment orchestration: configuration files, repeated train/evaluate runs,
the alpha ablation, and per-sample forecast plots.

Config files are plain ``key = value`` lines. Keys are dotted paths into
:class:`ExperimentConfig` (``trainer.max_epochs = 200``); ``#`` starts a
comment. Values are read as int, float, ``true``/``false``, ``none``, a
comma-separated tuple, or otherwise a bare string. Environment variables named
``TILDEQ_<KEY>`` (dots written as ``__``) override the file, and explicit
overrides passed to :func:`load_config` override both.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import __version__
from .data import (
    SinusoidSpec,
    SyntheticSpec,
    generate_sinusoids,
    generate_synthetic,
    load_csv,
    preset,
)
from .gru import GruForecaster
from .losses import LOSS_NAMES, DilateConfig, TildeQConfig, make_loss
from .metrics import METRIC_NAMES, LcssConfig, evaluate
from .series import SplitSpec, WindowedDataset
from .training import TrainerConfig, TrainingDivergedError, train
from .gru import NumericDivergenceError

log = logging.getLogger(__name__)

ENV_PREFIX = "TILDEQ_"
DATASETS = ("synthetic", "sinusoid", "ecg5000", "traffic", "custom")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "synthetic"
    data_path: str | None = None
    custom_n: int | None = None
    custom_L: int | None = None
    split: SplitSpec | None = None
    synthetic: SyntheticSpec = SyntheticSpec()
    sinusoid: SinusoidSpec = SinusoidSpec()
    loss: str = "tilde_q"
    tildeq: TildeQConfig = TildeQConfig()
    dilate: DilateConfig = DilateConfig()
    trainer: TrainerConfig = TrainerConfig()
    hidden_size: int = 128
    repeats: int = 10
    base_seed: int = 0
    lcss: LcssConfig = LcssConfig()
    output_dir: str = "runs/latest"
    workers: int = 1

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.dataset not in DATASETS:
            raise ValueError(f"unknown dataset {self.dataset!r}; expected one of {DATASETS}")
        if self.loss not in LOSS_NAMES:
            raise ValueError(f"unknown loss {self.loss!r}; expected one of {LOSS_NAMES}")
        if self.dataset in ("ecg5000", "traffic", "custom") and not self.data_path:
            raise ValueError(f"dataset {self.dataset!r} needs data_path")
        if self.dataset == "custom" and not (self.custom_n and self.custom_L):
            raise ValueError("custom dataset needs custom_n and custom_L")

    def seeds(self) -> list[int]:
        return [self.base_seed + r for r in range(self.repeats)]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return apply_overrides(cls(), _flatten(data))


# -- config parsing ----------------------------------------------------------

def parse_value(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null", ""):
        return None
    if "," in text:
        return tuple(parse_value(part) for part in text.split(","))
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = parse_value(value)
    return values


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for name, value in environ.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):].lower().replace("__", ".")
            out[key] = parse_value(value)
    return out


def _flatten(data: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in data.items():
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{prefix}{key}."))
        else:
            flat[f"{prefix}{key}"] = tuple(value) if isinstance(value, list) else value
    return flat


def _coerce(current, value, key: str):
    if value is None:
        return None
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ValueError(f"{key}: expected true/false, got {value!r}")
        return value
    if isinstance(current, float) and isinstance(value, int):
        return float(value)
    if isinstance(current, tuple) and not isinstance(value, tuple):
        raise ValueError(f"{key}: expected a comma-separated pair, got {value!r}")
    return value


def apply_overrides(cfg, overrides: dict):
    """Return ``cfg`` with dotted-key overrides applied to nested dataclasses."""
    grouped: dict[str, dict] = {}
    direct = {}
    for key, value in overrides.items():
        head, _, rest = key.partition(".")
        if rest:
            grouped.setdefault(head, {})[rest] = value
        else:
            direct[head] = value
    names = {f.name for f in dataclasses.fields(cfg)}
    changes = {}
    for key, value in direct.items():
        if key not in names:
            raise ValueError(f"unknown config key {key!r}")
        current = getattr(cfg, key)
        if dataclasses.is_dataclass(current):
            raise ValueError(f"{key!r} is a section; set {key}.<field> instead")
        changes[key] = _coerce(current, value, key)
    for key, sub in grouped.items():
        if key not in names:
            raise ValueError(f"unknown config key {key!r}")
        current = getattr(cfg, key)
        if current is None and key == "split":
            current = SplitSpec()
        if not dataclasses.is_dataclass(current):
            raise ValueError(f"{key!r} has no sub-keys")
        changes[key] = apply_overrides(current, sub)
    return dataclasses.replace(cfg, **changes)


def load_config(path=None, overrides: dict | None = None, environ=None) -> ExperimentConfig:
    values = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text(encoding="utf-8"), str(path)))
    values.update(env_overrides(environ))
    values.update(overrides or {})
    return apply_overrides(ExperimentConfig(), values)


# -- single repeat -------------------------------------------------------------

def repeat_seeds(seed: int) -> dict[str, int]:
    """Data, init and shuffle seeds derived from one per-repeat root seed."""
    children = np.random.SeedSequence(seed).spawn(3)
    data, init, shuffle = (int(c.generate_state(1)[0]) for c in children)
    return {"data": data, "init": init, "shuffle": shuffle}


def build_dataset(cfg: ExperimentConfig, seed: int) -> WindowedDataset:
    data_seed = repeat_seeds(seed)["data"]
    if cfg.dataset == "synthetic":
        return generate_synthetic(dataclasses.replace(cfg.synthetic, seed=data_seed))
    if cfg.dataset == "sinusoid":
        return generate_sinusoids(dataclasses.replace(cfg.sinusoid, seed=data_seed))
    extra = {}
    if cfg.split is not None:
        extra["split"] = cfg.split
    if cfg.dataset == "custom":
        chosen = preset("custom", n=cfg.custom_n, L=cfg.custom_L, **extra)
    else:
        chosen = preset(cfg.dataset, **extra)
    return load_csv(cfg.data_path, chosen)


def build_loss(cfg: ExperimentConfig):
    return make_loss(cfg.loss, cfg.tildeq, cfg.dilate)


def _checkpoint_path(cfg: ExperimentConfig, index: int) -> Path:
    return Path(cfg.output_dir) / "checkpoints" / f"repeat_{index:02d}.bin"


def run_repeat(cfg: ExperimentConfig, index: int) -> dict:
    seed = cfg.base_seed + index
    seeds = repeat_seeds(seed)
    entry = {"repeat": index, "seed": seed, "status": "ok", "metrics": None, "error": None}
    try:
        data = build_dataset(cfg, seed)
        model = GruForecaster(cfg.hidden_size, seed=seeds["init"])
        trainer = dataclasses.replace(cfg.trainer, seed=seeds["shuffle"])
        report = train(model, data, build_loss(cfg), trainer)
        x_test, y_test = data.split("test")
        pred = model.forward(x_test, data.horizon)
        rows = [evaluate(y, p, cfg.lcss) for y, p in zip(y_test, pred)]
        entry["metrics"] = {k: float(np.mean([r[k] for r in rows])) for k in METRIC_NAMES}
        entry["train"] = {
            "initial_val_loss": report.initial_val_loss,
            "best_val_loss": report.best_val_loss,
            "best_epoch": report.best_epoch,
            "stopped_epoch": report.stopped_epoch,
            "early_stopped": report.early_stopped,
            "clipped_steps": report.clipped_steps,
            "val_losses": report.val_losses,
        }
        ckpt = _checkpoint_path(cfg, index)
        model.save(ckpt)
        entry["checkpoint"] = str(ckpt.relative_to(cfg.output_dir))
    except (TrainingDivergedError, NumericDivergenceError, FloatingPointError) as exc:
        entry["status"] = "failed"
        entry["error"] = f"{type(exc).__name__}: {exc}"
        log.warning("repeat %d (seed %d) failed: %s", index, seed, exc)
    return entry


# -- results -------------------------------------------------------------------

@dataclass
class ResultRecord:
    config: dict
    seeds: list
    repeats: list
    summary: dict
    metadata: dict = field(default_factory=dict)
    wall_clock: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return any(r["status"] == "ok" for r in self.repeats)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        return cls(**json.loads(text))

    @classmethod
    def load(cls, path) -> "ResultRecord":
        record = cls.from_json(Path(path).read_text(encoding="utf-8"))
        record.metadata.setdefault("output_dir", str(Path(path).parent))
        return record

    def metric_values(self, name: str) -> list[float]:
        return [r["metrics"][name] for r in self.repeats if r["status"] == "ok"]


def summarize(repeats: list[dict]) -> dict:
    summary = {}
    for name in METRIC_NAMES:
        vals = [r["metrics"][name] for r in repeats if r["status"] == "ok"]
        if vals:
            summary[name] = {"mean": float(np.mean(vals)), "std": float(np.std(vals)), "n": len(vals)}
        else:
            summary[name] = {"mean": None, "std": None, "n": 0}
    return summary


def format_mean_std(stats: dict) -> str:
    if stats["mean"] is None:
        return "n/a"
    return f"{stats['mean']:.4f} ± {stats['std']:.4f}"


def write_metrics_csv(record: ResultRecord, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["repeat", "seed", "status"] + [m.upper() for m in METRIC_NAMES])
        for r in record.repeats:
            values = [repr(r["metrics"][m]) if r["metrics"] else "" for m in METRIC_NAMES]
            writer.writerow([r["repeat"], r["seed"], r["status"]] + values)
        for stat in ("mean", "std"):
            writer.writerow([stat, "", ""] + [
                "" if record.summary[m][stat] is None else repr(record.summary[m][stat])
                for m in METRIC_NAMES
            ])


def _metadata(cfg: ExperimentConfig) -> dict:
    return {
        "code_version": __version__,
        "lcss_epsilon": "0.1 * std(truth) per pair" if cfg.lcss.epsilon is None else cfg.lcss.epsilon,
        "lcss_delta": "horizon (unwindowed)" if cfg.lcss.delta is None else cfg.lcss.delta,
        "tdi": "sum of (i - j)^2 / T^2 along the hard-DTW path",
        "dtw": "raw accumulated squared-difference cost",
        "batch_size": cfg.trainer.batch_size,
        "teacher_forcing": False,
        "clip_norm": cfg.trainer.clip_norm,
        "std": "population std over repeats",
    }


def run(cfg: ExperimentConfig, write: bool = True) -> ResultRecord:
    """Train and evaluate ``cfg.repeats`` times; seeds are ``base_seed + repeat``."""
    started = time.time()
    indices = range(cfg.repeats)
    if cfg.workers > 1 and cfg.repeats > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            repeats = list(pool.map(run_repeat, [cfg] * cfg.repeats, indices))
    else:
        repeats = [run_repeat(cfg, i) for i in indices]
    repeats.sort(key=lambda r: r["repeat"])
    record = ResultRecord(
        config=cfg.to_dict(),
        seeds=cfg.seeds(),
        repeats=repeats,
        summary=summarize(repeats),
        metadata=_metadata(cfg),
        wall_clock={"started_unix": started, "seconds": time.time() - started},
    )
    if write:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.json").write_text(record.to_json(), encoding="utf-8")
        write_metrics_csv(record, out / "metrics.csv")
    return record


# -- ablation --------------------------------------------------------------------

SINGLE_TERM_ROWS = (
    ("Amplitude only", "ashift_only"),
    ("Phase only", "phase_only"),
    ("Amplification only", "amp_only"),
)


def ablate_alpha(base: ExperimentConfig, alphas, single_terms: bool = True) -> list[ResultRecord]:
    """One TILDE-Q run per alpha (shared seeds), then the single-term runs.

    Writes each run under ``<output_dir>/<label>/`` and a comparison table to
    ``<output_dir>/ablation.csv``.
    """
    alphas = list(alphas)
    if not alphas:
        raise ValueError("ablation needs at least one alpha")
    for a in alphas:
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {a}")
    root = Path(base.output_dir)
    plan = [(f"alpha={a:g}", dataclasses.replace(
        base, loss="tilde_q", tildeq=dataclasses.replace(base.tildeq, alpha=a))) for a in alphas]
    if single_terms:
        plan += [(label, dataclasses.replace(base, loss=loss)) for label, loss in SINGLE_TERM_ROWS]
    records = []
    for label, cfg in plan:
        slug = label.replace("=", "_").replace(" ", "_").lower()
        cfg = dataclasses.replace(cfg, output_dir=str(root / slug))
        record = run(cfg)
        record.metadata["label"] = label
        (Path(cfg.output_dir) / "results.json").write_text(record.to_json(), encoding="utf-8")
        records.append(record)
    write_ablation_table(records, root / "ablation.csv")
    return records


def write_ablation_table(records: list[ResultRecord], path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method"] + [m.upper() for m in METRIC_NAMES])
        for rec in records:
            writer.writerow([rec.metadata.get("label", rec.config["loss"])]
                            + [format_mean_std(rec.summary[m]) for m in METRIC_NAMES])


# -- plots -------------------------------------------------------------------------

def _svg_path(values: np.ndarray, x0, y_of, dx) -> str:
    points = [f"{x0 + i * dx:.2f},{y_of(v):.2f}" for i, v in enumerate(values)]
    return "M " + " L ".join(points)


def forecast_svg(truth, pred, width: int = 480, height: int = 240, title: str = "") -> str:
    """Line chart with one ``<path>`` per series (truth, then prediction)."""
    truth = np.asarray(truth, dtype=float)
    pred = np.asarray(pred, dtype=float)
    lo = float(min(truth.min(), pred.min()))
    hi = float(max(truth.max(), pred.max()))
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 20
    dx = (width - 2 * pad) / max(len(truth) - 1, 1)

    def y_of(v):
        return height - pad - (v - lo) / (hi - lo) * (height - 2 * pad)

    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f"<title>{escape(title)}</title>\n"
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
        f'<path id="truth" d="{_svg_path(truth, pad, y_of, dx)}" fill="none" stroke="black" stroke-width="1.5"/>\n'
        f'<path id="prediction" d="{_svg_path(pred, pad, y_of, dx)}" fill="none" stroke="#d62728" stroke-width="1.5"/>\n'
        "</svg>\n"
    )


def emit_plots(record: ResultRecord, samples: int, out_dir=None) -> list[Path]:
    """Write ``sample_XX.csv`` and ``sample_XX.svg`` for the first test items.

    Uses the checkpoint of the first successful repeat; returns written paths.
    """
    if samples < 0:
        raise ValueError("samples must be >= 0")
    if samples == 0:
        return []
    base = Path(record.metadata.get("output_dir") or record.config["output_dir"])
    ok = [r for r in record.repeats if r["status"] == "ok" and r.get("checkpoint")]
    if not ok:
        raise FileNotFoundError("missing checkpoint: no successful repeat in the record")
    ckpt = base / ok[0]["checkpoint"]
    if not ckpt.exists():
        raise FileNotFoundError(f"missing checkpoint: {ckpt}")
    model = GruForecaster.load(ckpt)
    cfg = ExperimentConfig.from_dict(record.config)
    data = build_dataset(cfg, ok[0]["seed"])
    x_test, y_test = data.split("test")
    count = min(samples, len(x_test))
    pred = model.forward(x_test[:count], data.horizon)
    out = Path(out_dir) if out_dir is not None else base / "plots"
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i in range(count):
        stem = out / f"sample_{i:02d}"
        with open(stem.with_suffix(".csv"), "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "truth", "prediction"])
            for t, (a, b) in enumerate(zip(y_test[i], pred[i])):
                writer.writerow([t, repr(float(a)), repr(float(b))])
        stem.with_suffix(".svg").write_text(
            forecast_svg(y_test[i], pred[i], title=f"test item {i}"), encoding="utf-8")
        written += [stem.with_suffix(".csv"), stem.with_suffix(".svg")]
    return written
