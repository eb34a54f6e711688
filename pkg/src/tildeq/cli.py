"""Command-line entry point: ``tildeq {run,ablate,plot,distort,metrics}``.

Settings come from, in increasing precedence: the ``--config`` file, environment
variables ``TILDEQ_<KEY>`` (``TILDEQ_TRAINER__MAX_EPOCHS=50`` sets
``trainer.max_epochs``), ``--set key=value`` flags, and the dedicated flags
(``--seed``, ``--repeats``, ``--out``, ``--loss``, ``--dataset``, ``--workers``).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import distortions as dist
from .experiment import (
    ResultRecord,
    ablate_alpha,
    emit_plots,
    format_mean_std,
    load_config,
    parse_value,
    run,
)
from .metrics import METRIC_NAMES, LcssConfig, evaluate
from .series import read_series_csv

log = logging.getLogger("tildeq")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--seed", type=int, help="base seed; repeat r uses seed + r")
    p.add_argument("--repeats", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--loss", help="mse, dilate, soft_dtw, tilde_q, ashift_only, phase_only, amp_only")
    p.add_argument("--dataset", help="synthetic, sinusoid, ecg5000, traffic or custom")
    p.add_argument("--data", dest="data_path", help="CSV file for non-synthetic datasets")
    p.add_argument("--workers", type=int, help="parallel repeat workers")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key, e.g. trainer.max_epochs=50")


def _config_from_args(args):
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = parse_value(value)
    for flag, key in (("seed", "base_seed"), ("repeats", "repeats"), ("out", "output_dir"),
                      ("loss", "loss"), ("dataset", "dataset"), ("data_path", "data_path"),
                      ("workers", "workers")):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = value
    return load_config(args.config, overrides)


def _print_summary(record: ResultRecord, label: str | None = None) -> None:
    head = label or record.config["loss"]
    cells = "  ".join(f"{m.upper()} {format_mean_std(record.summary[m])}" for m in METRIC_NAMES)
    failed = sum(r["status"] != "ok" for r in record.repeats)
    note = f"  ({failed} failed)" if failed else ""
    print(f"{head}: {cells}{note}")


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    record = run(cfg)
    _print_summary(record)
    print(f"wrote {Path(cfg.output_dir) / 'results.json'}")
    return EXIT_OK if record.ok else EXIT_FAILED


def cmd_ablate(args) -> int:
    cfg = _config_from_args(args)
    alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
    if not alphas:
        raise ValueError("--alphas needs at least one value")
    records = ablate_alpha(cfg, alphas, single_terms=not args.no_single_terms)
    for rec in records:
        _print_summary(rec, rec.metadata.get("label"))
    print(f"wrote {Path(cfg.output_dir) / 'ablation.csv'}")
    return EXIT_OK if all(r.ok for r in records) else EXIT_FAILED


def cmd_plot(args) -> int:
    path = Path(args.record)
    if path.is_dir():
        path = path / "results.json"
    record = ResultRecord.load(path)
    written = emit_plots(record, args.samples, args.plots_dir)
    print(f"wrote {len(written)} files")
    return EXIT_OK


def _distortion(args) -> dist.DistortionSpec:
    kind = dist.Kind(args.kind)
    if kind is dist.Kind.DYNAMIC_AMPLIFICATION:
        return dist.dynamic_amplification(dist.smooth_gain(args.depth, args.period))
    if kind is dist.Kind.DYNAMIC_TIME_SCALE:
        return dist.dynamic_time_scale(dist.smooth_warp(args.depth, args.period))
    return dist.DistortionSpec(kind, args.k)


def _random_corpus(count: int, length: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    corpus = []
    for _ in range(count):
        amp, period, phase = rng.uniform(0.5, 1.5), rng.uniform(8, 24), rng.uniform(0, 2 * np.pi)
        corpus.append(amp * np.sin(2 * np.pi * t / period + phase) + rng.normal(0, 0.05, length))
    return corpus


def cmd_distort(args) -> int:
    spec = _distortion(args)
    if args.input:
        corpus = [read_series_csv(args.input)]
    else:
        corpus = _random_corpus(args.count, args.length, args.seed if args.seed is not None else 0)
    out = Path(args.out or "distorted")
    out.mkdir(parents=True, exist_ok=True)
    target = out / f"{spec.kind.value}.csv"
    with open(target, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series", "t", "original", "distorted"])
        for idx, series in enumerate(corpus):
            warped = dist.apply(series, spec, args.out_length, periodic=args.periodic)
            for t, value in enumerate(warped):
                original = series[t] if t < len(series) else ""
                writer.writerow([idx, t, "" if original == "" else repr(float(original)),
                                 repr(float(value))])
    print(f"wrote {target}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    truth = read_series_csv(args.truth)
    pred = read_series_csv(args.pred)
    scores = evaluate(truth, pred, LcssConfig(args.epsilon, args.delta))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "metrics.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([m.upper() for m in METRIC_NAMES])
            writer.writerow([repr(scores[m]) for m in METRIC_NAMES])
    print(json.dumps({m.upper(): scores[m] for m in METRIC_NAMES}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tildeq", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train and evaluate over repeated seeds")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ablate", help="alpha sweep plus single-term losses")
    _add_config_flags(p)
    p.add_argument("--alphas", default="0.99,0.9,0.5,0.2")
    p.add_argument("--no-single-terms", action="store_true")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("plot", help="forecast CSV/SVG plots from a finished run")
    p.add_argument("record", help="results.json or the run's output directory")
    p.add_argument("--samples", type=int, default=3)
    p.add_argument("--plots-dir", help="defaults to <run>/plots")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("distort", help="write a distorted corpus as CSV")
    p.add_argument("--kind", required=True, choices=[k.value for k in dist.Kind])
    p.add_argument("--k", type=float, default=1.0, help="shift, gain or scale factor")
    p.add_argument("--depth", type=float, default=0.3, help="modulation depth for dynamic kinds")
    p.add_argument("--period", type=float, default=40.0, help="modulation period for dynamic kinds")
    p.add_argument("--input", help="one-column CSV; default is a seeded sinusoid corpus")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--length", type=int, default=64)
    p.add_argument("--out-length", type=int, help="output samples per series")
    p.add_argument("--periodic", action="store_true", help="treat sources as one period")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_distort)

    p = sub.add_parser("metrics", help="score a prediction CSV against a truth CSV")
    p.add_argument("truth")
    p.add_argument("pred")
    p.add_argument("--epsilon", type=float, help="LCSS match threshold")
    p.add_argument("--delta", type=int, help="LCSS time window")
    p.add_argument("--out", help="also write metrics.csv here")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
