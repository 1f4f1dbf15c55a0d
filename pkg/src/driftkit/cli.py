"""Command-line entry point.

    driftkit <subcommand> --config cfg.json [--seed N] [--out DIR]

Subcommands: synth | ingest | train-baseline | tune | scan | run | evaluate.
Runtime failures exit 1 with a machine-readable JSON error on stderr; usage
errors exit 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import PipelineConfig, load_config
from .data import chronological_split, sort_samples, write_embeddings_ndjson, write_manifest
from .errors import ConfigError, DriftKitError
from .model import load_checkpoint
from .pipeline import (
    evaluate_split,
    ingest_from_config,
    run,
    save_model,
    scan,
    train_baseline,
)
from .synth import generate
from .tuning import default_grid, grid_search, write_grid_csv

EMBEDDINGS_FILENAME = "embeddings.ndjson"
MANIFEST_FILENAME = "manifest.csv"


def cmd_synth(cfg: PipelineConfig, out: Path) -> dict:
    if cfg.synth is None:
        raise ConfigError("synth subcommand needs a 'synth' config section")
    samples = generate(replace(cfg.synth, seed=cfg.seed))
    write_embeddings_ndjson(samples, out / EMBEDDINGS_FILENAME)
    write_manifest([(s, EMBEDDINGS_FILENAME) for s in samples], out / MANIFEST_FILENAME)
    return {"samples": len(samples), "manifest": str(out / MANIFEST_FILENAME)}


def cmd_ingest(cfg: PipelineConfig, out: Path) -> dict:
    samples = ingest_from_config(cfg)
    write_embeddings_ndjson(sort_samples(samples), out / "ingested.ndjson")
    return {"samples": len(samples), "ndjson": str(out / "ingested.ndjson")}


def cmd_train_baseline(cfg: PipelineConfig, out: Path) -> dict:
    samples = ingest_from_config(cfg)
    base = train_baseline(cfg, samples)
    save_model(base.model, cfg, out / "model.json")
    doc = {
        "benchmark": base.benchmark,
        "epochs_run": base.history.epochs_run,
        "best_epoch": base.history.best_epoch,
        "sizes": {"train": len(base.train_split), "val": len(base.val_split),
                  "test": len(base.test_split), "post": len(base.post)},
    }
    (out / "training.json").write_text(json.dumps(doc, indent=1) + "\n")
    return {"benchmark": base.benchmark, "model": str(out / "model.json")}


def cmd_tune(cfg: PipelineConfig, out: Path) -> dict:
    samples = ingest_from_config(cfg)
    dev, _ = chronological_split(samples, cfg.split.dev_ratio)
    grid = default_grid(
        window_len_days=cfg.tuning.window_len_days,
        overlap=cfg.tuning.overlap,
        min_batch=cfg.tuning.min_batch,
        cusum_drift=cfg.tuning.cusum_drift,
        cusum_threshold=cfg.tuning.cusum_threshold,
        reference=cfg.tuning.reference,
        kernel=cfg.tuning.kernel,
    )
    scores, benchmark = grid_search(dev, grid, cfg.trainer,
                                    outer_ratio=cfg.split.dev_ratio,
                                    inner_fractions=cfg.split.inner,
                                    alert_tolerance=cfg.tuning.alert_tolerance)
    write_grid_csv(scores, out / "grid_results.csv")
    top = scores[0]
    return {
        "points": len(scores),
        "benchmark": benchmark,
        "csv": str(out / "grid_results.csv"),
        "top": {"window_len_days": top.point.window_len_days, "overlap": top.point.overlap,
                "min_batch": top.point.min_batch, "cusum_drift": top.point.cusum_drift,
                "cusum_threshold": top.point.cusum_threshold,
                "reference": top.point.reference, "kernel": top.point.kernel,
                "det_accuracy": top.accuracy, "det_sensitivity": top.sensitivity,
                "det_specificity": top.specificity},
    }


def cmd_scan(cfg: PipelineConfig, out: Path) -> dict:
    report = scan(cfg)
    (out / "report.ndjson").write_text(report.to_ndjson())
    return {"windows": len(report.rows), "alerts": len(report.alert_windows),
            "report": str(out / "report.ndjson")}


def cmd_run(cfg: PipelineConfig, out: Path) -> dict:
    report = run(cfg)
    (out / "report.ndjson").write_text(report.to_ndjson())
    return {"windows": len(report.rows), "alerts": len(report.alert_windows),
            "adaptations": len(report.events), "benchmark": report.benchmark,
            "report": str(out / "report.ndjson")}


def cmd_evaluate(cfg: PipelineConfig, out: Path) -> dict:
    if cfg.evaluate.checkpoint is None:
        raise ConfigError("evaluate subcommand needs evaluate.checkpoint")
    model, _ = load_checkpoint(cfg.evaluate.checkpoint)
    samples = ingest_from_config(cfg)
    result = evaluate_split(cfg, model, samples)
    (out / "evaluation.json").write_text(json.dumps(result, indent=1) + "\n")
    return result


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "train-baseline": cmd_train_baseline,
    "tune": cmd_tune,
    "scan": cmd_scan,
    "run": cmd_run,
    "evaluate": cmd_evaluate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="driftkit",
                                     description="streaming drift detection and model adaptation")
    sub = parser.add_subparsers(dest="command", required=True, metavar="|".join(COMMANDS))
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=".", help="output directory (created if missing)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        result = COMMANDS[args.command](cfg, out)
        print(json.dumps(result, separators=(",", ":")))
        return 0
    except DriftKitError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc),
                          "stage": args.command}), file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(json.dumps({"error": type(exc).__name__, "message": str(exc),
                          "stage": args.command}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
