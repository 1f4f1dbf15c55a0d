"""Offline nested hyperparameter grid search for the drift detector.

Protocol: split the development stream chronologically 70:30 into a model
half (D-H) and a tuning half (FT-H).  Train a tuning baseline on D-H
(60:20:20 subject-disjoint); its balanced accuracy on the D-H test subset is
the benchmark.  For every grid point: window FT-H, flag batches whose
balanced accuracy falls below the benchmark as drift, run the MMD+CUSUM
detector over the same windows, and score the alert vector against the drift
flags.  Points are ranked by detection accuracy, then sensitivity, then the
lowest (drift, threshold) pair.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Sample, sort_samples, split_by_fractions
from .drift import CusumParams, CusumState, StreamConfig, cusum_step, make_windows
from .errors import InsufficientDataError, TooFewSubjectsError
from .kernels import GAUSSIAN, LINEAR, POLY2, KernelSpec, ReferenceMmd
from .metrics import compute_metrics, label_drift_batches
from .model import ClassifierModel, TrainerConfig, predict, train

KERNEL_FAMILIES = (LINEAR, POLY2, GAUSSIAN)


@dataclass(frozen=True)
class GridPoint:
    window_len_days: float
    overlap: float
    min_batch: int
    cusum_drift: float
    cusum_threshold: float
    reference: str  # all | positive | negative
    kernel: str  # linear | poly2 | gaussian


@dataclass(frozen=True)
class DetectionScore:
    point: GridPoint
    accuracy: float
    sensitivity: float
    specificity: float
    n_batches: int
    n_drift_batches: int


def default_grid(window_len_days=(7.0, 10.0, 14.0),
                 overlap=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7),
                 min_batch=(0, 10, 20, 30),
                 cusum_drift=(0.2, 0.3, 0.4, 0.5),
                 cusum_threshold=(0.5, 0.6, 0.7, 0.8, 0.9, 1.0),
                 reference=("all", "positive", "negative"),
                 kernel=KERNEL_FAMILIES) -> list[GridPoint]:
    """Cartesian product of the investigated hyperparameter values."""
    return [GridPoint(*combo) for combo in itertools.product(
        window_len_days, overlap, min_batch, cusum_drift, cusum_threshold,
        reference, kernel)]


def kernel_spec_for(name: str) -> KernelSpec:
    if name not in KERNEL_FAMILIES:
        raise ValueError(f"unknown kernel {name!r}")
    return KernelSpec(family=name)  # gaussian resolves sigma per comparison


def reference_vectors(samples: Sequence[Sample], mode: str) -> np.ndarray:
    """Pooled per-sample vectors of the reference distribution."""
    if mode == "all":
        chosen = list(samples)
    elif mode == "positive":
        chosen = [s for s in samples if s.label == 1]
    elif mode == "negative":
        chosen = [s for s in samples if s.label == 0]
    else:
        raise ValueError(f"unknown reference mode {mode!r}")
    if not chosen:
        raise InsufficientDataError(f"reference mode {mode!r} selects no samples")
    return np.stack([s.pooled for s in chosen])


def score_alerts(drift_labels: Sequence[bool], alerts: Sequence[bool],
                 tolerance: int = 0) -> tuple[float, float, float]:
    """Detection accuracy / sensitivity / specificity over batch indices.

    With tolerance t > 0 an alert covers batches within t positions of its
    own; the default t=0 compares the two vectors index by index.  An
    undefined rate (no positive or no negative batches) scores 0.
    """
    labels = np.asarray(drift_labels, dtype=bool)
    alerts = np.asarray(alerts, dtype=bool)
    if tolerance > 0:
        covered = np.zeros_like(alerts)
        for i in np.flatnonzero(alerts):
            covered[max(0, i - tolerance) : i + tolerance + 1] = True
        alerts = covered
    tp = int(np.sum(alerts & labels))
    tn = int(np.sum(~alerts & ~labels))
    n_pos = int(np.sum(labels))
    n_neg = labels.size - n_pos
    accuracy = (tp + tn) / labels.size if labels.size else 0.0
    sensitivity = tp / n_pos if n_pos else 0.0
    specificity = tn / n_neg if n_neg else 0.0
    return accuracy, sensitivity, specificity


def _cusum_alerts(values: Sequence[float], params: CusumParams) -> list[bool]:
    state = CusumState()
    alerts = []
    for v in values:
        step = cusum_step(state, params, v)
        alerts.append(step.alert)
        state = step.state
    return alerts


def grid_search(dev_samples: Sequence[Sample], grid: Sequence[GridPoint],
                trainer: TrainerConfig, outer_ratio: float = 0.7,
                inner_fractions: Sequence[float] = (0.6, 0.2, 0.2),
                alert_tolerance: int = 0,
                ) -> tuple[list[DetectionScore], float]:
    """Rank detector configurations on the development stream.

    Returns the scores sorted best-first and the benchmark balanced accuracy
    of the tuning baseline.
    """
    dev_samples = sort_samples(dev_samples)
    try:
        dh, fth = split_by_fractions(dev_samples, [outer_ratio, 1.0 - outer_ratio])
        tr, va, te = split_by_fractions(dh, list(inner_fractions))
    except TooFewSubjectsError as exc:
        raise InsufficientDataError(str(exc)) from exc

    tr_l = [s for s in tr if s.label is not None]
    va_l = [s for s in va if s.label is not None]
    te_l = [s for s in te if s.label is not None]
    fth_l = [s for s in fth if s.label is not None]
    if not tr_l or not va_l or not te_l or not fth_l:
        raise InsufficientDataError("a nested tuning split has no labeled samples")

    dim = tr_l[0].dim
    model, _ = train(
        ClassifierModel.initial(dim),
        np.stack([s.pooled for s in tr_l]), np.array([s.label for s in tr_l], dtype=np.float64),
        np.stack([s.pooled for s in va_l]), np.array([s.label for s in va_l], dtype=np.float64),
        trainer,
    )
    bench_scores = [predict(model, s.segments) for s in te_l]
    benchmark = compute_metrics(bench_scores, [s.label for s in te_l]).balanced_accuracy

    # tuning assesses model performance per batch, so FT-H monitoring runs
    # over its labeled samples
    preds = {s.sample_id: predict(model, s.segments) for s in fth_l}
    refs = {mode: reference_vectors(dh, mode) for mode in ("all", "positive", "negative")}
    pool = {s.sample_id: s.pooled for s in fth_l}

    window_cache: dict[tuple, tuple] = {}
    mmd_cache: dict[tuple, list[float]] = {}

    def windows_for(wl: float, ov: float, mb: int):
        key = (wl, ov, mb)
        if key not in window_cache:
            windows = make_windows(fth_l, StreamConfig(window_len_days=wl, overlap=ov,
                                                       min_batch=mb, reference="all"))
            records = [
                compute_metrics([preds[s.sample_id] for s in w.samples],
                                [s.label for s in w.samples])
                for w in windows
            ]
            drift_flags = label_drift_batches(benchmark, records)
            window_cache[key] = (windows, drift_flags)
        return window_cache[key]

    engines = {(k, r): ReferenceMmd(refs[r], kernel_spec_for(k))
               for k in set(p.kernel for p in grid)
               for r in set(p.reference for p in grid)}

    def mmds_for(wl: float, ov: float, mb: int, kernel: str, reference: str) -> list[float]:
        key = (wl, ov, mb, kernel, reference)
        if key not in mmd_cache:
            windows, _ = windows_for(wl, ov, mb)
            engine = engines[(kernel, reference)]
            mmd_cache[key] = [
                engine.value(np.stack([pool[s.sample_id] for s in w.samples]))
                for w in windows
            ]
        return mmd_cache[key]

    scores: list[DetectionScore] = []
    for point in grid:
        _, drift_flags = windows_for(point.window_len_days, point.overlap, point.min_batch)
        values = mmds_for(point.window_len_days, point.overlap, point.min_batch,
                          point.kernel, point.reference)
        alerts = _cusum_alerts(values, CusumParams(drift=point.cusum_drift,
                                                   threshold=point.cusum_threshold))
        acc, sens, spec = score_alerts(drift_flags, alerts, alert_tolerance)
        scores.append(DetectionScore(point=point, accuracy=acc, sensitivity=sens,
                                     specificity=spec, n_batches=len(drift_flags),
                                     n_drift_batches=int(np.sum(drift_flags))))

    scores.sort(key=lambda s: (-s.accuracy, -s.sensitivity,
                               s.point.cusum_drift, s.point.cusum_threshold))
    return scores, benchmark


GRID_CSV_COLUMNS = ("window_len_days", "overlap", "min_batch", "cusum_drift",
                    "cusum_threshold", "reference", "kernel",
                    "det_accuracy", "det_sensitivity", "det_specificity")


def write_grid_csv(scores: Sequence[DetectionScore], path) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GRID_CSV_COLUMNS)
        for s in scores:
            p = s.point
            writer.writerow([p.window_len_days, p.overlap, p.min_batch, p.cusum_drift,
                             p.cusum_threshold, p.reference, p.kernel,
                             s.accuracy, s.sensitivity, s.specificity])
