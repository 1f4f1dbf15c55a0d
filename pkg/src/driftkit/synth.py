"""Seeded synthetic embedding streams with controllable drift.

Pre-onset samples come from two class-conditional Gaussian blobs with means
+/- class_sep along the first coordinate and unit covariance; each sample
carries 1-3 segment vectors.  Post-onset the distribution is transformed by
the configured drift kind:

  - CovariateShift(delta): embeddings translated by delta, labels preserved
  - LabelFlip(rate): recorded labels flip with the given probability
  - BalanceShift(positive_rate): class prevalence switches to the new rate
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

from .data import Sample
from .errors import ConfigError

STREAM_EPOCH = datetime(2021, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class CovariateShift:
    delta: tuple[float, ...]

    kind = "covariate_shift"


@dataclass(frozen=True)
class LabelFlip:
    rate: float

    kind = "label_flip"


@dataclass(frozen=True)
class BalanceShift:
    positive_rate: float

    kind = "balance_shift"


DriftKind = CovariateShift | LabelFlip | BalanceShift


@dataclass
class SynthConfig:
    n_samples: int
    span_days: float
    dim: int = 16
    class_balance: float = 0.5
    drift_onset: float = 1.0  # fraction of the span; 1.0 -> stationary
    drift_kind: DriftKind | None = None
    class_sep: float = 1.5
    n_subjects: int | None = None  # None -> one subject per sample
    start: datetime = field(default_factory=lambda: STREAM_EPOCH)
    seed: int = 0

    def validate(self) -> None:
        if self.n_samples < 2:
            raise ConfigError("n_samples must be >= 2")
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if self.span_days <= 0:
            raise ConfigError("span_days must be > 0")
        if not (0.0 < self.class_balance < 1.0):
            raise ConfigError("class_balance must lie in (0, 1)")
        if not (0.0 <= self.drift_onset <= 1.0):
            raise ConfigError("drift_onset must lie in [0, 1]")
        if isinstance(self.drift_kind, CovariateShift):
            if len(self.drift_kind.delta) != self.dim:
                raise ConfigError("covariate-shift delta must have length dim")
        if isinstance(self.drift_kind, LabelFlip):
            if not (0.0 <= self.drift_kind.rate <= 1.0):
                raise ConfigError("label-flip rate must lie in [0, 1]")
        if isinstance(self.drift_kind, BalanceShift):
            if not (0.0 < self.drift_kind.positive_rate < 1.0):
                raise ConfigError("balance-shift positive_rate must lie in (0, 1)")


def generate(cfg: SynthConfig) -> list[Sample]:
    """Seeded generation; equal configs give bitwise-identical sample sets."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_samples

    times = np.sort(rng.uniform(0.0, cfg.span_days, size=n))
    onset = cfg.drift_onset * cfg.span_days
    post = times >= onset

    labels = (rng.random(n) < cfg.class_balance).astype(int)
    if isinstance(cfg.drift_kind, BalanceShift):
        shifted = (rng.random(n) < cfg.drift_kind.positive_rate).astype(int)
        labels = np.where(post, shifted, labels)

    blob = labels.copy()
    if isinstance(cfg.drift_kind, LabelFlip):
        flips = rng.random(n) < cfg.drift_kind.rate
        labels = np.where(post & flips, 1 - labels, labels)

    if cfg.n_subjects is not None:
        subject_idx = rng.integers(0, cfg.n_subjects, size=n)
    else:
        subject_idx = np.arange(n)
    seg_counts = rng.integers(1, 4, size=n)

    delta = None
    if isinstance(cfg.drift_kind, CovariateShift):
        delta = np.asarray(cfg.drift_kind.delta, dtype=np.float64)

    samples: list[Sample] = []
    for i in range(n):
        mean = np.zeros(cfg.dim)
        mean[0] = cfg.class_sep if blob[i] == 1 else -cfg.class_sep
        if delta is not None and post[i]:
            mean = mean + delta
        segments = mean + rng.standard_normal((seg_counts[i], cfg.dim))
        samples.append(Sample(
            sample_id=f"s{i:06d}",
            subject_id=f"u{subject_idx[i]:06d}",
            timestamp=cfg.start + timedelta(days=float(times[i])),
            label=int(labels[i]),
            segments=segments,
        ))
    return samples
