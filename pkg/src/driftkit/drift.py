"""Stream windowing, the relative-change CUSUM, and the drift monitor.

The detector watches the MMD between each time-window batch of the
post-development stream and a fixed reference distribution.  The CUSUM
accumulates relative increases between successive MMD values beyond a
tolerated per-step `drift`; an alert fires when the accumulated excess
reaches `threshold`, after which the statistic resets to zero.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import EmptyStreamError, NonFiniteValueError
from .kernels import KernelSpec, ReferenceMmd

REL_EPS = 1e-12  # floor on the CUSUM denominator

REFERENCE_MODES = ("all", "positive", "negative")


@dataclass(frozen=True)
class StreamConfig:
    window_len_days: float = 7.0
    overlap: float = 0.0
    min_batch: int = 0
    reference: str = "all"

    def __post_init__(self):
        if self.window_len_days <= 0:
            raise ValueError("window_len_days must be > 0")
        if not (0.0 <= self.overlap < 1.0):
            raise ValueError("overlap must lie in [0, 1)")
        if self.min_batch < 0:
            raise ValueError("min_batch must be >= 0")
        if self.reference not in REFERENCE_MODES:
            raise ValueError(f"reference must be one of {REFERENCE_MODES}")


@dataclass(frozen=True)
class CusumParams:
    drift: float = 0.2
    threshold: float = 0.5

    def __post_init__(self):
        if self.drift < 0:
            raise ValueError("drift must be >= 0")
        if self.threshold <= 0:
            raise ValueError("threshold must be > 0")


@dataclass(frozen=True)
class CusumState:
    g: float = 0.0
    prev: float | None = None  # unset before the first observation


class CusumStep(NamedTuple):
    state: CusumState  # post-reset state to carry forward
    alert: bool
    g: float  # accumulated excess after this update, before any reset


def cusum_step(state: CusumState, params: CusumParams, value: float) -> CusumStep:
    """Feed one MMD observation through the one-sided relative-change CUSUM.

    The first observation only seeds the comparison baseline.  Afterwards
    r = (value - prev) / max(prev, 1e-12), g' = max(0, g + (r - drift)), and
    an alert fires when g' >= threshold (g resets to 0 on alert).
    """
    if not math.isfinite(value):
        raise NonFiniteValueError(f"monitored value is not finite: {value!r}")
    value = max(float(value), 0.0)  # PSD-kernel MMD may carry -1e-17 dust
    if state.prev is None:
        return CusumStep(CusumState(g=0.0, prev=value), alert=False, g=0.0)
    r = (value - state.prev) / max(state.prev, REL_EPS)
    g = max(0.0, state.g + (r - params.drift))
    alert = g >= params.threshold
    return CusumStep(CusumState(g=0.0 if alert else g, prev=value), alert=alert, g=g)


@dataclass
class WindowBatch:
    """One monitored time-window batch; t_start/t_end are epoch seconds."""

    index: int
    t_start: float
    t_end: float
    samples: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.samples)


def _epoch_seconds(sample) -> float:
    return sample.timestamp.timestamp()


def make_windows(samples: Sequence, cfg: StreamConfig) -> list[WindowBatch]:
    """Partition a time-sorted sample stream into window batches.

    Windows are [start, start + window_len) anchored at the first sample's
    timestamp; each next start advances by window_len * (1 - overlap).
    A window holding fewer than min_batch samples absorbs subsequent samples
    (extending its end and pushing the next start past the absorbed span)
    until min_batch is reached or the stream runs out; the trailing
    undersized remainder is still emitted.  Windows that contain no samples
    are skipped.
    """
    samples = sorted(samples, key=lambda s: (_epoch_seconds(s), s.sample_id))
    if not samples:
        raise EmptyStreamError("no samples to window")
    times = [_epoch_seconds(s) for s in samples]
    t_last = times[-1]
    win = cfg.window_len_days * 86400.0
    advance = win * (1.0 - cfg.overlap)

    batches: list[WindowBatch] = []
    start = times[0]
    while start <= t_last:
        end = start + win
        lo = bisect_left(times, start)
        hi = bisect_left(times, end)
        next_start = start + advance
        if hi - lo < cfg.min_batch and hi < len(times):
            while hi < len(times) and hi - lo < cfg.min_batch:
                hi += 1
            end = math.nextafter(times[hi - 1], math.inf)
            next_start = max(next_start, end)
        members = samples[lo:hi]
        if members:
            batches.append(WindowBatch(index=len(batches), t_start=start, t_end=end,
                                       samples=members))
        start = next_start
    return batches


@dataclass
class WindowRecord:
    batch: WindowBatch
    mmd_value: float
    cusum_g: float  # value at the update (pre-reset when alerting)
    alert: bool


def monitor(reference: np.ndarray, windows: Sequence[WindowBatch], kernel: KernelSpec,
            params: CusumParams, embed_pool: dict[str, np.ndarray]) -> list[WindowRecord]:
    """Track MMD(window, reference) over a window sequence and raise alerts.

    embed_pool maps sample_id -> pooled per-sample representation vector.
    After an alert the CUSUM continues from its reset state; swapping in an
    adapted model between windows does not touch the detector state.
    """
    engine = ReferenceMmd(reference, kernel)
    state = CusumState()
    records: list[WindowRecord] = []
    for w in windows:
        vecs = np.stack([embed_pool[s.sample_id] for s in w.samples])
        value = engine.value(vecs)
        step = cusum_step(state, params, value)
        records.append(WindowRecord(batch=w, mmd_value=value, cusum_g=step.g,
                                    alert=step.alert))
        state = step.state
    return records
