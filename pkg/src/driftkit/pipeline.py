"""End-to-end orchestration: ingestion, splits, baseline training, stream
monitoring, alert-triggered adaptation, and per-window reporting.

The monitored representation is each sample's pooled raw embedding; the
reference distribution is frozen at baseline-training time, so the MMD
trajectory (and hence the alert sequence) is identical across adaptation
modes on the same stream and seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .adaptation import (
    DatasetOracle,
    FileQueueOracle,
    LabeledPool,
    al_retrain,
    al_select,
    random_select,
    uda_retrain,
)
from .audio import (
    SEGMENT_FRAMES,
    RandomProjectionEmbedder,
    embed,
    fit_to_target_frames,
    load_wav,
    preprocess_clip,
    segment,
    target_frames_quantile,
)
from .config import PipelineConfig
from .data import (
    Sample,
    check_unique_ids,
    chronological_split,
    read_embeddings_ndjson,
    read_manifest,
    sort_samples,
    split_by_fractions,
    subjects_disjoint,
)
from .drift import CusumState, cusum_step, make_windows
from .errors import ConfigError, EmptySplitError, MissingFileError, ParseError
from .kernels import ReferenceMmd
from .metrics import compute_metrics
from .model import ClassifierModel, predict_pooled, save_checkpoint, train
from .tuning import reference_vectors

AUDIO_SUFFIXES = (".wav",)
NDJSON_SUFFIXES = (".ndjson", ".jsonl")


def _iso(epoch_seconds: float) -> str:
    return datetime.fromtimestamp(epoch_seconds, tz=timezone.utc).isoformat()


def ingest(manifest_path, embedder=None, trim_db: float = -40.0,
           length_quantile: float = 0.9) -> list[Sample]:
    """Parse and validate a manifest into a timestamp-sorted sample set.

    NDJSON-sourced rows pull precomputed segment embeddings; WAV rows run
    through the audio front-end (spectrogram lengths fitted to the ingest
    batch's quantile target) and the configured embedder.
    """
    manifest_path = Path(manifest_path)
    rows = read_manifest(manifest_path)
    base = manifest_path.parent

    ndjson_cache: dict[Path, dict[str, np.ndarray]] = {}
    samples: list[Sample] = []
    wav_rows = []
    for row in rows:
        src = Path(row.source)
        if not src.is_absolute():
            src = base / src
        suffix = src.suffix.lower()
        if suffix in NDJSON_SUFFIXES:
            if src not in ndjson_cache:
                if not src.exists():
                    raise MissingFileError(f"embedding source {src} not found")
                ndjson_cache[src] = {s.sample_id: s.segments
                                     for s in read_embeddings_ndjson(src)}
            segs = ndjson_cache[src].get(row.sample_id)
            if segs is None:
                raise ParseError(f"sample {row.sample_id!r} not present in {src}")
            samples.append(Sample(row.sample_id, row.subject_id, row.timestamp,
                                  row.label, segs))
        elif suffix in AUDIO_SUFFIXES:
            if not src.exists():
                raise MissingFileError(f"audio source {src} not found")
            wav_rows.append((row, src))
        else:
            raise ParseError(f"sample {row.sample_id!r}: unknown source type {row.source!r}")

    if wav_rows:
        if embedder is None:
            raise ConfigError("manifest references WAV sources but no embedder is configured")
        specs = [preprocess_clip(load_wav(src), trim_db) for _, src in wav_rows]
        target = max(target_frames_quantile(specs, length_quantile), SEGMENT_FRAMES)
        for (row, _), spec in zip(wav_rows, specs):
            segs = embed(segment(fit_to_target_frames(spec, target)), embedder)
            samples.append(Sample(row.sample_id, row.subject_id, row.timestamp,
                                  row.label, segs))

    samples = sort_samples(samples)
    check_unique_ids(samples)
    dims = {s.dim for s in samples}
    if len(dims) > 1:
        raise ParseError(f"inconsistent embedding dimensionalities: {sorted(dims)}")
    return samples


def build_embedder(cfg: PipelineConfig) -> RandomProjectionEmbedder:
    return RandomProjectionEmbedder(dim=cfg.embedder.dim, seed=cfg.embedder.seed)


def ingest_from_config(cfg: PipelineConfig) -> list[Sample]:
    if cfg.manifest is None:
        raise ConfigError("config has no 'manifest' entry")
    return ingest(cfg.manifest, embedder=build_embedder(cfg),
                  trim_db=cfg.audio.trim_db, length_quantile=cfg.audio.length_quantile)


@dataclass
class BaselineArtifacts:
    dev: list[Sample]
    post: list[Sample]
    train_split: list[Sample]
    val_split: list[Sample]
    test_split: list[Sample]
    model: ClassifierModel
    history: object
    benchmark: float


def _labeled(samples: list[Sample], what: str) -> list[Sample]:
    out = [s for s in samples if s.label is not None]
    if not out:
        raise EmptySplitError(f"{what} split has no labeled samples")
    return out


def train_baseline(cfg: PipelineConfig, samples: list[Sample]) -> BaselineArtifacts:
    """Chronological dev/post split, inner 60:20:20 split, baseline training,
    and the dev-test benchmark balanced accuracy."""
    dev, post = chronological_split(samples, cfg.split.dev_ratio)
    tr, va, te = split_by_fractions(dev, list(cfg.split.inner))
    assert subjects_disjoint(tr, va, te, post), "subject leakage across splits"
    tr_l, va_l, te_l = _labeled(tr, "train"), _labeled(va, "validation"), _labeled(te, "test")

    dim = tr_l[0].dim
    model, history = train(
        ClassifierModel.initial(dim),
        np.stack([s.pooled for s in tr_l]),
        np.array([s.label for s in tr_l], dtype=np.float64),
        np.stack([s.pooled for s in va_l]),
        np.array([s.label for s in va_l], dtype=np.float64),
        cfg.trainer,
    )
    scores = predict_pooled(model, np.stack([s.pooled for s in te_l]))
    benchmark = compute_metrics(scores, [s.label for s in te_l]).balanced_accuracy
    return BaselineArtifacts(dev=dev, post=post, train_split=tr, val_split=va,
                             test_split=te, model=model, history=history,
                             benchmark=benchmark)


@dataclass
class WindowRow:
    window_index: int
    t_start: str
    t_end: str
    n: int
    mmd: float
    cusum_g: float
    alert: bool
    model_version: int
    metrics: dict | None

    def to_json(self) -> str:
        return json.dumps({
            "window_index": self.window_index,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "n": self.n,
            "mmd": self.mmd,
            "cusum_g": self.cusum_g,
            "alert": self.alert,
            "model_version": self.model_version,
            "metrics": self.metrics,
        }, separators=(",", ":"))


@dataclass
class AdaptationEvent:
    window_index: int
    mode: str
    n_used: int
    model_version: int

    def to_dict(self) -> dict:
        return {"window_index": self.window_index, "mode": self.mode,
                "n_used": self.n_used, "model_version": self.model_version}


@dataclass
class RunReport:
    benchmark: float | None
    rows: list[WindowRow] = field(default_factory=list)
    events: list[AdaptationEvent] = field(default_factory=list)

    @property
    def alert_windows(self) -> list[int]:
        return [r.window_index for r in self.rows if r.alert]

    def _mean_ba(self, indices) -> float | None:
        vals = [r.metrics["balanced_accuracy"] for r in self.rows
                if r.window_index in indices and r.metrics is not None]
        return float(np.mean(vals)) if vals else None

    def summary(self) -> dict:
        alerts = self.alert_windows
        all_idx = {r.window_index for r in self.rows}
        post_idx = {i for i in all_idx if alerts and i > alerts[0]}
        return {
            "benchmark": self.benchmark,
            "n_windows": len(self.rows),
            "n_alerts": len(alerts),
            "alert_windows": alerts,
            "adaptation_events": [e.to_dict() for e in self.events],
            "mean_balanced_accuracy": self._mean_ba(all_idx),
            "mean_post_alert_balanced_accuracy": self._mean_ba(post_idx),
        }

    def to_ndjson(self) -> str:
        lines = [row.to_json() for row in self.rows]
        lines.append(json.dumps({"summary": self.summary()}, separators=(",", ":")))
        return "\n".join(lines) + "\n"


def _window_metrics(model: ClassifierModel, window_samples: list[Sample]) -> dict | None:
    labeled = [s for s in window_samples if s.label is not None]
    if not labeled:
        return None
    scores = predict_pooled(model, np.stack([s.pooled for s in labeled]))
    return compute_metrics(scores, [s.label for s in labeled]).to_dict()


def _adaptation_seed(master: int, tag: int, window_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=(master, tag, window_index))


def run(cfg: PipelineConfig, samples: list[Sample] | None = None) -> RunReport:
    """Full pipeline: train, monitor, adapt on alerts, report per window."""
    if samples is None:
        samples = ingest_from_config(cfg)
    base = train_baseline(cfg, samples)
    model = base.model
    mode = cfg.adaptation.mode

    reference = reference_vectors(base.dev, cfg.stream.reference)
    engine = ReferenceMmd(reference, cfg.kernel)
    windows = make_windows(base.post, cfg.stream)
    pool = LabeledPool.from_samples(_labeled(base.train_split, "train"))
    oracle = None
    if mode in ("al", "random"):
        if cfg.adaptation.oracle.kind == "file":
            oracle = FileQueueOracle(cfg.adaptation.oracle.pending, cfg.adaptation.oracle.labels)
        else:
            oracle = DatasetOracle.from_samples(samples)

    report = RunReport(benchmark=base.benchmark)
    state = CusumState()
    for w in windows:
        version_used = model.version
        metrics = _window_metrics(model, w.samples)
        vecs = np.stack([s.pooled for s in w.samples])
        value = engine.value(vecs)
        step = cusum_step(state, cfg.cusum, value)
        state = step.state

        if step.alert and mode != "none":
            if mode == "uda":
                model = uda_retrain(model, pool, vecs, cfg.adaptation.uda, cfg.trainer,
                                    _adaptation_seed(cfg.seed, 101, w.index))
                n_used = len(w.samples)
            else:
                selected_ids = al_select(model, w.samples, cfg.adaptation.al.z_band)
                if mode == "random":
                    selected_ids = random_select(w.samples, len(selected_ids),
                                                 _adaptation_seed(cfg.seed, 202, w.index))
                by_id = {s.sample_id: s for s in w.samples}
                selected = [by_id[sid] for sid in selected_ids]
                model, pool = al_retrain(model, pool, selected, oracle, cfg.adaptation.al,
                                         cfg.trainer, _adaptation_seed(cfg.seed, 303, w.index))
                n_used = len(selected)
            if model.version != version_used:
                report.events.append(AdaptationEvent(window_index=w.index, mode=mode,
                                                     n_used=n_used,
                                                     model_version=model.version))

        report.rows.append(WindowRow(
            window_index=w.index, t_start=_iso(w.t_start), t_end=_iso(w.t_end),
            n=len(w.samples), mmd=value, cusum_g=step.g, alert=step.alert,
            model_version=version_used, metrics=metrics,
        ))
    return report


def scan(cfg: PipelineConfig, samples: list[Sample] | None = None) -> RunReport:
    """Detector-only pass: no training, no metrics, no adaptation."""
    if samples is None:
        samples = ingest_from_config(cfg)
    dev, post = chronological_split(samples, cfg.split.dev_ratio)
    engine = ReferenceMmd(reference_vectors(dev, cfg.stream.reference), cfg.kernel)
    windows = make_windows(post, cfg.stream)

    report = RunReport(benchmark=None)
    state = CusumState()
    for w in windows:
        vecs = np.stack([s.pooled for s in w.samples])
        value = engine.value(vecs)
        step = cusum_step(state, cfg.cusum, value)
        state = step.state
        report.rows.append(WindowRow(
            window_index=w.index, t_start=_iso(w.t_start), t_end=_iso(w.t_end),
            n=len(w.samples), mmd=value, cusum_g=step.g, alert=step.alert,
            model_version=0, metrics=None,
        ))
    return report


def evaluate_split(cfg: PipelineConfig, model: ClassifierModel,
                   samples: list[Sample]) -> dict:
    """Metric panel of a checkpointed model over the configured split."""
    which = cfg.evaluate.split
    if which == "all":
        subset = samples
    else:
        dev, post = chronological_split(samples, cfg.split.dev_ratio)
        if which == "post":
            subset = post
        elif which == "dev":
            subset = dev
        else:  # dev_test
            subset = split_by_fractions(dev, list(cfg.split.inner))[2]
    labeled = _labeled(subset, which)
    scores = predict_pooled(model, np.stack([s.pooled for s in labeled]))
    record = compute_metrics(scores, [s.label for s in labeled])
    return {"split": which, "n": len(labeled), **record.to_dict()}


def save_model(model: ClassifierModel, cfg: PipelineConfig, path) -> None:
    save_checkpoint(model, path, trainer_cfg=cfg.trainer)
