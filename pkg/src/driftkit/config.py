"""Declarative JSON run configuration.

Unknown keys are rejected so config typos fail loudly.  Relative data paths
are resolved against the config file's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .adaptation import AlConfig, UdaConfig
from .data import parse_timestamp
from .drift import CusumParams, StreamConfig
from .errors import ConfigError
from .kernels import KernelSpec
from .model import TrainerConfig
from .synth import BalanceShift, CovariateShift, LabelFlip, SynthConfig

ADAPTATION_MODES = ("none", "uda", "al", "random")
EVAL_SPLITS = ("post", "dev", "dev_test", "all")


@dataclass
class EmbedderConfig:
    dim: int = 128
    seed: int = 0


@dataclass
class AudioConfig:
    trim_db: float = -40.0
    length_quantile: float = 0.9


@dataclass
class SplitConfig:
    dev_ratio: float = 0.7
    inner: tuple[float, float, float] = (0.6, 0.2, 0.2)


@dataclass
class OracleConfig:
    kind: str = "dataset"  # dataset | file
    pending: str | None = None
    labels: str | None = None


@dataclass
class AdaptationSection:
    mode: str = "none"
    uda: UdaConfig = field(default_factory=UdaConfig)
    al: AlConfig = field(default_factory=AlConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)


@dataclass
class TuningSection:
    window_len_days: tuple = (7.0, 10.0, 14.0)
    overlap: tuple = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)
    min_batch: tuple = (0, 10, 20, 30)
    cusum_drift: tuple = (0.2, 0.3, 0.4, 0.5)
    cusum_threshold: tuple = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    reference: tuple = ("all", "positive", "negative")
    kernel: tuple = ("linear", "poly2", "gaussian")
    alert_tolerance: int = 0


@dataclass
class EvaluateSection:
    checkpoint: str | None = None
    split: str = "post"


@dataclass
class PipelineConfig:
    seed: int = 0
    manifest: str | None = None
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    audio: AudioConfig = field(default_factory=AudioConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    stream: StreamConfig = field(default_factory=StreamConfig)
    cusum: CusumParams = field(default_factory=CusumParams)
    kernel: KernelSpec = field(default_factory=KernelSpec)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    adaptation: AdaptationSection = field(default_factory=AdaptationSection)
    tuning: TuningSection = field(default_factory=TuningSection)
    synth: SynthConfig | None = None
    evaluate: EvaluateSection = field(default_factory=EvaluateSection)


def _build(cls, data: dict, path: str, converters: dict | None = None):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    converters = converters or {}
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"{path}.{key}: unknown key")
        if key in converters:
            value = converters[key](value)
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _build_drift_kind(data):
    if data is None:
        return None
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigError("synth.drift_kind: expected an object with a 'kind'")
    kind = data["kind"]
    body = {k: v for k, v in data.items() if k != "kind"}
    try:
        if kind == "covariate_shift":
            return CovariateShift(delta=tuple(body.pop("delta")), **body)
        if kind == "label_flip":
            return LabelFlip(**body)
        if kind == "balance_shift":
            return BalanceShift(**body)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"synth.drift_kind: {exc}") from exc
    raise ConfigError(f"synth.drift_kind.kind: unknown kind {kind!r}")


def config_from_dict(doc: dict) -> PipelineConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    sections = {
        "embedder": lambda d: _build(EmbedderConfig, d, "embedder"),
        "audio": lambda d: _build(AudioConfig, d, "audio"),
        "split": lambda d: _build(SplitConfig, d, "split"),
        "stream": lambda d: _build(StreamConfig, d, "stream"),
        "cusum": lambda d: _build(CusumParams, d, "cusum"),
        "kernel": lambda d: _build(KernelSpec, d, "kernel"),
        "trainer": lambda d: _build(TrainerConfig, d, "trainer"),
        "adaptation": lambda d: _build(
            AdaptationSection, d, "adaptation",
            converters={
                "uda": lambda v: _build(UdaConfig, v, "adaptation.uda"),
                "al": lambda v: _build(AlConfig, v, "adaptation.al"),
                "oracle": lambda v: _build(OracleConfig, v, "adaptation.oracle"),
            }),
        "tuning": lambda d: _build(TuningSection, d, "tuning"),
        "synth": lambda d: _build(SynthConfig, d, "synth",
                                  converters={"drift_kind": _build_drift_kind,
                                              "start": lambda v: parse_timestamp(str(v))}),
        "evaluate": lambda d: _build(EvaluateSection, d, "evaluate"),
    }
    kwargs = {}
    for key, value in doc.items():
        if key == "seed":
            kwargs["seed"] = int(value)
        elif key == "manifest":
            kwargs["manifest"] = value
        elif key in sections:
            if value is not None:
                kwargs[key] = sections[key](value)
        else:
            raise ConfigError(f"{key}: unknown key")
    cfg = PipelineConfig(**kwargs)
    if cfg.adaptation.mode not in ADAPTATION_MODES:
        raise ConfigError(f"adaptation.mode must be one of {ADAPTATION_MODES}")
    if cfg.adaptation.oracle.kind not in ("dataset", "file"):
        raise ConfigError("adaptation.oracle.kind must be 'dataset' or 'file'")
    if cfg.evaluate.split not in EVAL_SPLITS:
        raise ConfigError(f"evaluate.split must be one of {EVAL_SPLITS}")
    return cfg


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    cfg = config_from_dict(doc)
    if cfg.manifest is not None and not Path(cfg.manifest).is_absolute():
        cfg.manifest = str((path.parent / cfg.manifest).resolve())
    return cfg
