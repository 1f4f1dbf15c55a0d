"""Binary classifier over embedding sequences.

Architecture: per-sample temporal mean pooling of the segment embeddings,
an affine adapter (dim -> dim, identity-initialized) and a single-logit
sigmoid head.  Because the adapter is affine it commutes with the mean, so
all training code works on per-sample pooled vectors.

Training: binary focal cross-entropy, analytic gradients, bias-corrected
Adam, seeded mini-batch shuffling, early stopping on validation loss with
best-weights restore.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyBatchError,
    EmptySplitError,
    ShapeMismatchError,
)

P_CLAMP = 1e-7
ADAM_EPS = 1e-8

PARAM_KEYS = ("adapter_w", "adapter_b", "head_w", "head_b")


@dataclass
class TrainerConfig:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 10
    focal_gamma: float = 2.0
    focal_alpha: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class ClassifierModel:
    adapter_w: np.ndarray  # (dim, dim)
    adapter_b: np.ndarray  # (dim,)
    head_w: np.ndarray  # (dim,)
    head_b: np.ndarray  # scalar, shape ()
    dim: int
    version: int = 0

    @classmethod
    def initial(cls, dim: int) -> "ClassifierModel":
        """Identity adapter, zero head: predicts 0.5 everywhere."""
        return cls(
            adapter_w=np.eye(dim),
            adapter_b=np.zeros(dim),
            head_w=np.zeros(dim),
            head_b=np.zeros(()),
            dim=dim,
            version=0,
        )

    def params(self) -> dict[str, np.ndarray]:
        return {k: np.array(getattr(self, k)) for k in PARAM_KEYS}

    def with_params(self, params: dict[str, np.ndarray], bump_version: bool = False) -> "ClassifierModel":
        return ClassifierModel(
            adapter_w=np.array(params["adapter_w"]),
            adapter_b=np.array(params["adapter_b"]),
            head_w=np.array(params["head_w"]),
            head_b=np.array(params["head_b"]),
            dim=self.dim,
            version=self.version + 1 if bump_version else self.version,
        )


def pooled_mean(segments) -> np.ndarray:
    """Temporal mean over a (n_segments, dim) sequence.

    Uses exact (fsum) accumulation per coordinate so the result is bitwise
    invariant under any permutation of the segments.
    """
    seq = np.asarray(segments, dtype=np.float64)
    if seq.ndim == 1:
        seq = seq[None, :]
    if seq.shape[0] == 0:
        raise EmptyBatchError("embedding sequence is empty")
    n = seq.shape[0]
    return np.array([math.fsum(seq[:, j]) / n for j in range(seq.shape[1])])


def sigmoid(u):
    u = np.asarray(u, dtype=np.float64)
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    e = np.exp(u[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def adapter_outputs(model: ClassifierModel, pooled: np.ndarray) -> np.ndarray:
    """Adapter map applied to pooled vectors; rows are samples."""
    pooled = np.atleast_2d(np.asarray(pooled, dtype=np.float64))
    if pooled.shape[1] != model.dim:
        raise DimensionMismatchError(f"pooled dim {pooled.shape[1]} != model dim {model.dim}")
    return pooled @ model.adapter_w.T + model.adapter_b


def predict_pooled(model: ClassifierModel, pooled: np.ndarray) -> np.ndarray:
    """P(positive) for pooled per-sample vectors."""
    z = adapter_outputs(model, pooled)
    return sigmoid(z @ model.head_w + model.head_b)


def predict(model: ClassifierModel, segments) -> float:
    """P(positive) for one embedding sequence (n_segments, dim)."""
    return float(predict_pooled(model, pooled_mean(segments)[None, :])[0])


def pooled_adapter_output(model: ClassifierModel, segments) -> np.ndarray:
    """The pooled adapter output the head consumes; also the UDA/MMD view."""
    return adapter_outputs(model, pooled_mean(segments)[None, :])[0]


def focal_loss(p, y, gamma: float, alpha: float):
    """Binary focal cross-entropy, elementwise.

    p is clamped to [1e-7, 1 - 1e-7] before the log so the loss is finite.
    gamma=0, alpha=0.5 reduces to half the standard cross-entropy.
    """
    p = np.clip(np.asarray(p, dtype=np.float64), P_CLAMP, 1.0 - P_CLAMP)
    y = np.asarray(y, dtype=np.float64)
    p_t = y * p + (1.0 - y) * (1.0 - p)
    a_t = y * alpha + (1.0 - y) * (1.0 - alpha)
    mod = np.ones_like(p_t) if gamma == 0 else (1.0 - p_t) ** gamma
    return -a_t * mod * np.log(p_t)


def _focal_dloss_dpt(p_t, a_t, gamma: float):
    # d/dp_t of -a_t (1-p_t)^g log(p_t); the gamma=0 branch avoids 0 * inf.
    if gamma == 0:
        return -a_t / p_t
    one_m = 1.0 - p_t
    return a_t * (gamma * one_m ** (gamma - 1.0) * np.log(p_t) - one_m**gamma / p_t)


def loss_and_grad(model: ClassifierModel, pooled: np.ndarray, labels: np.ndarray,
                  gamma: float, alpha: float) -> tuple[float, dict[str, np.ndarray]]:
    """Mean focal loss over a labeled batch and its analytic gradients.

    pooled: (n, dim) per-sample mean embeddings; labels: (n,) in {0, 1}.
    """
    pooled = np.atleast_2d(np.asarray(pooled, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.float64).ravel()
    n = pooled.shape[0]
    if n == 0 or labels.size == 0:
        raise EmptyBatchError("empty training batch")
    if labels.size != n:
        raise ShapeMismatchError(f"{n} samples but {labels.size} labels")

    z = adapter_outputs(model, pooled)  # (n, dim)
    u = z @ model.head_w + model.head_b  # (n,)
    p = np.clip(sigmoid(u), P_CLAMP, 1.0 - P_CLAMP)
    p_t = labels * p + (1.0 - labels) * (1.0 - p)
    a_t = labels * alpha + (1.0 - labels) * (1.0 - alpha)

    mod = np.ones_like(p_t) if gamma == 0 else (1.0 - p_t) ** gamma
    loss = float(np.mean(-a_t * mod * np.log(p_t)))

    # dL/du per sample, chained through p_t = y p + (1-y)(1-p) and p = sigmoid(u)
    g_u = _focal_dloss_dpt(p_t, a_t, gamma) * (2.0 * labels - 1.0) * p * (1.0 - p)

    grads = {
        "head_b": np.array(np.mean(g_u)),
        "head_w": (g_u @ z) / n,
        "adapter_w": np.outer(model.head_w, (g_u @ pooled) / n),
        "adapter_b": model.head_w * np.mean(g_u),
    }
    return loss, grads


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(v) for k, v in params.items()},
            v={k: np.zeros_like(v) for k, v in params.items()},
            step=0,
        )


def adam_update(state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
                cfg: TrainerConfig) -> tuple[AdamState, dict[str, np.ndarray]]:
    """One bias-corrected Adam step; returns fresh state and parameters."""
    for k in params:
        if params[k].shape != grads[k].shape:
            raise ShapeMismatchError(f"param {k}: {params[k].shape} vs grad {grads[k].shape}")
    t = state.step + 1
    new_m, new_v, new_p = {}, {}, {}
    bc1 = 1.0 - cfg.beta1**t
    bc2 = 1.0 - cfg.beta2**t
    for k, g in grads.items():
        m = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g**2
        new_m[k], new_v[k] = m, v
        new_p[k] = params[k] - cfg.lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)
    return AdamState(m=new_m, v=new_v, step=t), new_p


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = -1
    epochs_run: int = 0


def batch_loss(model: ClassifierModel, pooled: np.ndarray, labels: np.ndarray,
               gamma: float, alpha: float) -> float:
    p = predict_pooled(model, pooled)
    return float(np.mean(focal_loss(p, labels, gamma, alpha)))


def train(model: ClassifierModel, train_pooled, train_labels, val_pooled, val_labels,
          cfg: TrainerConfig) -> tuple[ClassifierModel, TrainHistory]:
    """Seeded mini-batch Adam with early stopping on validation loss.

    Returns the model restored to its best-validation parameters.
    """
    train_pooled = np.atleast_2d(np.asarray(train_pooled, dtype=np.float64))
    val_pooled = np.atleast_2d(np.asarray(val_pooled, dtype=np.float64))
    train_labels = np.asarray(train_labels, dtype=np.float64).ravel()
    val_labels = np.asarray(val_labels, dtype=np.float64).ravel()
    if train_pooled.shape[0] == 0 or train_labels.size == 0:
        raise EmptySplitError("training split is empty")
    if val_pooled.shape[0] == 0 or val_labels.size == 0:
        raise EmptySplitError("validation split is empty")

    rng = np.random.default_rng(cfg.seed)
    params = model.params()
    state = AdamState.zeros_like(params)
    work = model.with_params(params)

    history = TrainHistory()
    best_val = math.inf
    best_params = {k: v.copy() for k, v in params.items()}
    since_improve = 0

    for epoch in range(cfg.max_epochs):
        order = rng.permutation(train_pooled.shape[0])
        for lo in range(0, order.size, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            _, grads = loss_and_grad(work, train_pooled[idx], train_labels[idx],
                                     cfg.focal_gamma, cfg.focal_alpha)
            state, params = adam_update(state, params, grads, cfg)
            work = work.with_params(params)

        history.train_loss.append(batch_loss(work, train_pooled, train_labels,
                                             cfg.focal_gamma, cfg.focal_alpha))
        val = batch_loss(work, val_pooled, val_labels, cfg.focal_gamma, cfg.focal_alpha)
        history.val_loss.append(val)
        history.epochs_run = epoch + 1

        if val < best_val:
            best_val = val
            best_params = {k: v.copy() for k, v in params.items()}
            history.best_epoch = epoch
            since_improve = 0
        else:
            since_improve += 1
            if since_improve > cfg.patience:
                break

    return model.with_params(best_params), history


CHECKPOINT_FORMAT_VERSION = 1


def save_checkpoint(model: ClassifierModel, path, trainer_cfg: TrainerConfig | None = None) -> None:
    """Write the model to a versioned JSON key-value checkpoint."""
    doc = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "dim": model.dim,
        "model_version": model.version,
        "adapter_w": model.adapter_w.tolist(),
        "adapter_b": model.adapter_b.tolist(),
        "head_w": model.head_w.tolist(),
        "head_b": float(model.head_b),
        "trainer_config": asdict(trainer_cfg) if trainer_cfg is not None else None,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_checkpoint(path) -> tuple[ClassifierModel, dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format {doc.get('format_version')!r}")
    model = ClassifierModel(
        adapter_w=np.asarray(doc["adapter_w"], dtype=np.float64),
        adapter_b=np.asarray(doc["adapter_b"], dtype=np.float64),
        head_w=np.asarray(doc["head_w"], dtype=np.float64),
        head_b=np.asarray(doc["head_b"], dtype=np.float64),
        dim=int(doc["dim"]),
        version=int(doc["model_version"]),
    )
    return model, doc
