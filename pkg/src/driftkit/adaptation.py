"""Model adaptation on drift alerts: unsupervised domain adaptation (joint
focal + Gaussian-MMD objective through the adapter), active-learning label
acquisition, and the random-sampling control arm.

All operations treat models as values: the input model is never modified and
retraining returns a new model with an incremented version counter.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import EmptyBatchError, OracleError, SelectionSizeError
from .kernels import GAUSSIAN, KernelSpec, kernel_matrix, median_heuristic, mmd
from .model import (
    AdamState,
    ClassifierModel,
    TrainerConfig,
    adam_update,
    adapter_outputs,
    loss_and_grad,
    predict,
)


@dataclass
class UdaConfig:
    mmd_weight: float = 1.0  # weight of the MMD term in the joint loss
    epochs: int = 20
    dev_batch_size: int | None = None  # None -> size of the post batch
    sigma: float | None = None  # None -> median heuristic per epoch

    def __post_init__(self):
        if self.mmd_weight < 0:
            raise ValueError("mmd_weight must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class AlConfig:
    z_band: float = 1.0  # standard-deviation half-width of the query band
    epochs: int = 20

    def __post_init__(self):
        if self.z_band <= 0:
            raise ValueError("z_band must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@runtime_checkable
class LabelOracle(Protocol):
    def query(self, sample_id: str) -> int: ...


class DatasetOracle:
    """Reads withheld ground-truth labels from an id -> label mapping."""

    def __init__(self, labels: dict[str, int]):
        self._labels = dict(labels)

    @classmethod
    def from_samples(cls, samples) -> "DatasetOracle":
        return cls({s.sample_id: s.label for s in samples if s.label is not None})

    def query(self, sample_id: str) -> int:
        try:
            return self._labels[sample_id]
        except KeyError:
            raise OracleError(f"no ground-truth label for {sample_id!r}") from None


class FileQueueOracle:
    """File-backed labeling queue.

    ``request`` writes the ids awaiting labels to the pending CSV; labels are
    read back from a ``sample_id,label`` CSV before retraining.
    """

    def __init__(self, pending_path, labels_path):
        self.pending_path = Path(pending_path)
        self.labels_path = Path(labels_path)

    def request(self, sample_ids: Sequence[str]) -> None:
        with open(self.pending_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample_id"])
            for sid in sample_ids:
                writer.writerow([sid])

    def _read_labels(self) -> dict[str, int]:
        if not self.labels_path.exists():
            raise OracleError(f"labels file {self.labels_path} not found")
        labels: dict[str, int] = {}
        with open(self.labels_path, newline="") as fh:
            for row in csv.DictReader(fh):
                labels[row["sample_id"]] = int(row["label"])
        return labels

    def query(self, sample_id: str) -> int:
        labels = self._read_labels()
        if sample_id not in labels:
            raise OracleError(f"no label supplied for {sample_id!r}")
        return labels[sample_id]


@dataclass(frozen=True)
class LabeledPool:
    """Labeled development pool used for retraining; grows under AL."""

    ids: tuple[str, ...]
    pooled: np.ndarray  # (n, dim)
    labels: np.ndarray  # (n,)

    @classmethod
    def from_samples(cls, samples) -> "LabeledPool":
        labeled = [s for s in samples if s.label is not None]
        if not labeled:
            raise EmptyBatchError("no labeled samples for the pool")
        return cls(
            ids=tuple(s.sample_id for s in labeled),
            pooled=np.stack([s.pooled for s in labeled]),
            labels=np.array([s.label for s in labeled], dtype=np.float64),
        )

    def __len__(self) -> int:
        return len(self.ids)

    def extend(self, ids: Sequence[str], pooled: np.ndarray, labels: Sequence[int]) -> "LabeledPool":
        return LabeledPool(
            ids=self.ids + tuple(ids),
            pooled=np.vstack([self.pooled, np.atleast_2d(pooled)]),
            labels=np.concatenate([self.labels, np.asarray(labels, dtype=np.float64)]),
        )


def gaussian_mmd_grad_z(z_dev: np.ndarray, z_post: np.ndarray, sigma: float
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the biased Gaussian squared-MMD w.r.t. both point sets.

    sigma is treated as a constant (no gradient through the bandwidth rule).
    """
    spec = KernelSpec(GAUSSIAN, sigma=sigma)
    n_d, n_p = z_dev.shape[0], z_post.shape[0]
    k_dd = kernel_matrix(spec, z_dev, z_dev)
    k_pp = kernel_matrix(spec, z_post, z_post)
    k_dp = kernel_matrix(spec, z_dev, z_post)
    inv = 1.0 / sigma**2
    g_dev = (2.0 * inv / n_d**2) * (k_dd @ z_dev - k_dd.sum(axis=1)[:, None] * z_dev) \
        - (2.0 * inv / (n_d * n_p)) * (k_dp @ z_post - k_dp.sum(axis=1)[:, None] * z_dev)
    g_post = (2.0 * inv / n_p**2) * (k_pp @ z_post - k_pp.sum(axis=1)[:, None] * z_post) \
        - (2.0 * inv / (n_d * n_p)) * (k_dp.T @ z_dev - k_dp.sum(axis=0)[:, None] * z_post)
    return g_dev, g_post


def uda_loss_and_grad(model: ClassifierModel, dev_pooled: np.ndarray, dev_labels: np.ndarray,
                      post_pooled: np.ndarray, mmd_weight: float, sigma: float,
                      gamma: float, alpha: float) -> tuple[float, dict[str, np.ndarray]]:
    """Joint loss = mean focal(dev batch) + weight * mmd(adapter outputs).

    The MMD term couples both batches through the shared adapter; its
    gradient flows into the adapter weights/bias only.
    """
    loss, grads = loss_and_grad(model, dev_pooled, dev_labels, gamma, alpha)
    if mmd_weight == 0:
        return loss, grads
    dev_pooled = np.atleast_2d(np.asarray(dev_pooled, dtype=np.float64))
    post_pooled = np.atleast_2d(np.asarray(post_pooled, dtype=np.float64))
    z_dev = adapter_outputs(model, dev_pooled)
    z_post = adapter_outputs(model, post_pooled)
    value = mmd(z_dev, z_post, KernelSpec(GAUSSIAN, sigma=sigma))
    g_dev, g_post = gaussian_mmd_grad_z(z_dev, z_post, sigma)
    grads = dict(grads)
    grads["adapter_w"] = grads["adapter_w"] + mmd_weight * (g_dev.T @ dev_pooled + g_post.T @ post_pooled)
    grads["adapter_b"] = grads["adapter_b"] + mmd_weight * (g_dev.sum(axis=0) + g_post.sum(axis=0))
    return loss + mmd_weight * value, grads


def uda_retrain(model: ClassifierModel, pool: LabeledPool, post_pooled: np.ndarray,
                cfg: UdaConfig, trainer: TrainerConfig, seed) -> ClassifierModel:
    """Adapt by jointly minimizing dev focal loss and dev/post MMD.

    One Adam step per adaptation epoch on a seeded dev batch (default size =
    post batch).  With mmd_weight=0 the trajectory equals plain supervised
    fine-tuning on the same batches.
    """
    post_pooled = np.atleast_2d(np.asarray(post_pooled, dtype=np.float64))
    if len(pool) == 0:
        raise EmptyBatchError("labeled pool is empty")
    if post_pooled.shape[0] == 0:
        raise EmptyBatchError("post batch is empty")
    rng = np.random.default_rng(seed)
    batch = cfg.dev_batch_size if cfg.dev_batch_size is not None else post_pooled.shape[0]
    batch = min(batch, len(pool))

    params = model.params()
    state = AdamState.zeros_like(params)
    work = model.with_params(params)
    for _ in range(cfg.epochs):
        idx = rng.choice(len(pool), size=batch, replace=False)
        dev_m, dev_y = pool.pooled[idx], pool.labels[idx]
        if cfg.mmd_weight == 0:
            _, grads = loss_and_grad(work, dev_m, dev_y, trainer.focal_gamma, trainer.focal_alpha)
        else:
            sigma = cfg.sigma
            if sigma is None:
                sigma = median_heuristic(adapter_outputs(work, dev_m),
                                         adapter_outputs(work, post_pooled))
            _, grads = uda_loss_and_grad(work, dev_m, dev_y, post_pooled, cfg.mmd_weight,
                                         sigma, trainer.focal_gamma, trainer.focal_alpha)
        state, params = adam_update(state, params, grads, trainer)
        work = work.with_params(params)
    return model.with_params(params, bump_version=True)


def al_select_scores(scores, z_band: float = 1.0) -> np.ndarray:
    """Boolean mask of scores within z_band population standard deviations
    of the batch mean; everything is selected when the spread is degenerate."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    mu = scores.mean()
    sd = float(np.sqrt(np.mean((scores - mu) ** 2)))
    if sd < 1e-12:
        return np.ones(scores.size, dtype=bool)
    return np.abs(scores - mu) <= z_band * sd


def al_select(model: ClassifierModel, samples: Sequence, z_band: float = 1.0) -> list[str]:
    """Ids of the uncertainty-band samples (within z_band sigma of the mean
    prediction), in stream order."""
    if len(samples) == 0:
        raise EmptyBatchError("empty batch")
    scores = np.array([predict(model, s.segments) for s in samples])
    mask = al_select_scores(scores, z_band)
    return [s.sample_id for s, m in zip(samples, mask) if m]


def random_select(samples: Sequence, n: int, seed) -> list[str]:
    """Uniform without-replacement control selection, in stream order."""
    if n > len(samples):
        raise SelectionSizeError(f"cannot select {n} from {len(samples)} samples")
    if n < 0:
        raise SelectionSizeError("selection size must be >= 0")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(samples), size=n, replace=False))
    return [samples[i].sample_id for i in idx]


def fine_tune(model: ClassifierModel, pooled: np.ndarray, labels: np.ndarray, epochs: int,
              trainer: TrainerConfig, seed) -> ClassifierModel:
    """Seeded mini-batch Adam over the pool for a fixed number of epochs."""
    pooled = np.atleast_2d(np.asarray(pooled, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if pooled.shape[0] == 0:
        raise EmptyBatchError("empty fine-tune pool")
    rng = np.random.default_rng(seed)
    params = model.params()
    state = AdamState.zeros_like(params)
    work = model.with_params(params)
    for _ in range(epochs):
        order = rng.permutation(pooled.shape[0])
        for lo in range(0, order.size, trainer.batch_size):
            idx = order[lo : lo + trainer.batch_size]
            _, grads = loss_and_grad(work, pooled[idx], labels[idx],
                                     trainer.focal_gamma, trainer.focal_alpha)
            state, params = adam_update(state, params, grads, trainer)
            work = work.with_params(params)
    return model.with_params(params, bump_version=True)


def al_retrain(model: ClassifierModel, pool: LabeledPool, selected: Sequence,
               oracle: LabelOracle, cfg: AlConfig, trainer: TrainerConfig, seed
               ) -> tuple[ClassifierModel, LabeledPool]:
    """Label the selected samples, append them to the pool, fine-tune.

    An empty selection is a guarded no-op returning the inputs unchanged.
    """
    selected = list(selected)
    if not selected:
        return model, pool
    labels = [oracle.query(s.sample_id) for s in selected]
    new_pool = pool.extend(
        ids=[s.sample_id for s in selected],
        pooled=np.stack([s.pooled for s in selected]),
        labels=labels,
    )
    adapted = fine_tune(model, new_pool.pooled, new_pool.labels, cfg.epochs, trainer, seed)
    return adapted, new_pool
