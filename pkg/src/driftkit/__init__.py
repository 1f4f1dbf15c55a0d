"""driftkit: streaming drift detection and model adaptation for
audio-embedding classifiers.

Pipeline: audio front-end (or precomputed embeddings) -> baseline classifier
-> MMD-vs-reference monitoring with a relative-change CUSUM -> adaptation on
alert (unsupervised domain adaptation, active learning, or a random-sampling
control).
"""

from .adaptation import (
    AlConfig,
    DatasetOracle,
    FileQueueOracle,
    LabeledPool,
    UdaConfig,
    al_retrain,
    al_select,
    random_select,
    uda_retrain,
)
from .audio import (
    AudioClip,
    Embedder,
    MelSpectrogram,
    RandomProjectionEmbedder,
    embed,
    fit_to_target_frames,
    load_wav,
    preprocess_clip,
    segment,
    target_frames_quantile,
)
from .config import PipelineConfig, load_config
from .data import Sample, chronological_split, split_by_fractions
from .drift import (
    CusumParams,
    CusumState,
    StreamConfig,
    WindowBatch,
    WindowRecord,
    cusum_step,
    make_windows,
    monitor,
)
from .errors import DriftKitError
from .kernels import KernelSpec, kernel_eval, median_heuristic, mmd
from .metrics import ConfusionMatrix, MetricsRecord, compute_metrics, label_drift_batches
from .model import (
    ClassifierModel,
    TrainerConfig,
    adam_update,
    focal_loss,
    load_checkpoint,
    loss_and_grad,
    predict,
    save_checkpoint,
    train,
)
from .pipeline import RunReport, ingest, run, scan, train_baseline
from .synth import BalanceShift, CovariateShift, LabelFlip, SynthConfig, generate
from .tuning import DetectionScore, GridPoint, default_grid, grid_search

__version__ = "0.1.0"
