"""Audio front-end: WAV -> log-mel spectrogram -> 64x96 segments -> embeddings.

Protocol: resample to 16 kHz, peak-normalize, trim leading/trailing silence
(frame-energy gate relative to peak), then a 25 ms Hann window with a 10 ms
hop, 64 HTK-mel triangular filters over 125-7500 Hz on the power spectrum,
log compression.  Spectrograms are cropped / cyclically padded to a common
length (0.9 length quantile by default) and cut into 64x96 windows with a
48-frame stride.  Segments map to fixed-length vectors through a pluggable
embedder; the bundled one is a seeded random projection with tanh squashing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol, runtime_checkable

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import (
    DimensionMismatchError,
    EmptyClipError,
    EmptyListError,
    MissingFileError,
    TooShortError,
    UnsupportedRateError,
)

SAMPLE_RATE = 16000
WIN_SAMPLES = 400  # 25 ms
HOP_SAMPLES = 160  # 10 ms
N_FFT = 512
N_MELS = 64
MEL_LO_HZ = 125.0
MEL_HI_HZ = 7500.0
LOG_OFFSET = 1e-6
SEGMENT_FRAMES = 96
SEGMENT_STRIDE = 48
SEGMENT_SIZE = N_MELS * SEGMENT_FRAMES  # 6144
DEFAULT_TRIM_DB = -40.0


@dataclass
class AudioClip:
    samples: np.ndarray  # mono, float64
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).ravel()
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("clip contains non-finite amplitudes")


@dataclass
class MelSpectrogram:
    frames: np.ndarray  # (64, T) log-mel energies
    frame_hop: float = HOP_SAMPLES / SAMPLE_RATE
    frame_len: float = WIN_SAMPLES / SAMPLE_RATE
    mel_lo: float = MEL_LO_HZ
    mel_hi: float = MEL_HI_HZ

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2 or self.frames.shape[0] != N_MELS:
            raise ValueError(f"expected ({N_MELS}, T) frames, got {self.frames.shape}")
        if self.frames.shape[1] < 1:
            raise ValueError("spectrogram must contain at least one frame")
        if not np.all(np.isfinite(self.frames)):
            raise ValueError("spectrogram contains non-finite entries")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[1]


def load_wav(path) -> AudioClip:
    """Read a PCM16/float WAV; stereo is downmixed by channel averaging."""
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError as exc:
        raise MissingFileError(str(exc)) from exc
    data = np.asarray(data)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        x = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(np.float64)
    else:
        raise UnsupportedRateError(f"unsupported WAV sample format {data.dtype}")
    return AudioClip(samples=x, sample_rate=int(rate))


def resample_to_working_rate(clip: AudioClip) -> AudioClip:
    if clip.sample_rate == SAMPLE_RATE:
        return clip
    if clip.sample_rate <= 0:
        raise UnsupportedRateError(f"cannot resample from rate {clip.sample_rate}")
    ratio = Fraction(SAMPLE_RATE, clip.sample_rate)
    y = resample_poly(clip.samples, ratio.numerator, ratio.denominator)
    return AudioClip(samples=y, sample_rate=SAMPLE_RATE)


def peak_normalize(x: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(x)) if x.size else 0.0
    return x if peak == 0.0 else x / peak


def trim_silence(x: np.ndarray, trim_db: float = DEFAULT_TRIM_DB) -> np.ndarray:
    """Drop leading/trailing 10 ms frames whose RMS is below the dB gate.

    The gate is relative to the clip peak, so callers normalize first.  A
    trailing partial frame is gated on its own.  Raises EmptyClip when every
    frame is below the gate (in particular for all-zero clips).
    """
    if x.size == 0:
        raise EmptyClipError("empty clip")
    gate = 10.0 ** (trim_db / 20.0) * np.max(np.abs(x))
    n_frames = max(1, math.ceil(x.size / HOP_SAMPLES))
    bounds = [(i * HOP_SAMPLES, min(x.size, (i + 1) * HOP_SAMPLES)) for i in range(n_frames)]
    rms = np.array([np.sqrt(np.mean(x[a:b] ** 2)) for a, b in bounds])
    keep = np.flatnonzero(rms >= gate)
    if keep.size == 0 or gate == 0.0:
        raise EmptyClipError("no frames above the silence gate")
    return x[bounds[keep[0]][0] : bounds[keep[-1]][1]]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int = N_MELS, n_fft: int = N_FFT, sample_rate: int = SAMPLE_RATE,
                   f_lo: float = MEL_LO_HZ, f_hi: float = MEL_HI_HZ) -> np.ndarray:
    """(n_mels, n_fft//2+1) triangular filters, each normalized to peak 1."""
    freqs = np.linspace(0.0, sample_rate / 2.0, n_fft // 2 + 1)
    mel_pts = np.linspace(hz_to_mel(f_lo), hz_to_mel(f_hi), n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)
    fb = np.zeros((n_mels, freqs.size))
    for m in range(n_mels):
        lo, ctr, hi = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        up = (freqs - lo) / (ctr - lo)
        down = (hi - freqs) / (hi - ctr)
        tri = np.maximum(0.0, np.minimum(up, down))
        fb[m] = tri / tri.max()
    return fb


_FILTERBANK = mel_filterbank()
_WINDOW = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(WIN_SAMPLES) / WIN_SAMPLES)  # periodic Hann


def frame_count(n_samples: int) -> int:
    """STFT frame count for a 400-sample window and 160-sample hop (no padding)."""
    return (n_samples - WIN_SAMPLES) // HOP_SAMPLES + 1


def log_mel_spectrogram(x: np.ndarray) -> MelSpectrogram:
    """64-bin log-mel power spectrogram of a 16 kHz signal."""
    if x.size < WIN_SAMPLES:
        # below one analysis window: cyclically repeat, mirroring the
        # repeated-section padding applied at the spectrogram level
        x = np.resize(x, WIN_SAMPLES)
    t = frame_count(x.size)
    idx = np.arange(WIN_SAMPLES)[None, :] + HOP_SAMPLES * np.arange(t)[:, None]
    frames = x[idx] * _WINDOW
    power = np.abs(np.fft.rfft(frames, n=N_FFT, axis=1)) ** 2  # (T, 257)
    mel = power @ _FILTERBANK.T  # (T, 64)
    return MelSpectrogram(frames=np.log(mel + LOG_OFFSET).T)


def preprocess_clip(clip: AudioClip, trim_db: float = DEFAULT_TRIM_DB) -> MelSpectrogram:
    """Peak-normalized, silence-trimmed, 64-bin log-mel spectrogram at 10 ms hop."""
    if clip.samples.size == 0:
        raise EmptyClipError("empty clip")
    work = resample_to_working_rate(clip)
    x = peak_normalize(work.samples)
    x = trim_silence(x, trim_db)
    return log_mel_spectrogram(x)


def target_frames_quantile(specs: list[MelSpectrogram], q: float) -> int:
    """Nearest-rank q-quantile of the spectrogram frame counts."""
    if not specs:
        raise EmptyListError("no spectrograms")
    if not (0.0 < q <= 1.0):
        raise ValueError("quantile must lie in (0, 1]")
    lengths = sorted(s.n_frames for s in specs)
    return lengths[math.ceil(q * len(lengths)) - 1]


def fit_to_target_frames(spec: MelSpectrogram, target: int) -> MelSpectrogram:
    """Crop to the first `target` frames or pad by cyclic repetition."""
    if target < 1:
        raise ValueError("target must be >= 1")
    t = spec.n_frames
    if t == target:
        return spec
    if t > target:
        return MelSpectrogram(frames=spec.frames[:, :target].copy())
    reps = spec.frames[:, np.arange(target) % t]
    return MelSpectrogram(frames=reps.copy())


def segment(spec: MelSpectrogram) -> list[np.ndarray]:
    """64x96 sliding windows with a 48-frame stride, in temporal order."""
    t = spec.n_frames
    if t < SEGMENT_FRAMES:
        raise TooShortError(f"{t} frames < segment width {SEGMENT_FRAMES}")
    starts = range(0, t - SEGMENT_FRAMES + 1, SEGMENT_STRIDE)
    return [spec.frames[:, s : s + SEGMENT_FRAMES].copy() for s in starts]


@runtime_checkable
class Embedder(Protocol):
    """Maps one 64x96 segment to a fixed-length vector, deterministically."""

    dim: int

    def __call__(self, segment: np.ndarray) -> np.ndarray: ...


@dataclass
class RandomProjectionEmbedder:
    """Seeded Gaussian projection of the flattened segment, tanh-squashed.

    A deterministic, dependency-free stand-in for a pretrained audio
    embedding network; real embeddings enter via precomputed-embedding
    ingestion instead.
    """

    dim: int = 128
    seed: int = 0
    _weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        self._weights = rng.standard_normal((self.dim, SEGMENT_SIZE)) / math.sqrt(SEGMENT_SIZE)

    def __call__(self, segment: np.ndarray) -> np.ndarray:
        seg = np.asarray(segment, dtype=np.float64)
        if seg.shape != (N_MELS, SEGMENT_FRAMES):
            raise DimensionMismatchError(
                f"expected ({N_MELS}, {SEGMENT_FRAMES}) segment, got {seg.shape}")
        return np.tanh(self._weights @ seg.ravel())


def embed(segments: list[np.ndarray], embedder: Embedder) -> np.ndarray:
    """(n_segments, dim) embedding sequence, order preserved."""
    if not segments:
        raise EmptyListError("no segments to embed")
    return np.stack([embedder(s) for s in segments])


def clip_to_embeddings(clip: AudioClip, embedder: Embedder, trim_db: float = DEFAULT_TRIM_DB,
                       target_frames: int | None = None) -> np.ndarray:
    """Full front-end for one clip; pads up to one segment when target is unset."""
    spec = preprocess_clip(clip, trim_db)
    target = max(target_frames if target_frames is not None else spec.n_frames,
                 SEGMENT_FRAMES)
    return embed(segment(fit_to_target_frames(spec, target)), embedder)
