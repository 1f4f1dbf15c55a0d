import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from driftkit.audio import (
    HOP_SAMPLES,
    MEL_HI_HZ,
    MEL_LO_HZ,
    N_MELS,
    SAMPLE_RATE,
    SEGMENT_FRAMES,
    SEGMENT_STRIDE,
    WIN_SAMPLES,
    AudioClip,
    MelSpectrogram,
    RandomProjectionEmbedder,
    embed,
    fit_to_target_frames,
    load_wav,
    mel_filterbank,
    preprocess_clip,
    segment,
    target_frames_quantile,
)
from driftkit.errors import (
    DimensionMismatchError,
    EmptyClipError,
    EmptyListError,
    TooShortError,
    UnsupportedRateError,
)
from tests.conftest import write_tone_wav


def brute_force_frame_count(n_samples):
    # enumerate admissible window starts directly
    return sum(1 for s in range(0, n_samples, HOP_SAMPLES) if s + WIN_SAMPLES <= n_samples)


def tone_clip(duration_s=0.985, rate=SAMPLE_RATE, amplitude=0.8, freq=440.0):
    n = int(round(duration_s * rate))
    t = np.arange(n) / rate
    return AudioClip(samples=amplitude * np.sin(2 * np.pi * freq * t), sample_rate=rate)


def rand_spec(rng, t):
    return MelSpectrogram(frames=rng.standard_normal((N_MELS, t)))


class TestPreprocess:
    def test_silence_rejected(self):
        clip = AudioClip(samples=np.zeros(SAMPLE_RATE), sample_rate=SAMPLE_RATE)
        with pytest.raises(EmptyClipError):
            preprocess_clip(clip)

    def test_empty_clip_rejected(self):
        with pytest.raises(EmptyClipError):
            preprocess_clip(AudioClip(samples=np.zeros(0), sample_rate=SAMPLE_RATE))

    def test_frame_count_on_pure_tone(self):
        clip = tone_clip(0.985)  # 15760 samples, nothing trimmed
        spec = preprocess_clip(clip)
        n = clip.samples.size
        assert spec.frames.shape == (N_MELS, brute_force_frame_count(n))
        assert spec.n_frames == 97

    def test_scaling_invariance_bitwise(self):
        clip = tone_clip(0.5, amplitude=0.8)
        half = AudioClip(samples=0.5 * clip.samples, sample_rate=SAMPLE_RATE)
        a = preprocess_clip(clip).frames
        b = preprocess_clip(half).frames
        assert np.array_equal(a, b)

    def test_normalization_idempotence(self):
        clip = tone_clip(0.5, amplitude=0.3)
        normalized = AudioClip(samples=clip.samples / np.max(np.abs(clip.samples)),
                               sample_rate=SAMPLE_RATE)
        assert np.array_equal(preprocess_clip(clip).frames,
                              preprocess_clip(normalized).frames)

    def test_silence_is_trimmed(self):
        n_sil = SAMPLE_RATE // 2
        tone = tone_clip(0.6).samples
        padded = np.concatenate([np.zeros(n_sil), tone, np.zeros(n_sil)])
        spec_padded = preprocess_clip(AudioClip(padded, SAMPLE_RATE))
        spec_tone = preprocess_clip(AudioClip(tone, SAMPLE_RATE))
        assert abs(spec_padded.n_frames - spec_tone.n_frames) <= 1

    def test_resampling_path(self):
        clip = tone_clip(0.5, rate=44100)
        spec = preprocess_clip(clip)
        expected = brute_force_frame_count(int(round(0.5 * SAMPLE_RATE)))
        assert abs(spec.n_frames - expected) <= 1  # polyphase edge effects only

    def test_bad_rate(self):
        with pytest.raises(UnsupportedRateError):
            preprocess_clip(AudioClip(samples=np.ones(100), sample_rate=0))

    def test_very_short_clip_still_yields_frames(self):
        clip = tone_clip(0.01)  # 160 samples < one window
        spec = preprocess_clip(clip)
        assert spec.n_frames >= 1


class TestMelFilterbank:
    def test_rows_nonnegative_peak_one(self):
        fb = mel_filterbank()
        assert fb.shape == (N_MELS, 257)
        assert np.all(fb >= 0.0)
        assert np.array_equal(fb.max(axis=1), np.ones(N_MELS))

    def test_support_within_band(self):
        fb = mel_filterbank()
        freqs = np.linspace(0, SAMPLE_RATE / 2, fb.shape[1])
        active = fb.sum(axis=0) > 0
        assert freqs[active].min() > MEL_LO_HZ
        assert freqs[active].max() < MEL_HI_HZ


class TestTargetFrames:
    def test_single_element(self, rng):
        assert target_frames_quantile([rand_spec(rng, 100)], 0.9) == 100

    def test_nearest_rank(self, rng):
        specs = [rand_spec(rng, t) for t in range(10, 101, 10)]
        assert target_frames_quantile(specs, 0.9) == 90

    def test_constant_lengths(self, rng):
        specs = [rand_spec(rng, 96) for _ in range(7)]
        for q in (0.1, 0.5, 0.9, 1.0):
            assert target_frames_quantile(specs, q) == 96

    def test_empty_list(self):
        with pytest.raises(EmptyListError):
            target_frames_quantile([], 0.9)


class TestFitToTarget:
    def test_identity(self, rng):
        spec = rand_spec(rng, 96)
        assert np.array_equal(fit_to_target_frames(spec, 96).frames, spec.frames)

    def test_cyclic_pad(self, rng):
        spec = rand_spec(rng, 50)
        out = fit_to_target_frames(spec, 120)
        assert out.n_frames == 120
        for i in range(120):
            assert np.array_equal(out.frames[:, i], spec.frames[:, i % 50])

    def test_crop(self, rng):
        spec = rand_spec(rng, 200)
        out = fit_to_target_frames(spec, 96)
        assert np.array_equal(out.frames, spec.frames[:, :96])

    @settings(max_examples=30, deadline=None)
    @given(t=st.integers(1, 250), target=st.integers(1, 250))
    def test_always_exact_target(self, t, target):
        rng = np.random.default_rng(t * 1000 + target)
        out = fit_to_target_frames(rand_spec(rng, t), target)
        assert out.n_frames == target


class TestSegment:
    def test_exactly_one(self, rng):
        segs = segment(rand_spec(rng, 96))
        assert len(segs) == 1
        assert segs[0].shape == (N_MELS, SEGMENT_FRAMES)

    def test_three_windows(self, rng):
        spec = rand_spec(rng, 192)
        segs = segment(spec)
        assert len(segs) == 3
        for n, start in enumerate((0, 48, 96)):
            assert np.array_equal(segs[n], spec.frames[:, start : start + 96])

    def test_too_short(self, rng):
        with pytest.raises(TooShortError):
            segment(rand_spec(rng, 95))

    @settings(max_examples=60, deadline=None)
    @given(t=st.integers(96, 500))
    def test_count_formula_vs_enumeration(self, t):
        rng = np.random.default_rng(t)
        segs = segment(rand_spec(rng, t))
        brute = [s for s in range(0, t - SEGMENT_FRAMES + 1, SEGMENT_STRIDE)]
        assert len(segs) == len(brute) == (t - SEGMENT_FRAMES) // SEGMENT_STRIDE + 1


class TestEmbedder:
    def test_shapes_and_order(self, rng):
        segs = [rng.standard_normal((N_MELS, SEGMENT_FRAMES)) for _ in range(3)]
        emb = RandomProjectionEmbedder(dim=128, seed=0)
        out = embed(segs, emb)
        assert out.shape == (3, 128)
        assert np.array_equal(out[1], emb(segs[1]))

    def test_identical_segments_identical_vectors(self, rng):
        seg = rng.standard_normal((N_MELS, SEGMENT_FRAMES))
        emb = RandomProjectionEmbedder(dim=16, seed=3)
        out = embed([seg, seg.copy()], emb)
        assert np.array_equal(out[0], out[1])

    def test_equal_seed_bitwise_equal(self, rng):
        seg = rng.standard_normal((N_MELS, SEGMENT_FRAMES))
        a = RandomProjectionEmbedder(dim=32, seed=7)(seg)
        b = RandomProjectionEmbedder(dim=32, seed=7)(seg)
        assert np.array_equal(a, b)

    def test_different_seed_differs(self, rng):
        seg = rng.standard_normal((N_MELS, SEGMENT_FRAMES))
        a = RandomProjectionEmbedder(dim=32, seed=7)(seg)
        b = RandomProjectionEmbedder(dim=32, seed=8)(seg)
        assert not np.array_equal(a, b)

    def test_output_bounded_and_finite(self, rng):
        seg = 100.0 * rng.standard_normal((N_MELS, SEGMENT_FRAMES))
        out = RandomProjectionEmbedder(dim=64, seed=0)(seg)
        assert np.all(np.isfinite(out)) and np.all(np.abs(out) <= 1.0)

    def test_wrong_shape(self):
        with pytest.raises(DimensionMismatchError):
            RandomProjectionEmbedder(dim=8, seed=0)(np.zeros((10, 10)))

    def test_empty_segment_list(self):
        with pytest.raises(EmptyListError):
            embed([], RandomProjectionEmbedder(dim=8, seed=0))


class TestWavIO:
    def test_int16_mono(self, tone_wav):
        clip = load_wav(tone_wav)
        assert clip.sample_rate == SAMPLE_RATE
        assert clip.samples.ndim == 1
        assert np.max(np.abs(clip.samples)) <= 1.0

    def test_stereo_downmix(self, tmp_path):
        path = write_tone_wav(tmp_path / "st.wav", stereo=True)
        clip = load_wav(path)
        assert clip.samples.ndim == 1

    def test_float32(self, tmp_path):
        path = write_tone_wav(tmp_path / "f32.wav", dtype=np.float32, rate=22050)
        clip = load_wav(path)
        assert clip.sample_rate == 22050
        spec = preprocess_clip(clip)
        assert spec.frames.shape[0] == N_MELS

    def test_full_frontend_segments_are_64x96(self, tmp_path):
        paths = [write_tone_wav(tmp_path / f"t{i}.wav", duration_s=d)
                 for i, d in enumerate((0.985, 1.5, 2.2))]
        specs = [preprocess_clip(load_wav(p)) for p in paths]
        target = max(target_frames_quantile(specs, 0.9), SEGMENT_FRAMES)
        for spec in specs:
            for seg in segment(fit_to_target_frames(spec, target)):
                assert seg.shape == (N_MELS, SEGMENT_FRAMES)
