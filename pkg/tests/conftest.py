import numpy as np
import pytest
from scipy.io import wavfile

from driftkit.audio import SAMPLE_RATE


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def write_tone_wav(path, duration_s=0.985, freq=440.0, rate=SAMPLE_RATE,
                   amplitude=0.6, lead_silence_s=0.0, tail_silence_s=0.0,
                   dtype=np.int16, stereo=False):
    """Deterministic WAV fixture: optional silence padding around a sine."""
    n = int(round(duration_s * rate))
    t = np.arange(n) / rate
    x = amplitude * np.sin(2 * np.pi * freq * t)
    lead = np.zeros(int(round(lead_silence_s * rate)))
    tail = np.zeros(int(round(tail_silence_s * rate)))
    x = np.concatenate([lead, x, tail])
    if stereo:
        x = np.stack([x, 0.5 * x], axis=1)
    if dtype == np.int16:
        data = (x * 32767).astype(np.int16)
    else:
        data = x.astype(dtype)
    wavfile.write(path, rate, data)
    return path


@pytest.fixture
def tone_wav(tmp_path):
    return write_tone_wav(tmp_path / "tone.wav")
