import numpy as np
import pytest

FS = 24000


def speech_like(seconds, seed=0, fs=FS):
    """Deterministic speech-like test signal: drifting-pitch harmonics with
    formant shaping, syllabic amplitude modulation, and soft noise bursts
    in the envelope gaps."""
    rng = np.random.default_rng(seed)
    n = int(seconds * fs)
    t = np.arange(n) / fs
    f0 = 130.0 + 25.0 * np.sin(2 * np.pi * 0.7 * t + rng.uniform(0, 2 * np.pi))
    phase = 2 * np.pi * np.cumsum(f0) / fs
    formants = np.array([500.0, 1400.0, 2600.0])
    widths = np.array([180.0, 300.0, 450.0])
    voiced = np.zeros(n)
    for k in range(1, 14):
        fk = k * f0
        gain = np.zeros(n)
        for fc, bw in zip(formants, widths):
            gain += np.exp(-0.5 * ((fk - fc) / bw) ** 2)
        voiced += (gain / k) * np.sin(k * phase)
    syllable = 0.55 + 0.45 * np.sin(2 * np.pi * 3.1 * t + rng.uniform(0, 2 * np.pi))
    fric = rng.standard_normal(n)
    fric = np.diff(fric, prepend=0.0)  # high-pass tilt for a fricative flavor
    x = voiced * syllable + 0.06 * fric * (1.0 - syllable)
    x = x / np.sqrt(np.mean(x ** 2)) * 0.1
    return x.astype(np.float32)


def speech_shaped_noise(seconds, seed=1, fs=FS):
    """Stationary noise with a speech-ish downward spectral tilt."""
    rng = np.random.default_rng(seed)
    n = int(seconds * fs)
    white = rng.standard_normal(n)
    spec = np.fft.rfft(white)
    f = np.fft.rfftfreq(n, 1.0 / fs)
    spec *= 1.0 / np.sqrt(1.0 + (f / 500.0) ** 2)
    x = np.fft.irfft(spec, n=n)
    x = x / np.sqrt(np.mean(x ** 2)) * 0.1
    return x.astype(np.float32)


def white_noise(seconds, seed=2, fs=FS, rms=0.1):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(int(seconds * fs))
    return (x / np.sqrt(np.mean(x ** 2)) * rms).astype(np.float32)


@pytest.fixture(scope="session")
def speech_10s():
    return speech_like(10.0, seed=11)
