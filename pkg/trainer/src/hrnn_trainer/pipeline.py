"""Offline feature pipeline, numerically matched to the streaming engine.

Everything here runs whole-sequence in float32 with the same constants and
operation order the engine uses per hop: 96-sample sqrt-Hann windows on a
24-sample hop, clipped dB, exponential-decay mean normalization seeded
with the first frame, and 16 rectangular bark bands. Agreement with the
engine is held to 1e-5 per feature by the parity tests.
"""

import numpy as np
import scipy.fft

SAMPLE_RATE = 24000
HOP = 24
WINDOW = 96
NUM_BINS = 48
NUM_BANDS = 16
DB_FLOOR = -100.0
POWER_FLOOR = 1e-10

BAND_WIDTHS = (1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 3, 4, 6, 8, 13)
BAND_OF_BIN = np.repeat(np.arange(NUM_BANDS), BAND_WIDTHS)
BINS_PER_BAND = np.asarray(BAND_WIDTHS, dtype=np.float32)

_WINDOW = np.sqrt(0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(WINDOW) / WINDOW)
                  ).astype(np.float32)


def analyze_sequence(samples):
    """Complex spectra (hops, 49) of a whole signal, zero history at start."""
    x = np.asarray(samples, dtype=np.float32)
    n_hops = len(x) // HOP
    padded = np.concatenate([np.zeros(WINDOW - HOP, dtype=np.float32),
                             x[:n_hops * HOP]])
    idx = np.arange(WINDOW)[None, :] + HOP * np.arange(n_hops)[:, None]
    return scipy.fft.rfft(padded[idx] * _WINDOW, axis=1)


def power_db(spectra):
    """Clipped per-bin power in dB for the 48 usable bins, (hops, 48)."""
    usable = spectra[:, :NUM_BINS]
    p = usable.real ** 2 + usable.imag ** 2
    db = np.float32(10.0) * np.log10(np.maximum(p, np.float32(POWER_FLOOR)))
    return np.maximum(db, np.float32(DB_FLOOR))


def normalize_sequence(db, tau_s=1.0):
    """Exponential-decay mean normalization, first frame seeding the mean."""
    x = np.asarray(db, dtype=np.float32)
    alpha = np.float32(np.exp(-(HOP / SAMPLE_RATE) / tau_s))
    one_minus = np.float32(1.0) - alpha
    out = np.empty_like(x)
    mean = x[0].copy()
    out[0] = 0.0
    for t in range(1, len(x)):
        mean = alpha * mean + one_minus * x[t]
        out[t] = x[t] - mean
    return out


# accumulate in float64 like the engine's bincount does, then round once
_COMPRESS = np.zeros((NUM_BINS, NUM_BANDS))
_COMPRESS[np.arange(NUM_BINS), BAND_OF_BIN] = 1.0
_COMPRESS /= BINS_PER_BAND


def bark_compress_sequence(values):
    """(hops, 48) -> (hops, 16) by per-band arithmetic mean."""
    v = np.asarray(values, dtype=np.float32)
    return (v.astype(np.float64) @ _COMPRESS).astype(np.float32)


def features_from_signal(samples, tau_s=1.0):
    """Full pipeline: signal -> (hops, 16) normalized band features."""
    return bark_compress_sequence(
        normalize_sequence(power_db(analyze_sequence(samples)), tau_s=tau_s)
    )


def magnitudes_from_signal(samples):
    """Per-bin linear magnitudes (hops, 48) for the spectrum losses."""
    spectra = analyze_sequence(samples)[:, :NUM_BINS]
    return np.abs(spectra).astype(np.float32)
