"""Uniform oversampled analysis/synthesis filter bank (WOLA realization).

24 kHz input, 24-sample (1 ms) hop, 96-sample (4 ms) window, real DFT with
49 bins (DC..Nyquist, 250 Hz spacing) of which the lowest 48 feed the
network path. Square-root periodic Hann windows on both sides; the squared
window overlap-adds to the constant 2 at 4x overlap, so synthesis divides
by 2 and the unity-mask round trip reconstructs the input exactly, delayed
by window - hop = 72 samples (3 ms).

All per-stream state lives in FbankState and is mutated in place; one
state must not be shared between concurrent calls.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft


@dataclass(frozen=True)
class FbankConfig:
    sample_rate_hz: int = 24000
    hop_samples: int = 24
    window_samples: int = 96
    dft_bins: int = 49
    usable_bins: int = 48

    def __post_init__(self):
        if self.window_samples % self.hop_samples != 0:
            raise ValueError("window_samples must be a multiple of hop_samples")
        if self.usable_bins != self.dft_bins - 1:
            raise ValueError("usable_bins must be dft_bins - 1")
        if self.window_samples != 2 * (self.dft_bins - 1):
            raise ValueError("dft_bins must match a real DFT of window_samples")

    @property
    def bin_spacing_hz(self) -> float:
        return self.sample_rate_hz / (2 * (self.dft_bins - 1))


DEFAULT_CONFIG = FbankConfig()


def _sqrt_hann(n):
    # periodic Hann; sqrt so that analysis * synthesis = Hann (COLA constant 2 at 4x overlap)
    return np.sqrt(0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)).astype(np.float32)


_WINDOW_CACHE = {}


def _window(cfg, dtype=np.float32):
    key = (cfg.window_samples, np.dtype(dtype).name)
    w = _WINDOW_CACHE.get(key)
    if w is None:
        w = _sqrt_hann(cfg.window_samples).astype(dtype)
        _WINDOW_CACHE[key] = w
    return w


@dataclass
class Spectrum:
    """One complex frame of the 49-bin subband signal at one hop."""

    bins: np.ndarray
    hop_index: int = 0

    def power(self, usable_only=True):
        """|X|^2 per bin; usable_only drops the Nyquist bin."""
        p = self.bins.real ** 2 + self.bins.imag ** 2
        return p[:-1] if usable_only else p


@dataclass
class FbankState:
    """Per-stream buffers for one analysis or synthesis direction.

    dtype selects the arithmetic precision; the engine runs float32.
    """

    config: FbankConfig = DEFAULT_CONFIG
    dtype: type = np.float32
    analysis_buffer: np.ndarray = field(default=None)
    synthesis_overlap: np.ndarray = field(default=None)
    hop_counter: int = 0

    def __post_init__(self):
        cfg = self.config
        if self.analysis_buffer is None:
            self.analysis_buffer = np.zeros(cfg.window_samples, dtype=self.dtype)
        if self.synthesis_overlap is None:
            self.synthesis_overlap = np.zeros(
                cfg.window_samples - cfg.hop_samples, dtype=self.dtype
            )


def analyze(new_samples, state):
    """Consume one hop of input and return the Spectrum of the newest window.

    new_samples must hold exactly config.hop_samples values. The analysis
    buffer starts zeroed, so the first few spectra cover partial input.
    """
    cfg = state.config
    x = np.asarray(new_samples, dtype=state.analysis_buffer.dtype)
    if x.shape != (cfg.hop_samples,):
        raise ValueError(
            f"analyze expects exactly {cfg.hop_samples} samples, got shape {x.shape}"
        )
    buf = state.analysis_buffer
    hop = cfg.hop_samples
    buf[:-hop] = buf[hop:]
    buf[-hop:] = x
    spec = scipy.fft.rfft(_window(cfg, buf.dtype) * buf)
    out = Spectrum(bins=spec, hop_index=state.hop_counter)
    state.hop_counter += 1
    return out


def synthesize(spec, state):
    """Invert one Spectrum and return config.hop_samples output samples.

    Overlap-adds the windowed inverse DFT onto the carry buffer and emits
    the fully accumulated oldest hop, renormalized by the COLA constant.
    """
    cfg = state.config
    if spec.bins.shape != (cfg.dft_bins,):
        raise ValueError(
            f"synthesize expects {cfg.dft_bins} bins, got shape {spec.bins.shape}"
        )
    hop = cfg.hop_samples
    acc = state.synthesis_overlap
    cplx = np.complex64 if acc.dtype == np.float32 else np.complex128
    frame = scipy.fft.irfft(np.asarray(spec.bins, dtype=cplx),
                            n=cfg.window_samples)
    frame *= _window(cfg, acc.dtype)
    out = (acc[:hop] + frame[:hop]) / acc.dtype.type(2.0)
    acc[:-hop] = acc[hop:]
    acc[-hop:] = 0.0
    acc += frame[hop:]
    state.hop_counter += 1
    return out


def algorithmic_delay(cfg=DEFAULT_CONFIG):
    """Analysis+synthesis round-trip delay in samples (a whole number of hops).

    For this WOLA realization the emitted hop lags the newest input hop by
    window - hop samples; the impulse-response tests pin the same value by
    measurement.
    """
    return cfg.window_samples - cfg.hop_samples
