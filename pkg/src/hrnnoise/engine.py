"""Streaming enhancement engine: one 24-sample hop in, one hop out.

Per hop the pipeline is analyze -> clipped dB -> online normalization ->
bark compression -> network. The network consumes one future frame, so
the mask for hop t arrives while hop t+1 is being processed; spectra wait
in a short queue until their mask is ready, are scaled band-wise (the
Nyquist bin inherits the gain of the topmost band), and go through the
synthesis filter bank. The first call after construction returns None
while that lookahead primes.

Latency accounting: 3 ms filter-bank round trip + 1 ms lookahead in the
signal path, plus 1 ms output granularity (a hop's output can only play
in the following hop slot). enhance_file writes output aligned to that
5 ms (120 sample) total, so an impulse through a file lands exactly
total_ms late.
"""

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import fbank
from .audio import read_wav, write_wav
from .fbank import FbankState, Spectrum
from .features import (NormalizerState, alpha_from_tau, bark_compress,
                       bark_expand, normalize, to_db)
from .model import ArchConfig, ModelState, ModelWeights, push_frame

DEFAULT_ARCH = ArchConfig(variant="HC", hidden1=16, hidden2=16)


@dataclass(frozen=True)
class EngineConfig:
    arch: ArchConfig = DEFAULT_ARCH
    variance_norm: bool = False
    tau_s: float = 1.0
    gain_floor_db: float = None  # None disables the floor

    def __post_init__(self):
        if self.tau_s <= 0:
            raise ValueError("tau_s must be positive")
        if self.gain_floor_db is not None and self.gain_floor_db > 0:
            raise ValueError("gain_floor_db must be nonpositive")


@dataclass(frozen=True)
class LatencyReport:
    fbank_ms: float
    lookahead_ms: float
    hop_ms: float

    @property
    def total_ms(self):
        return self.fbank_ms + self.lookahead_ms + self.hop_ms

    def total_samples(self, sample_rate_hz=24000):
        return round(self.total_ms * sample_rate_hz / 1000.0)


def latency_report(config: EngineConfig = None) -> LatencyReport:
    """Latency budget of the engine; independent of normalization settings."""
    cfg = fbank.DEFAULT_CONFIG
    ms_per_hop = 1000.0 * cfg.hop_samples / cfg.sample_rate_hz
    report = LatencyReport(
        fbank_ms=fbank.algorithmic_delay(cfg) / cfg.hop_samples * ms_per_hop,
        lookahead_ms=ms_per_hop,
        hop_ms=ms_per_hop,
    )
    if report.total_ms > 8.0:
        raise AssertionError("latency budget exceeded, configuration invalid")
    return report


class Engine:
    """One instance per stream; the per-hop pipeline is strictly sequential.

    oracle_masks, when given, is a (T, 16) array of externally computed
    band gains that replaces the network while keeping the exact buffering
    and lookahead timing; flush hops past its end reuse the final row.
    """

    def __init__(self, weights: ModelWeights, config: EngineConfig = None,
                 oracle_masks=None):
        if config is None:
            config = EngineConfig(arch=weights.arch)
        if weights.arch != config.arch:
            raise ValueError("weight architecture does not match engine config")
        weights.validate()
        self.weights = weights
        self.config = config
        self.fbank_config = fbank.DEFAULT_CONFIG
        hop_s = self.fbank_config.hop_samples / self.fbank_config.sample_rate_hz
        self.analysis_state = FbankState(self.fbank_config)
        self.synthesis_state = FbankState(self.fbank_config)
        self.normalizer = NormalizerState(
            alpha=alpha_from_tau(config.tau_s, hop_s),
            variance_enabled=config.variance_norm,
        )
        self.model_state = ModelState(arch=weights.arch)
        self._pending = deque()
        self._hops_in = 0
        self._gain_floor = None
        if config.gain_floor_db is not None:
            self._gain_floor = np.float32(10.0 ** (config.gain_floor_db / 20.0))
        self._oracle = None
        if oracle_masks is not None:
            self._oracle = np.asarray(oracle_masks, dtype=np.float32)
            if self._oracle.ndim != 2 or self._oracle.shape[1] != 16:
                raise ValueError("oracle masks must be a (hops, 16) array")

    def process_hop(self, samples):
        """Consume 24 input samples; return 24 enhanced samples or None.

        None is returned exactly once, on the first call, while the
        one-hop lookahead primes. Normalization statistics update on
        every hop, priming included.
        """
        spec = fbank.analyze(samples, self.analysis_state)
        feat = bark_compress(normalize(to_db(spec.power()), self.normalizer))
        if self._oracle is None:
            mask = push_frame(feat, self.model_state, self.weights)
        else:
            if self._hops_in == 0:
                mask = None
            else:
                idx = min(self._hops_in - 1, len(self._oracle) - 1)
                mask = self._oracle[idx]
        self._pending.append(spec)
        self._hops_in += 1
        if mask is None:
            return None
        ready = self._pending.popleft()
        if self._gain_floor is not None:
            mask = np.maximum(mask, self._gain_floor)
        gains = bark_expand(mask)
        all_gains = np.concatenate([gains, gains[-1:]])  # Nyquist follows band 15
        masked = Spectrum(bins=ready.bins * all_gains, hop_index=ready.hop_index)
        return fbank.synthesize(masked, self.synthesis_state)


def enhance_stream(engine: Engine, samples):
    """Run a whole signal through the engine, real-time aligned.

    The returned array has the input's length; sample n of the output is
    the enhanced version of input sample n - total delay. The leading
    total-delay samples are warm-up (silence), matching what a live
    stream would play. The tail is flushed with zero hops and the result
    truncated to the input length.
    """
    x = np.asarray(samples, dtype=np.float32)
    if x.ndim != 1:
        raise ValueError("expected a mono signal")
    hop = engine.fbank_config.hop_samples
    n = len(x)
    n_hops = math.ceil(n / hop) if n else 0
    padded = np.zeros(n_hops * hop, dtype=np.float32)
    padded[:n] = x

    # priming slot + output-granularity slot come out as leading silence
    pieces = [np.zeros(2 * hop, dtype=np.float32)]
    written = 2 * hop
    zero_hop = np.zeros(hop, dtype=np.float32)
    k = 0
    while written < n or k < n_hops:
        block = padded[k * hop:(k + 1) * hop] if k < n_hops else zero_hop
        out = engine.process_hop(block)
        k += 1
        if out is not None:
            pieces.append(out)
            written += hop
    return np.concatenate(pieces)[:n] if n else np.zeros(0, dtype=np.float32)


def enhance_file(input_path, output_path, weights: ModelWeights,
                 config: EngineConfig = None):
    """Stream a mono 24 kHz WAV file through the engine; write float32 WAV."""
    x = read_wav(input_path)
    engine = Engine(weights, config)
    y = enhance_stream(engine, x)
    write_wav(output_path, y)
    return y
