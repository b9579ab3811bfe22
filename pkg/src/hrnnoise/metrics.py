"""Objective evaluation: SI-SDR, STOI, and time-domain RMSE.

All metrics are deterministic pure functions. Because SI-SDR and RMSE are
sensitive to misalignment, each takes an explicit integer delay (samples
the estimate lags the reference); callers evaluating engine output pass
the engine's reported total latency.

The STOI implementation follows the standard recipe: resample to 10 kHz,
drop frames more than 40 dB below the loudest reference frame, decompose
into 15 one-third-octave bands from 150 Hz, and average clipped
short-time (384 ms) band-envelope correlations.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import resample_poly

SI_SDR_CAP_DB = 100.0

_STOI_FS = 10000
_STOI_FRAME = 256
_STOI_HOP = 128
_STOI_NFFT = 512
_STOI_BANDS = 15
_STOI_MIN_FREQ = 150.0
_STOI_SEG_FRAMES = 30          # 384 ms at 10 kHz with 128-sample hops
_STOI_DYN_RANGE_DB = 40.0      # silent-frame threshold below the loudest frame
_STOI_CLIP_DB = -15.0          # lower SDR bound before correlation
_EPS = np.finfo(np.float64).eps


def _aligned(estimate, reference, delay):
    est = np.asarray(estimate, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if est.shape != ref.shape or est.ndim != 1:
        raise ValueError("estimate and reference must be equal-length 1-D signals")
    delay = int(delay)
    if delay < 0 or delay >= len(est):
        raise ValueError("delay must lie in [0, len(signal))")
    if delay:
        return est[delay:], ref[:len(ref) - delay]
    return est, ref


def si_sdr(estimate, reference, delay=0):
    """Scale-invariant signal-to-distortion ratio in dB (capped at +100)."""
    est, ref = _aligned(estimate, reference, delay)
    if len(ref) < 1:
        raise ValueError("signals must contain at least one sample")
    ref_energy = float(np.dot(ref, ref))
    if ref_energy == 0.0:
        raise ValueError("reference signal is identically zero")
    target = (float(np.dot(est, ref)) / ref_energy) * ref
    residual = est - target
    num = float(np.dot(target, target))
    den = float(np.dot(residual, residual))
    if den == 0.0 or 10.0 * math.log10(num / den) > SI_SDR_CAP_DB:
        return SI_SDR_CAP_DB
    return 10.0 * math.log10(num / den)


def rmse(estimate, reference, delay=0):
    """Root mean squared error of the time-domain signals after alignment."""
    est, ref = _aligned(estimate, reference, delay)
    if len(ref) < 1:
        raise ValueError("signals must contain at least one sample")
    return float(np.sqrt(np.mean((est - ref) ** 2)))


def _resample_to_stoi_rate(x, sample_rate):
    if sample_rate == _STOI_FS:
        return np.asarray(x, dtype=np.float64)
    ratio = Fraction(_STOI_FS, int(sample_rate))
    return resample_poly(np.asarray(x, dtype=np.float64),
                         ratio.numerator, ratio.denominator)


def _frame(x, length, hop):
    count = (len(x) - length) // hop + 1
    idx = np.arange(length)[None, :] + hop * np.arange(count)[:, None]
    return x[idx]


def _remove_silent_frames(ref, est):
    w = np.hanning(_STOI_FRAME + 2)[1:-1]
    ref_frames = _frame(ref, _STOI_FRAME, _STOI_HOP) * w
    est_frames = _frame(est, _STOI_FRAME, _STOI_HOP) * w
    energies_db = 20.0 * np.log10(np.linalg.norm(ref_frames, axis=1) + _EPS)
    keep = energies_db > energies_db.max() - _STOI_DYN_RANGE_DB
    ref_frames = ref_frames[keep]
    est_frames = est_frames[keep]
    if len(ref_frames) == 0:
        raise ValueError("reference contains no frames above the silence threshold")
    n = (len(ref_frames) - 1) * _STOI_HOP + _STOI_FRAME
    ref_out = np.zeros(n)
    est_out = np.zeros(n)
    for i in range(len(ref_frames)):
        sl = slice(i * _STOI_HOP, i * _STOI_HOP + _STOI_FRAME)
        ref_out[sl] += ref_frames[i]
        est_out[sl] += est_frames[i]
    return ref_out, est_out


def _third_octave_matrix():
    freqs = np.linspace(0, _STOI_FS, _STOI_NFFT + 1)[:_STOI_NFFT // 2 + 1]
    k = np.arange(_STOI_BANDS, dtype=np.float64)
    lows = _STOI_MIN_FREQ * 2.0 ** ((2.0 * k - 1.0) / 6.0)
    highs = _STOI_MIN_FREQ * 2.0 ** ((2.0 * k + 1.0) / 6.0)
    obm = np.zeros((_STOI_BANDS, len(freqs)))
    for i in range(_STOI_BANDS):
        lo = int(np.argmin(np.square(freqs - lows[i])))
        hi = int(np.argmin(np.square(freqs - highs[i])))
        obm[i, lo:hi] = 1.0
    return obm


_OBM = _third_octave_matrix()


def _band_envelopes(x):
    w = np.hanning(_STOI_FRAME + 2)[1:-1]
    frames = _frame(x, _STOI_FRAME, _STOI_HOP) * w
    spec = np.fft.rfft(frames, n=_STOI_NFFT, axis=1)
    power = (spec.real ** 2 + spec.imag ** 2).T  # (bins, frames)
    return np.sqrt(_OBM @ power)


def stoi(estimate, reference, sample_rate, delay=0):
    """Short-time objective intelligibility of estimate w.r.t. reference.

    Requires enough signal for at least one 384 ms analysis segment after
    silent frames are removed; raises ValueError otherwise.
    """
    est, ref = _aligned(estimate, reference, delay)
    min_samples = int(0.384 * sample_rate)
    if len(ref) < min_samples:
        raise ValueError(
            f"need at least 384 ms of signal ({min_samples} samples at "
            f"{sample_rate} Hz), got {len(ref)}"
        )
    ref10 = _resample_to_stoi_rate(ref, sample_rate)
    est10 = _resample_to_stoi_rate(est, sample_rate)
    ref10, est10 = _remove_silent_frames(ref10, est10)

    x = _band_envelopes(ref10)  # reference, (15, frames)
    y = _band_envelopes(est10)
    n_frames = x.shape[1]
    if n_frames < _STOI_SEG_FRAMES:
        raise ValueError("too little active signal for one 384 ms segment")

    clip_gain = 10.0 ** (-_STOI_CLIP_DB / 20.0)
    total = 0.0
    n_segments = n_frames - _STOI_SEG_FRAMES + 1
    for m in range(n_segments):
        x_seg = x[:, m:m + _STOI_SEG_FRAMES]
        y_seg = y[:, m:m + _STOI_SEG_FRAMES]
        scale = np.sqrt(np.sum(x_seg ** 2, axis=1, keepdims=True)
                        / (np.sum(y_seg ** 2, axis=1, keepdims=True) + _EPS))
        y_clipped = np.minimum(y_seg * scale, x_seg * (1.0 + clip_gain))
        xc = x_seg - x_seg.mean(axis=1, keepdims=True)
        yc = y_clipped - y_clipped.mean(axis=1, keepdims=True)
        xc = xc / (np.linalg.norm(xc, axis=1, keepdims=True) + _EPS)
        yc = yc / (np.linalg.norm(yc, axis=1, keepdims=True) + _EPS)
        total += float(np.sum(xc * yc))
    return total / (_STOI_BANDS * n_segments)


def delta_stoi(enhanced, noisy, reference, sample_rate, delay=0):
    """STOI improvement of enhanced over noisy, both against the reference."""
    return (stoi(enhanced, reference, sample_rate, delay)
            - stoi(noisy, reference, sample_rate))


@dataclass(frozen=True)
class EvalResult:
    """Per-file evaluation row (one line of the evaluate CSV)."""

    file: str
    snr_db: float
    si_sdr_in: float
    si_sdr_out: float
    stoi_in: float
    stoi_out: float
    delta_stoi: float
    rmse: float


def evaluate_triple(name, clean, noisy, enhanced, sample_rate,
                    delay=0, snr_db=float("nan")) -> EvalResult:
    """Metrics for one (clean, noisy, enhanced) signal triple."""
    stoi_in = stoi(noisy, clean, sample_rate)
    stoi_out = stoi(enhanced, clean, sample_rate, delay=delay)
    return EvalResult(
        file=name,
        snr_db=snr_db,
        si_sdr_in=si_sdr(noisy, clean),
        si_sdr_out=si_sdr(enhanced, clean, delay=delay),
        stoi_in=stoi_in,
        stoi_out=stoi_out,
        delta_stoi=stoi_out - stoi_in,
        rmse=rmse(enhanced, clean, delay=delay),
    )
