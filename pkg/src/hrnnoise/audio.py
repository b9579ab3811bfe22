"""Mono 24 kHz WAV input/output.

Only the two formats the engine is defined for are accepted: 16-bit PCM
and 32-bit IEEE float, single channel, exactly 24000 Hz. Anything else is
rejected with an explicit error; resampling is deliberately out of scope.
"""

import numpy as np
from scipy.io import wavfile

SAMPLE_RATE = 24000


def read_wav(path):
    """Read a mono 24 kHz WAV file and return float32 samples in [-1, 1].

    Raises ValueError naming the offending property for any unsupported
    sample rate, channel count, or sample format.
    """
    rate, data = wavfile.read(path)
    if rate != SAMPLE_RATE:
        raise ValueError(
            f"{path}: unsupported sample rate {rate} Hz, expected {SAMPLE_RATE} Hz "
            "(resampling is not performed)"
        )
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        return (data.astype(np.float32)) / 32768.0
    if data.dtype == np.float32:
        return data.copy()
    raise ValueError(
        f"{path}: unsupported sample format {data.dtype}, expected int16 PCM or float32"
    )


def write_wav(path, samples, float_format=True):
    """Write float32 samples as a mono 24 kHz WAV file.

    float_format=True writes 32-bit IEEE float (the engine's output
    format); False writes 16-bit PCM with clipping at full scale.
    """
    samples = np.asarray(samples, dtype=np.float32)
    if samples.ndim != 1:
        raise ValueError("only mono output is supported")
    if float_format:
        wavfile.write(path, SAMPLE_RATE, samples)
    else:
        pcm = np.clip(samples, -1.0, 1.0 - 1.0 / 32768.0)
        wavfile.write(path, SAMPLE_RATE, (pcm * 32768.0).astype(np.int16))
