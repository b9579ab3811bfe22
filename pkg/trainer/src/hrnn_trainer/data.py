"""Dataset manifest handling, mixing, and per-sequence example assembly."""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from . import pipeline
from .targets import wf_target

SAMPLE_RATE = 24000

KINDS = ("speech", "noise")
SPLITS = ("train", "dev", "test")


def read_wav(path):
    rate, data = wavfile.read(path)
    if rate != SAMPLE_RATE:
        raise ValueError(f"{path}: expected {SAMPLE_RATE} Hz, got {rate}")
    if data.ndim != 1:
        raise ValueError(f"{path}: expected mono audio")
    if data.dtype == np.int16:
        return data.astype(np.float32) / 32768.0
    if data.dtype == np.float32:
        return data.copy()
    raise ValueError(f"{path}: unsupported sample format {data.dtype}")


@dataclass(frozen=True)
class Manifest:
    speech: dict  # split -> list of paths
    noise: dict

    def clips(self, kind, split):
        table = self.speech if kind == "speech" else self.noise
        return table[split]


def load_manifest(path):
    """CSV with columns path, kind (speech|noise), split (train|dev|test)."""
    speech = {s: [] for s in SPLITS}
    noise = {s: [] for s in SPLITS}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"path", "kind", "split"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: manifest needs columns {sorted(required)}")
        for line, row in enumerate(reader, start=2):
            kind, split = row["kind"].strip(), row["split"].strip()
            if kind not in KINDS:
                raise ValueError(f"{path}:{line}: unknown kind {kind!r}")
            if split not in SPLITS:
                raise ValueError(f"{path}:{line}: unknown split {split!r}")
            (speech if kind == "speech" else noise)[split].append(row["path"].strip())
    if not any(speech.values()):
        raise ValueError(f"{path}: manifest lists no speech clips")
    if not any(noise.values()):
        raise ValueError(f"{path}: manifest lists no noise clips")
    return Manifest(speech=speech, noise=noise)


def mix_at_snr(clean, noise, snr_db):
    """Clean plus noise scaled to the target full-signal RMS SNR."""
    clean = np.asarray(clean, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    p_clean = float(np.mean(clean ** 2))
    p_noise = float(np.mean(noise ** 2))
    if p_clean == 0.0 or p_noise == 0.0:
        raise ValueError("cannot mix silent signals")
    scale = math.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0)))
    return clean.astype(np.float32), (scale * noise).astype(np.float32)


def crop(signal, length, rng):
    if len(signal) < length:
        raise ValueError(f"clip of {len(signal)} samples is shorter than the "
                         f"required {length}")
    if len(signal) == length:
        return signal
    start = int(rng.integers(0, len(signal) - length + 1))
    return signal[start:start + length]


@dataclass
class Example:
    """Everything one sequence contributes to a training step."""

    features: np.ndarray    # (T, 16) network input
    target: np.ndarray      # (T, 16) band gains
    noisy_mag: np.ndarray   # (T, 48)
    clean_mag: np.ndarray   # (T, 48)


def build_example(clean, noise, snr_db, tau_s=1.0):
    clean, scaled_noise = mix_at_snr(clean, noise, snr_db)
    noisy = clean + scaled_noise
    clean_spec = pipeline.analyze_sequence(clean)
    noise_spec = pipeline.analyze_sequence(scaled_noise)
    return Example(
        features=pipeline.features_from_signal(noisy, tau_s=tau_s),
        target=wf_target(clean_spec, noise_spec),
        noisy_mag=pipeline.magnitudes_from_signal(noisy),
        clean_mag=pipeline.magnitudes_from_signal(clean),
    )


def assemble_split(manifest, split, seq_samples, snr_grid, rng, tau_s=1.0,
                   crops_per_clip=1):
    """Examples for one split: each speech clip is cropped crops_per_clip
    times and paired with a freshly drawn noise crop and SNR."""
    speech_paths = manifest.clips("speech", split)
    noise_paths = manifest.clips("noise", split)
    if not speech_paths:
        raise ValueError(f"no speech clips in split {split!r}")
    if not noise_paths:
        raise ValueError(f"no noise clips in split {split!r}")
    examples = []
    for path in speech_paths:
        clip = read_wav(path)
        for _ in range(crops_per_clip):
            clean = crop(clip, seq_samples, rng)
            noise_clip = read_wav(noise_paths[int(rng.integers(len(noise_paths)))])
            noise = crop(noise_clip, seq_samples, rng)
            snr = float(snr_grid[int(rng.integers(len(snr_grid)))])
            examples.append(build_example(clean, noise, snr, tau_s=tau_s))
    return examples
