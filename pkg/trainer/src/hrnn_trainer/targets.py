"""Training targets: per-band gains derived from the true clean/noise split."""

import numpy as np

from .pipeline import BAND_OF_BIN, NUM_BANDS, NUM_BINS

POWER_FLOOR = 1e-10


def wf_target(clean_spectra, noise_spectra):
    """Wiener-style band gains in [0, 1], (hops, 16).

    Per linear bin the gain is |S|^2 / (|S|^2 + |N|^2) with the denominator
    floored; bands aggregate their bins weighted by noisy power so that the
    gain of the energetic bins dominates each band.
    """
    s = np.asarray(clean_spectra)
    n = np.asarray(noise_spectra)
    if s.shape != n.shape:
        raise ValueError("clean and noise spectra must be aligned and equal shape")
    ps = (s.real ** 2 + s.imag ** 2)[:, :NUM_BINS].astype(np.float64)
    pn = (n.real ** 2 + n.imag ** 2)[:, :NUM_BINS].astype(np.float64)
    px = (np.abs(s + n) ** 2)[:, :NUM_BINS].astype(np.float64)
    wf = ps / np.maximum(ps + pn, POWER_FLOOR)

    onehot = np.zeros((NUM_BINS, NUM_BANDS))
    onehot[np.arange(NUM_BINS), BAND_OF_BIN] = 1.0
    num = (wf * px) @ onehot
    den = np.maximum(px @ onehot, POWER_FLOOR)
    return np.clip(num / den, 0.0, 1.0).astype(np.float32)
