"""Mask-approximation and magnitude-spectrum-approximation losses.

Both losses sum squared errors over time and frequency (no averaging
inside a sequence); batching code averages over sequences. MA compares
masks in the 16-band domain where they live; MSA expands the mask to the
48 linear bins and compares masked noisy magnitudes with clean ones.
"""

import torch

from .pipeline import BAND_OF_BIN

_BAND_OF_BIN = torch.as_tensor(BAND_OF_BIN, dtype=torch.long)


def loss_ma(predicted, target):
    """Sum of squared mask errors over (hops, 16)."""
    if predicted.shape != target.shape:
        raise ValueError(f"mask shapes differ: {tuple(predicted.shape)} "
                         f"vs {tuple(target.shape)}")
    return torch.sum((target - predicted) ** 2)


def loss_msa(predicted, noisy_mag, clean_mag):
    """Sum of squared spectrum errors over (hops, 48) after masking.

    predicted holds 16 band gains per hop and is expanded to the 48 bins
    before the point-wise multiplication with the noisy magnitudes.
    """
    if noisy_mag.shape != clean_mag.shape:
        raise ValueError("noisy and clean magnitudes must have equal shape")
    if predicted.shape[:-1] != noisy_mag.shape[:-1] or predicted.shape[-1] != 16:
        raise ValueError(f"mask shape {tuple(predicted.shape)} does not match "
                         f"magnitudes {tuple(noisy_mag.shape)}")
    expanded = predicted.index_select(-1, _BAND_OF_BIN.to(predicted.device))
    return torch.sum((clean_mag - noisy_mag * expanded) ** 2)


def loss_combined(predicted, target, noisy_mag, clean_mag, ma_weight=0.5):
    """ma_weight * MA + (1 - ma_weight) * MSA; the endpoints are exact."""
    if not 0.0 <= ma_weight <= 1.0:
        raise ValueError("ma_weight must lie in [0, 1]")
    if ma_weight == 1.0:
        return loss_ma(predicted, target)
    if ma_weight == 0.0:
        return loss_msa(predicted, noisy_mag, clean_mag)
    return (ma_weight * loss_ma(predicted, target)
            + (1.0 - ma_weight) * loss_msa(predicted, noisy_mag, clean_mag))
