"""Trainable mask predictor mirroring the inference engine's architecture.

The one-frame-each-side context window makes the network emit masks for
hops 0..T-2 given T feature frames; the missing frame before the stream
start is a zero vector, exactly as the streaming engine primes.
"""

import torch
from torch import nn

FEATURE_DIM = 16
MASK_DIM = 16


def context_concat(x):
    """(B, T, F) -> (B, T-1, 3F): frames at t-1 (zero at start), t, t+1."""
    prev = torch.cat([torch.zeros_like(x[:, :1]), x[:, :-2]], dim=1)
    return torch.cat([prev, x[:, :-1], x[:, 1:]], dim=-1)


class MaskNet(nn.Module):
    def __init__(self, variant="HC", hidden1=16, hidden2=16):
        super().__init__()
        if variant not in ("HC", "C"):
            raise ValueError(f"unknown variant {variant!r}")
        if hidden1 < 1 or hidden2 < 1:
            raise ValueError("hidden sizes must be at least 1")
        self.variant = variant
        self.hidden1 = hidden1
        self.hidden2 = hidden2
        in1 = FEATURE_DIM if variant == "HC" else 3 * FEATURE_DIM
        in2 = 3 * hidden1 if variant == "HC" else hidden1
        self.gru1 = nn.GRU(in1, hidden1, batch_first=True)
        self.gru2 = nn.GRU(in2, hidden2, batch_first=True)
        self.out = nn.Linear(hidden2, MASK_DIM)

    def forward(self, feats):
        """(B, T, 16) features -> (B, T-1, 16) masks for hops 0..T-2."""
        if feats.dim() != 3 or feats.shape[-1] != FEATURE_DIM:
            raise ValueError("expected features of shape (batch, hops, 16)")
        if feats.shape[1] < 2:
            raise ValueError("need at least two frames (one hop of lookahead)")
        if self.variant == "HC":
            y1, _ = self.gru1(feats)
            y2, _ = self.gru2(context_concat(y1))
        else:
            y1, _ = self.gru1(context_concat(feats))
            y2, _ = self.gru2(y1)
        return torch.sigmoid(self.out(y2))

    def parameter_count(self):
        return sum(p.numel() for p in self.parameters())
