"""Parameter and FLOP accounting for the mask predictor.

Counting conventions: multiplies, adds, and activation table lookups each
cost one FLOP. Per GRU layer and hop that comes to 6N(M+N+1): every gate
row costs M+N multiplies, M+N adds (bias adds included), one add to merge
the input and recurrent halves, and one activation lookup; the elementwise
gate mixing that follows is excluded. The fully connected output layer
costs 16(2*N2 + 1) under the same rules. Normalization is itemized as 8
ops per bin (3 for the power, 1 log lookup, 3 for the decay update, 1
subtract) and the bark stages as 48 ops per hop (32 compression adds, 8
scale multiplies, 8 floor comparisons on mask application). The filter
bank is deliberately excluded from all totals.

instrumented_count() re-derives the network numbers by executing the
per-hop arithmetic with counters attached, so the closed-form rates can
be cross-checked against ops actually performed.
"""

from dataclasses import dataclass, field

import numpy as np

from .features import NUM_BINS
from .model import ArchConfig, ModelWeights, random_weights

HOPS_PER_SECOND = 1000

NORMALIZATION_OPS_PER_BIN = 8
BARK_OPS_PER_HOP = 48


@dataclass(frozen=True)
class ParamCount:
    gru1: int
    gru2: int
    output: int

    @property
    def per_layer(self):
        return [self.gru1, self.gru2, self.output]

    @property
    def total(self):
        return self.gru1 + self.gru2 + self.output


def param_count(arch: ArchConfig) -> ParamCount:
    """Trainable parameter count: 3N(M+N+2) per GRU layer plus 16*N2+16."""
    m1, m2 = arch.input_sizes
    n1, n2 = arch.hidden1, arch.hidden2
    return ParamCount(
        gru1=3 * n1 * (m1 + n1 + 2),
        gru2=3 * n2 * (m2 + n2 + 2),
        output=arch.mask_dim * n2 + arch.mask_dim,
    )


@dataclass(frozen=True)
class CostReport:
    params_total: int
    params_per_layer: list
    breakdown: dict          # per-hop ops: gru1, gru2, output, normalization, bark
    hops_per_second: int = HOPS_PER_SECOND

    @property
    def flops_per_hop(self):
        return sum(self.breakdown.values())

    @property
    def flops_per_second(self):
        return self.hops_per_second * self.flops_per_hop

    @property
    def network_flops_per_hop(self):
        """GRU layers plus output layer only (the comparable figure)."""
        return (self.breakdown["gru1"] + self.breakdown["gru2"]
                + self.breakdown["output"])

    @property
    def network_flops_per_second(self):
        return self.hops_per_second * self.network_flops_per_hop


def _gru_flops_per_hop(m, n):
    return 6 * n * (m + n + 1)


def flop_rate(arch: ArchConfig, hops_per_second=HOPS_PER_SECOND) -> CostReport:
    """Closed-form per-stage FLOP budget for one stream."""
    m1, m2 = arch.input_sizes
    params = param_count(arch)
    breakdown = {
        "gru1": _gru_flops_per_hop(m1, arch.hidden1),
        "gru2": _gru_flops_per_hop(m2, arch.hidden2),
        "output": arch.mask_dim * (2 * arch.hidden2 + 1),
        "normalization": NUM_BINS * NORMALIZATION_OPS_PER_BIN,
        "bark": BARK_OPS_PER_HOP,
    }
    return CostReport(
        params_total=params.total,
        params_per_layer=params.per_layer,
        breakdown=breakdown,
        hops_per_second=hops_per_second,
    )


@dataclass
class OpCounter:
    mults: int = 0
    adds: int = 0
    lookups: int = 0

    @property
    def total(self):
        return self.mults + self.adds + self.lookups


def _counted_matvec(kernel, vec, bias, counter):
    # scalar loops on purpose: one counter tick per arithmetic op performed
    rows, cols = kernel.shape
    out = np.empty(rows, dtype=np.float64)
    for i in range(rows):
        acc = 0.0
        for j in range(cols):
            acc += float(kernel[i, j]) * float(vec[j])
            counter.mults += 1
            if j > 0:
                counter.adds += 1
        acc += float(bias[i])
        counter.adds += 1
        out[i] = acc
    return out


def _counted_gru_step(x, h, w, counter):
    n = w.hidden_size
    gi = _counted_matvec(w.input_kernel, x, w.input_bias, counter)
    gh = _counted_matvec(w.recurrent_kernel, h, w.recurrent_bias, counter)
    pre = np.empty(2 * n)
    for i in range(2 * n):
        pre[i] = gi[i] + gh[i]
        counter.adds += 1
    r = 1.0 / (1.0 + np.exp(-pre[:n]))
    z = 1.0 / (1.0 + np.exp(-pre[n:]))
    counter.lookups += 2 * n
    cand_pre = np.empty(n)
    for i in range(n):
        # the reset-gate scaling is elementwise mixing, outside the convention
        cand_pre[i] = gi[2 * n + i] + r[i] * gh[2 * n + i]
        counter.adds += 1
    cand = np.tanh(cand_pre)
    counter.lookups += n
    return (1.0 - z) * cand + z * h


def _counted_output_layer(h, kernel, bias, counter):
    logits = _counted_matvec(kernel, h, bias, counter)
    counter.lookups += kernel.shape[0]
    return 1.0 / (1.0 + np.exp(-logits))


@dataclass
class InstrumentedCount:
    by_stage: dict
    by_kind: OpCounter = field(default_factory=OpCounter)

    @property
    def total(self):
        return sum(self.by_stage.values())


def instrumented_count(arch: ArchConfig, weights: ModelWeights = None,
                       seed=0) -> InstrumentedCount:
    """Execute one steady-state hop with op counters in the network path.

    Returns the per-stage counts of multiply/add/lookup actually
    performed; these must coincide with flop_rate's gru and output
    entries for every architecture.
    """
    if weights is None:
        weights = random_weights(arch, seed=seed)
    rng = np.random.default_rng(seed)
    feat = rng.standard_normal(arch.feature_dim)
    h1 = rng.standard_normal(arch.hidden1) * 0.1
    h2 = rng.standard_normal(arch.hidden2) * 0.1

    totals = OpCounter()
    stages = {}

    c = OpCounter()
    if arch.variant == "HC":
        y1 = _counted_gru_step(feat, h1, weights.gru1, c)
        stages["gru1"] = c.total
        ctx = np.concatenate([rng.standard_normal(arch.hidden1) * 0.1, y1,
                              rng.standard_normal(arch.hidden1) * 0.1])
        c2 = OpCounter()
        y2 = _counted_gru_step(ctx, h2, weights.gru2, c2)
        stages["gru2"] = c2.total
    else:
        ctx = np.concatenate([rng.standard_normal(arch.feature_dim),
                              feat,
                              rng.standard_normal(arch.feature_dim)])
        y1 = _counted_gru_step(ctx, h1, weights.gru1, c)
        stages["gru1"] = c.total
        c2 = OpCounter()
        y2 = _counted_gru_step(y1, h2, weights.gru2, c2)
        stages["gru2"] = c2.total
    c3 = OpCounter()
    _counted_output_layer(y2, weights.out_kernel, weights.out_bias, c3)
    stages["output"] = c3.total

    for part in (c, c2, c3):
        totals.mults += part.mults
        totals.adds += part.adds
        totals.lookups += part.lookups
    return InstrumentedCount(by_stage=stages, by_kind=totals)
