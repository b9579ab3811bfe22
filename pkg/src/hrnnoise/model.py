"""Tiny recurrent mask predictor and its binary weight format.

Two GRU layers feed a sigmoid output layer producing 16 band gains per
hop. The HC variant gives layer 2 the layer-1 outputs at the previous,
current, and next hop; the C variant concatenates the raw feature frames
at those hops into layer 1 instead. Either way the network consumes one
future frame, so the mask for hop t is emitted while processing hop t+1
and the first push after a reset yields nothing.

The GRU cell is the two-bias formulation with the reset gate applied to
the already-computed recurrent candidate term; that is the only
convention whose per-layer parameter count is 3N(M+N+2), which the weight
file and the cost accounting both rely on. Gate blocks are stored in the
order (reset, update, candidate).
"""

import struct
import zlib
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

FEATURE_DIM = 16
MASK_DIM = 16

VARIANT_CODES = {"HC": 0, "C": 1}
VARIANT_NAMES = {code: name for name, code in VARIANT_CODES.items()}

MAGIC = b"HRNN"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHBBIIII")


class WeightFileError(Exception):
    """Base class for weight-file problems."""


class WeightFormatError(WeightFileError):
    """Bad magic, unsupported version, or checksum mismatch."""


class WeightValidationError(WeightFileError):
    """Structurally well-formed file with inconsistent dimensions."""


class WeightTruncationError(WeightFileError):
    """File ends before all declared tensors (or the checksum) are present."""


@dataclass(frozen=True)
class ArchConfig:
    variant: str
    hidden1: int
    hidden2: int
    feature_dim: int = FEATURE_DIM
    mask_dim: int = MASK_DIM
    context: int = 1

    def __post_init__(self):
        if self.variant not in VARIANT_CODES:
            raise ValueError(f"unknown variant {self.variant!r}, expected 'HC' or 'C'")
        if self.hidden1 < 1 or self.hidden2 < 1:
            raise ValueError("hidden sizes must be at least 1")
        if self.feature_dim != FEATURE_DIM or self.mask_dim != MASK_DIM:
            raise ValueError("feature_dim and mask_dim are fixed at 16")
        if self.context != 1:
            raise ValueError("temporal context is fixed at one frame per side")

    @property
    def input_sizes(self):
        """(layer-1 input, layer-2 input) as dictated by the variant."""
        window = 2 * self.context + 1
        if self.variant == "HC":
            return self.feature_dim, window * self.hidden1
        return window * self.feature_dim, self.hidden1


@dataclass
class GruWeights:
    input_kernel: np.ndarray     # (3N, M), gate-blocked rows
    recurrent_kernel: np.ndarray  # (3N, N)
    input_bias: np.ndarray       # (3N,)
    recurrent_bias: np.ndarray   # (3N,)

    @property
    def hidden_size(self):
        return self.recurrent_kernel.shape[1]

    @property
    def input_size(self):
        return self.input_kernel.shape[1]

    def validate(self):
        n = self.hidden_size
        if self.input_kernel.shape[0] != 3 * n:
            raise WeightValidationError("input_kernel rows must be 3x hidden size")
        if self.recurrent_kernel.shape != (3 * n, n):
            raise WeightValidationError("recurrent_kernel must be (3N, N)")
        if self.input_bias.shape != (3 * n,) or self.recurrent_bias.shape != (3 * n,):
            raise WeightValidationError("bias vectors must have 3N entries")

    def param_count(self):
        n, m = self.hidden_size, self.input_size
        return 3 * n * (m + n + 2)


@dataclass
class ModelWeights:
    arch: ArchConfig
    gru1: GruWeights
    gru2: GruWeights
    out_kernel: np.ndarray  # (16, N2)
    out_bias: np.ndarray    # (16,)

    def validate(self):
        m1, m2 = self.arch.input_sizes
        self.gru1.validate()
        self.gru2.validate()
        if self.gru1.input_size != m1 or self.gru1.hidden_size != self.arch.hidden1:
            raise WeightValidationError(
                f"layer-1 shapes {self.gru1.input_kernel.shape} do not match the "
                f"{self.arch.variant} arrangement"
            )
        if self.gru2.input_size != m2 or self.gru2.hidden_size != self.arch.hidden2:
            raise WeightValidationError(
                f"layer-2 shapes {self.gru2.input_kernel.shape} do not match the "
                f"{self.arch.variant} arrangement"
            )
        if self.out_kernel.shape != (self.arch.mask_dim, self.arch.hidden2):
            raise WeightValidationError("output kernel must be (16, N2)")
        if self.out_bias.shape != (self.arch.mask_dim,):
            raise WeightValidationError("output bias must have 16 entries")

    def param_count(self):
        return (self.gru1.param_count() + self.gru2.param_count()
                + self.out_kernel.size + self.out_bias.size)


def _sigmoid(x):
    return expit(x)  # overflow-safe, dtype-preserving


def gru_step(x, h, w):
    """One GRU update; returns the new hidden state (float32, length N)."""
    x = np.asarray(x, dtype=np.float32)
    h = np.asarray(h, dtype=np.float32)
    n = w.hidden_size
    if x.shape != (w.input_size,):
        raise ValueError(f"input must have {w.input_size} values, got {x.shape}")
    if h.shape != (n,):
        raise ValueError(f"hidden state must have {n} values, got {h.shape}")
    gi = w.input_kernel @ x + w.input_bias
    gh = w.recurrent_kernel @ h + w.recurrent_bias
    r = _sigmoid(gi[:n] + gh[:n])
    z = _sigmoid(gi[n:2 * n] + gh[n:2 * n])
    cand = np.tanh(gi[2 * n:] + r * gh[2 * n:])
    return (np.float32(1.0) - z) * cand + z * h


@dataclass
class ModelState:
    """Per-stream hidden states and the three-slot context queue."""

    arch: ArchConfig
    h1: np.ndarray = field(default=None)
    h2: np.ndarray = field(default=None)
    context_queue: deque = field(default=None)
    frames_seen: int = 0

    def __post_init__(self):
        if self.h1 is None:
            self.h1 = np.zeros(self.arch.hidden1, dtype=np.float32)
        if self.h2 is None:
            self.h2 = np.zeros(self.arch.hidden2, dtype=np.float32)
        if self.context_queue is None:
            self.context_queue = deque(maxlen=3)
            # the t-1 slot at stream start is a zero vector
            width = self.arch.hidden1 if self.arch.variant == "HC" else FEATURE_DIM
            self.context_queue.append(np.zeros(width, dtype=np.float32))


def push_frame(feat, state, weights):
    """Feed one feature frame; return the mask for the previous hop, if ready.

    Returns None exactly once per stream, on the first frame after a
    reset, while the one-frame lookahead primes.
    """
    values = feat.values if hasattr(feat, "values") else feat
    values = np.asarray(values, dtype=np.float32)
    if values.shape != (FEATURE_DIM,):
        raise ValueError(f"feature frame must have {FEATURE_DIM} values")
    arch = state.arch
    queue = state.context_queue
    state.frames_seen += 1
    if arch.variant == "HC":
        state.h1 = gru_step(values, state.h1, weights.gru1)
        queue.append(state.h1)
        if len(queue) < 3:
            return None
        ctx = np.concatenate(queue)
        state.h2 = gru_step(ctx, state.h2, weights.gru2)
    else:
        queue.append(values)
        if len(queue) < 3:
            return None
        ctx = np.concatenate(queue)
        state.h1 = gru_step(ctx, state.h1, weights.gru1)
        state.h2 = gru_step(state.h1, state.h2, weights.gru2)
    queue.popleft()
    return _sigmoid(weights.out_kernel @ state.h2 + weights.out_bias)


def run_sequence(frames, weights, state=None):
    """Push a whole feature sequence and stack the emitted masks.

    Streaming and batch use share this single code path, so per-frame and
    whole-sequence processing are identical by construction.
    """
    if state is None:
        state = ModelState(arch=weights.arch)
    masks = []
    for frame in np.asarray(frames, dtype=np.float32):
        mask = push_frame(frame, state, weights)
        if mask is not None:
            masks.append(mask)
    return np.asarray(masks, dtype=np.float32)


def random_weights(arch, seed=0, scale=0.2):
    """Small uniform random weights, mainly for tests and benchmarks."""
    rng = np.random.default_rng(seed)
    m1, m2 = arch.input_sizes

    def uni(*shape):
        return rng.uniform(-scale, scale, size=shape).astype(np.float32)

    def gru(m, n):
        return GruWeights(
            input_kernel=uni(3 * n, m),
            recurrent_kernel=uni(3 * n, n),
            input_bias=uni(3 * n),
            recurrent_bias=uni(3 * n),
        )

    w = ModelWeights(
        arch=arch,
        gru1=gru(m1, arch.hidden1),
        gru2=gru(m2, arch.hidden2),
        out_kernel=uni(arch.mask_dim, arch.hidden2),
        out_bias=uni(arch.mask_dim),
    )
    w.validate()
    return w


def _tensors_in_file_order(weights):
    return [
        weights.gru1.input_kernel, weights.gru1.recurrent_kernel,
        weights.gru1.input_bias, weights.gru1.recurrent_bias,
        weights.gru2.input_kernel, weights.gru2.recurrent_kernel,
        weights.gru2.input_bias, weights.gru2.recurrent_bias,
        weights.out_kernel, weights.out_bias,
    ]


def save_weights(weights):
    """Serialize ModelWeights to the HRNN byte format (little-endian)."""
    weights.validate()
    arch = weights.arch
    parts = [_HEADER.pack(
        MAGIC, FORMAT_VERSION, VARIANT_CODES[arch.variant], 0,
        arch.feature_dim, arch.hidden1, arch.hidden2, arch.mask_dim,
    )]
    for tensor in _tensors_in_file_order(weights):
        parts.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def load_weights(data):
    """Parse HRNN weight bytes into validated ModelWeights."""
    if len(data) < _HEADER.size + 4:
        raise WeightTruncationError("file shorter than the fixed header")
    magic, version, variant_code, _reserved, feat, n1, n2, mask = \
        _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise WeightFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise WeightFormatError(f"unsupported format version {version}")
    if variant_code not in VARIANT_NAMES:
        raise WeightFormatError(f"unknown variant code {variant_code}")
    try:
        arch = ArchConfig(variant=VARIANT_NAMES[variant_code],
                          hidden1=n1, hidden2=n2,
                          feature_dim=feat, mask_dim=mask)
    except ValueError as exc:
        raise WeightValidationError(str(exc)) from exc

    m1, m2 = arch.input_sizes
    shapes = [
        (3 * n1, m1), (3 * n1, n1), (3 * n1,), (3 * n1,),
        (3 * n2, m2), (3 * n2, n2), (3 * n2,), (3 * n2,),
        (mask, n2), (mask,),
    ]
    offset = _HEADER.size
    tensors = []
    for shape in shapes:
        count = int(np.prod(shape))
        end = offset + 4 * count
        if end > len(data) - 4:
            raise WeightTruncationError(
                f"tensor of shape {shape} at offset {offset} is cut short"
            )
        flat = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
        tensors.append(flat.reshape(shape).astype(np.float32))
        offset = end
    if len(data) != offset + 4:
        raise WeightValidationError(
            f"{len(data) - offset - 4} unexpected trailing bytes before checksum"
        )
    (stored_crc,) = struct.unpack_from("<I", data, offset)
    if stored_crc != zlib.crc32(data[:offset]):
        raise WeightFormatError("CRC-32 mismatch, file corrupted")

    weights = ModelWeights(
        arch=arch,
        gru1=GruWeights(*tensors[0:4]),
        gru2=GruWeights(*tensors[4:8]),
        out_kernel=tensors[8],
        out_bias=tensors[9],
    )
    weights.validate()

    from .complexity import param_count
    expected = param_count(arch).total
    actual = weights.param_count()
    if actual != expected:
        raise WeightValidationError(
            f"parameter count {actual} does not match architecture ({expected})"
        )
    return weights


def read_weights_file(path):
    with open(path, "rb") as fh:
        return load_weights(fh.read())


def write_weights_file(path, weights):
    with open(path, "wb") as fh:
        fh.write(save_weights(weights))
