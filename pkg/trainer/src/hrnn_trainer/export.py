"""HRNN weight-file writer (the engine's on-disk interchange format).

Layout, little-endian: magic "HRNN", u16 version 1, u8 variant (0 HC,
1 C), u8 reserved, u32 feature_dim/hidden1/hidden2/mask_dim, then float32
tensors gate-blocked (reset, update, candidate) in the order input kernel,
recurrent kernel, input bias, recurrent bias for each GRU layer, output
kernel and bias, and a trailing CRC-32 of everything before it.
"""

import os
import struct
import tempfile
import zlib

import numpy as np

MAGIC = b"HRNN"
FORMAT_VERSION = 1
VARIANT_CODES = {"HC": 0, "C": 1}
_HEADER = struct.Struct("<4sHBBIIII")


def _tensor_bytes(tensor):
    return np.ascontiguousarray(
        tensor.detach().cpu().numpy(), dtype="<f4"
    ).tobytes()


def export_weights(net) -> bytes:
    """Serialize a MaskNet's parameters to HRNN bytes."""
    parts = [_HEADER.pack(
        MAGIC, FORMAT_VERSION, VARIANT_CODES[net.variant], 0,
        16, net.hidden1, net.hidden2, 16,
    )]
    for gru in (net.gru1, net.gru2):
        parts.append(_tensor_bytes(gru.weight_ih_l0))
        parts.append(_tensor_bytes(gru.weight_hh_l0))
        parts.append(_tensor_bytes(gru.bias_ih_l0))
        parts.append(_tensor_bytes(gru.bias_hh_l0))
    parts.append(_tensor_bytes(net.out.weight))
    parts.append(_tensor_bytes(net.out.bias))
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def write_weights_file(path, net):
    """Atomic write: the file is either the complete export or absent."""
    blob = export_weights(net)
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".hrnn.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    return len(blob)
