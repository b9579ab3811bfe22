import math
import struct

import numpy as np
import pytest

from hrnnoise.complexity import param_count
from hrnnoise.model import (ArchConfig, GruWeights, ModelState, ModelWeights,
                            WeightFormatError, WeightTruncationError,
                            WeightValidationError, gru_step, load_weights,
                            push_frame, random_weights, run_sequence,
                            save_weights)

HC16 = ArchConfig("HC", 16, 16)
C16 = ArchConfig("C", 16, 16)


def scalar_gru_oracle(x, h, w):
    """Independent scalar-loop evaluation of the two-bias GRU update."""
    n = len(h)
    h_new = [0.0] * n
    for i in range(n):
        gi_r = sum(float(w.input_kernel[i, j]) * float(x[j]) for j in range(len(x)))
        gi_z = sum(float(w.input_kernel[n + i, j]) * float(x[j]) for j in range(len(x)))
        gi_c = sum(float(w.input_kernel[2 * n + i, j]) * float(x[j]) for j in range(len(x)))
        gh_r = sum(float(w.recurrent_kernel[i, j]) * float(h[j]) for j in range(n))
        gh_z = sum(float(w.recurrent_kernel[n + i, j]) * float(h[j]) for j in range(n))
        gh_c = sum(float(w.recurrent_kernel[2 * n + i, j]) * float(h[j]) for j in range(n))
        r = 1.0 / (1.0 + math.exp(-(gi_r + float(w.input_bias[i])
                                    + gh_r + float(w.recurrent_bias[i]))))
        z = 1.0 / (1.0 + math.exp(-(gi_z + float(w.input_bias[n + i])
                                    + gh_z + float(w.recurrent_bias[n + i]))))
        c = math.tanh(gi_c + float(w.input_bias[2 * n + i])
                      + r * (gh_c + float(w.recurrent_bias[2 * n + i])))
        h_new[i] = (1.0 - z) * c + z * float(h[i])
    return np.asarray(h_new)


def zero_gru(m, n):
    return GruWeights(
        input_kernel=np.zeros((3 * n, m), dtype=np.float32),
        recurrent_kernel=np.zeros((3 * n, n), dtype=np.float32),
        input_bias=np.zeros(3 * n, dtype=np.float32),
        recurrent_bias=np.zeros(3 * n, dtype=np.float32),
    )


def zero_weights(arch):
    m1, m2 = arch.input_sizes
    return ModelWeights(
        arch=arch,
        gru1=zero_gru(m1, arch.hidden1),
        gru2=zero_gru(m2, arch.hidden2),
        out_kernel=np.zeros((16, arch.hidden2), dtype=np.float32),
        out_bias=np.zeros(16, dtype=np.float32),
    )


def test_arch_input_sizes():
    assert HC16.input_sizes == (16, 48)
    assert C16.input_sizes == (48, 16)
    assert ArchConfig("HC", 24, 24).input_sizes == (16, 72)


def test_arch_validation():
    with pytest.raises(ValueError):
        ArchConfig("X", 16, 16)
    with pytest.raises(ValueError):
        ArchConfig("HC", 0, 16)
    with pytest.raises(ValueError):
        ArchConfig("HC", 16, 16, feature_dim=32)


def test_gru_zero_weights_keeps_zero_state():
    w = zero_gru(4, 3)
    x = np.array([1.0, -2.0, 0.5, 3.0], dtype=np.float32)
    h = np.zeros(3, dtype=np.float32)
    # z = 0.5 and candidate = 0, so the state stays exactly zero
    np.testing.assert_array_equal(gru_step(x, h, w), np.zeros(3, dtype=np.float32))


def test_gru_saturated_update_gate_carries_state():
    w = zero_gru(4, 3)
    w.input_bias[3:6] = 100.0  # update-gate block saturates to 1
    x = np.array([0.3, -0.7, 0.2, 0.9], dtype=np.float32)
    h = np.array([0.1, -0.5, 0.8], dtype=np.float32)
    np.testing.assert_allclose(gru_step(x, h, w), h, atol=1e-7)


def test_gru_matches_scalar_oracle_small():
    rng = np.random.default_rng(42)
    w = GruWeights(
        input_kernel=rng.normal(0, 0.7, (6, 2)).astype(np.float32),
        recurrent_kernel=rng.normal(0, 0.7, (6, 2)).astype(np.float32),
        input_bias=rng.normal(0, 0.7, 6).astype(np.float32),
        recurrent_bias=rng.normal(0, 0.7, 6).astype(np.float32),
    )
    x = rng.normal(0, 1, 2).astype(np.float32)
    h = rng.normal(0, 1, 2).astype(np.float32)
    np.testing.assert_allclose(gru_step(x, h, w), scalar_gru_oracle(x, h, w),
                               rtol=1e-6, atol=1e-7)


@pytest.mark.parametrize("m,n", [(1, 1), (3, 2), (5, 8), (8, 8), (8, 4)])
def test_gru_matches_scalar_oracle_random_sizes(m, n):
    rng = np.random.default_rng(m * 100 + n)
    for _ in range(5):
        w = GruWeights(
            input_kernel=rng.normal(0, 0.5, (3 * n, m)).astype(np.float32),
            recurrent_kernel=rng.normal(0, 0.5, (3 * n, n)).astype(np.float32),
            input_bias=rng.normal(0, 0.5, 3 * n).astype(np.float32),
            recurrent_bias=rng.normal(0, 0.5, 3 * n).astype(np.float32),
        )
        x = rng.normal(0, 1, m).astype(np.float32)
        h = rng.normal(0, 1, n).astype(np.float32)
        np.testing.assert_allclose(gru_step(x, h, w), scalar_gru_oracle(x, h, w),
                                   rtol=1e-6, atol=1e-7)


def test_gru_shape_checks():
    w = zero_gru(4, 3)
    with pytest.raises(ValueError):
        gru_step(np.zeros(5, dtype=np.float32), np.zeros(3, dtype=np.float32), w)
    with pytest.raises(ValueError):
        gru_step(np.zeros(4, dtype=np.float32), np.zeros(2, dtype=np.float32), w)


@pytest.mark.parametrize("arch", [HC16, C16])
def test_first_push_primes_without_mask(arch):
    w = random_weights(arch, seed=0)
    state = ModelState(arch=arch)
    assert push_frame(np.zeros(16, dtype=np.float32), state, w) is None
    assert push_frame(np.zeros(16, dtype=np.float32), state, w) is not None


@pytest.mark.parametrize("arch", [HC16, C16])
def test_zero_weights_give_half_masks(arch):
    w = zero_weights(arch)
    state = ModelState(arch=arch)
    rng = np.random.default_rng(1)
    masks = [push_frame(rng.normal(0, 1, 16).astype(np.float32), state, w)
             for _ in range(10)]
    for mask in masks[1:]:
        np.testing.assert_array_equal(mask, np.full(16, 0.5, dtype=np.float32))


@pytest.mark.parametrize("arch", [HC16, C16])
def test_masks_lie_in_open_unit_interval(arch):
    w = random_weights(arch, seed=2, scale=2.0)
    rng = np.random.default_rng(3)
    frames = rng.normal(0, 3, (100, 16)).astype(np.float32)
    masks = run_sequence(frames, w)
    assert masks.shape == (99, 16)
    assert np.all(masks > 0.0)
    assert np.all(masks < 1.0)


@pytest.mark.parametrize("arch", [HC16, C16])
def test_causality_one_frame_lookahead(arch):
    # the mask for hop t must not change when any frame at hop >= t+2 does
    rng = np.random.default_rng(4)
    w = random_weights(arch, seed=5)
    frames = rng.normal(0, 1, (40, 16)).astype(np.float32)
    base = run_sequence(frames, w)
    t = 20
    perturbed = frames.copy()
    perturbed[t + 2:] += rng.normal(0, 5, perturbed[t + 2:].shape).astype(np.float32)
    out = run_sequence(perturbed, w)
    np.testing.assert_array_equal(base[:t + 1], out[:t + 1])
    assert not np.array_equal(base[t + 2:], out[t + 2:])


@pytest.mark.parametrize("arch", [HC16, C16])
def test_streaming_equals_sequence_pass(arch):
    rng = np.random.default_rng(6)
    w = random_weights(arch, seed=7)
    frames = rng.normal(0, 1, (50, 16)).astype(np.float32)
    batch = run_sequence(frames, w)
    state = ModelState(arch=arch)
    streamed = []
    for frame in frames:
        mask = push_frame(frame, state, w)
        if mask is not None:
            streamed.append(mask)
    np.testing.assert_array_equal(batch, np.asarray(streamed))


def test_context_queue_stays_bounded():
    w = random_weights(HC16, seed=8)
    state = ModelState(arch=HC16)
    for _ in range(50):
        push_frame(np.zeros(16, dtype=np.float32), state, w)
        assert len(state.context_queue) <= 3
    assert state.frames_seen == 50


def test_weight_roundtrip_bit_exact():
    for arch in (HC16, C16, ArchConfig("HC", 24, 24)):
        w = random_weights(arch, seed=9)
        loaded = load_weights(save_weights(w))
        assert loaded.arch == arch
        np.testing.assert_array_equal(loaded.gru1.input_kernel, w.gru1.input_kernel)
        np.testing.assert_array_equal(loaded.gru1.recurrent_bias, w.gru1.recurrent_bias)
        np.testing.assert_array_equal(loaded.gru2.recurrent_kernel, w.gru2.recurrent_kernel)
        np.testing.assert_array_equal(loaded.out_kernel, w.out_kernel)
        np.testing.assert_array_equal(loaded.out_bias, w.out_bias)


def test_weight_file_float_count_matches_param_count():
    header, crc = 24, 4
    for arch in (HC16, C16, ArchConfig("C", 32, 32)):
        blob = save_weights(random_weights(arch, seed=10))
        assert (len(blob) - header - crc) // 4 == param_count(arch).total


def test_hc16_file_declares_5072_params():
    w = load_weights(save_weights(random_weights(HC16, seed=11)))
    assert w.param_count() == 5072


def test_bad_magic_rejected():
    blob = bytearray(save_weights(random_weights(HC16, seed=12)))
    blob[:4] = b"NNRH"
    with pytest.raises(WeightFormatError):
        load_weights(bytes(blob))


def test_bad_version_rejected():
    blob = bytearray(save_weights(random_weights(HC16, seed=13)))
    blob[4:6] = struct.pack("<H", 2)
    with pytest.raises(WeightFormatError):
        load_weights(bytes(blob))


def test_truncated_out_bias_is_validation_error_not_crash():
    blob = save_weights(random_weights(HC16, seed=14))
    cut = blob[:len(blob) - 4 - 16 * 2]  # half the output bias and the CRC gone
    with pytest.raises(WeightTruncationError):
        load_weights(cut)


def test_crc_corruption_detected():
    blob = bytearray(save_weights(random_weights(HC16, seed=15)))
    blob[100] ^= 0xFF
    with pytest.raises(WeightFormatError, match="CRC"):
        load_weights(bytes(blob))


def test_trailing_garbage_rejected():
    blob = save_weights(random_weights(HC16, seed=16))
    with pytest.raises(WeightValidationError):
        load_weights(blob[:-4] + b"\x00" * 8 + blob[-4:])


def test_weight_validation_catches_shape_mismatch():
    w = random_weights(HC16, seed=17)
    w.out_kernel = np.zeros((16, 8), dtype=np.float32)
    with pytest.raises(WeightValidationError):
        w.validate()
