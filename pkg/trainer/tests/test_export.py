import numpy as np
import torch

import hrnnoise
from hrnn_trainer.export import export_weights, write_weights_file
from hrnn_trainer.network import MaskNet


def test_export_roundtrips_bit_exact_through_engine_loader():
    torch.manual_seed(210)
    net = MaskNet("HC", 16, 16)
    loaded = hrnnoise.load_weights(export_weights(net))
    pairs = [
        (net.gru1.weight_ih_l0, loaded.gru1.input_kernel),
        (net.gru1.weight_hh_l0, loaded.gru1.recurrent_kernel),
        (net.gru1.bias_ih_l0, loaded.gru1.input_bias),
        (net.gru1.bias_hh_l0, loaded.gru1.recurrent_bias),
        (net.gru2.weight_ih_l0, loaded.gru2.input_kernel),
        (net.gru2.weight_hh_l0, loaded.gru2.recurrent_kernel),
        (net.gru2.bias_ih_l0, loaded.gru2.input_bias),
        (net.gru2.bias_hh_l0, loaded.gru2.recurrent_bias),
        (net.out.weight, loaded.out_kernel),
        (net.out.bias, loaded.out_bias),
    ]
    for tensor, array in pairs:
        np.testing.assert_array_equal(tensor.detach().numpy(), array)


def test_export_parameter_count_matches_engine_accounting():
    for variant, n in [("HC", 16), ("HC", 24), ("C", 16), ("C", 32)]:
        net = MaskNet(variant, n, n)
        loaded = hrnnoise.load_weights(export_weights(net))
        expected = hrnnoise.param_count(loaded.arch).total
        assert net.parameter_count() == expected
        assert loaded.param_count() == expected


def test_variant_flag_survives_export():
    net = MaskNet("C", 16, 16)
    loaded = hrnnoise.load_weights(export_weights(net))
    assert loaded.arch.variant == "C"
    assert loaded.arch.input_sizes == (48, 16)


def test_write_weights_file_is_loadable_and_complete(tmp_path):
    net = MaskNet("HC", 16, 16)
    path = tmp_path / "model.hrnn"
    n_bytes = write_weights_file(path, net)
    assert path.stat().st_size == n_bytes
    loaded = hrnnoise.read_weights_file(path)
    assert loaded.arch.hidden1 == 16
    leftovers = [p for p in tmp_path.iterdir() if p.suffix == ".tmp"]
    assert leftovers == []
