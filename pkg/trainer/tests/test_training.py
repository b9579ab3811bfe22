import json
import sys

import numpy as np
import pytest

from hrnn_trainer.train import TrainConfig, train

# the package re-exports the train() function under the submodule's name,
# so fetch the module object itself for monkeypatching
train_mod = sys.modules["hrnn_trainer.train"]


def test_config_defaults_match_protocol():
    cfg = TrainConfig()
    assert cfg.batch_size == 20
    assert cfg.learning_rate == 0.001
    assert cfg.min_seq_s == 5.0
    assert cfg.ma_weight == 0.5
    assert cfg.snr_grid == (-5.0, 0.0, 5.0, 10.0, 20.0)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(loss="L1")
    with pytest.raises(ValueError):
        TrainConfig(ma_weight=2.0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(crops_per_clip=0)


def test_seed_fixed_run_reproduces_loss_curve(corpus_manifest):
    cfg = TrainConfig(loss="MSA", epochs=3, seed=7)
    _, log_a = train(corpus_manifest, cfg)
    _, log_b = train(corpus_manifest, cfg)
    for ea, eb in zip(log_a["history"], log_b["history"]):
        assert ea["train_loss"] == pytest.approx(eb["train_loss"], abs=1e-6)
        assert ea["dev_loss"] == pytest.approx(eb["dev_loss"], abs=1e-6)


def test_different_seeds_differ(corpus_manifest):
    cfg_a = TrainConfig(loss="MSA", epochs=2, seed=1)
    cfg_b = TrainConfig(loss="MSA", epochs=2, seed=2)
    _, log_a = train(corpus_manifest, cfg_a)
    _, log_b = train(corpus_manifest, cfg_b)
    assert log_a["history"][0]["train_loss"] != log_b["history"][0]["train_loss"]


def test_ma_and_combined_losses_train(corpus_manifest):
    for loss in ("MA", "MA_MSA"):
        cfg = TrainConfig(loss=loss, epochs=2, seed=3)
        _, log = train(corpus_manifest, cfg)
        assert len(log["history"]) == 2
        assert np.isfinite(log["history"][-1]["dev_loss"])


def test_nan_loss_aborts_with_diagnostics(corpus_manifest, monkeypatch):
    import torch
    real = train_mod._batch_loss

    def poisoned(net, batch, config):
        return real(net, batch, config) * torch.tensor(float("nan"))

    monkeypatch.setattr(train_mod, "_batch_loss", poisoned)
    with pytest.raises(RuntimeError, match="non-finite"):
        train(corpus_manifest, TrainConfig(epochs=1, seed=4))


def test_empty_dataset_rejected(tmp_path):
    manifest = tmp_path / "empty.csv"
    manifest.write_text("path,kind,split\n")
    with pytest.raises(ValueError):
        train(manifest, TrainConfig(epochs=1))


def test_training_writes_log_and_weights(corpus_manifest, tmp_path):
    weights_path = tmp_path / "model.hrnn"
    log_path = tmp_path / "log.json"
    cfg = TrainConfig(loss="MSA", epochs=2, seed=5)
    _, log = train(corpus_manifest, cfg, weights_path=weights_path,
                   log_path=log_path)
    assert weights_path.exists()
    on_disk = json.loads(log_path.read_text())
    assert on_disk["best"] == log["best"]
    assert on_disk["config"]["loss"] == "MSA"
    assert len(on_disk["history"]) == 2
    assert on_disk["parameters"] == 5072


def test_cli_trains_and_reports(corpus_manifest, tmp_path, capsys):
    from hrnn_trainer.train import main
    out = tmp_path / "cli.hrnn"
    code = main(["--manifest", str(corpus_manifest), "--output", str(out),
                 "--epochs", "1", "--seed", "6"])
    assert code == 0
    assert out.exists()
    stdout = capsys.readouterr().out
    assert "parameters=5072" in stdout
    assert "best_dev_loss=" in stdout


def test_cli_reports_errors_one_line(tmp_path, capsys):
    from hrnn_trainer.train import main
    missing = tmp_path / "nope.csv"
    code = main(["--manifest", str(missing), "--output", str(tmp_path / "w.hrnn")])
    assert code == 1
    err = capsys.readouterr().err
    assert err.startswith("error:") and err.count("\n") == 1
