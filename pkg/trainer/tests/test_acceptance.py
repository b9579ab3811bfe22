"""Secondary acceptance gate: gradient checks, desk-scale learning, parity.

Run with `pytest tests/test_acceptance.py -s` to see one line per criterion.
The learning criterion trains for a few minutes by design.
"""

import numpy as np
import pytest
import torch

import hrnnoise
from hrnn_trainer.data import load_manifest, mix_at_snr, read_wav
from hrnn_trainer.export import export_weights
from hrnn_trainer.losses import loss_combined, loss_ma, loss_msa
from hrnn_trainer.network import MaskNet
from hrnn_trainer.pipeline import features_from_signal
from hrnn_trainer.train import TrainConfig, train

from synth import noise_clip, speech_like

HOP = 24


def report(name, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'}  {name}"
    if detail:
        line += f"  [{detail}]"
    print(line)
    assert ok, line


def central_differences(fn, pred, h=1e-6):
    grad = torch.zeros_like(pred)
    flat = pred.reshape(-1)
    for i in range(flat.numel()):
        orig = float(flat[i])
        flat[i] = orig + h
        up = float(fn(pred))
        flat[i] = orig - h
        down = float(fn(pred))
        flat[i] = orig
        grad.reshape(-1)[i] = (up - down) / (2 * h)
    return grad


def test_criterion_gradient_checks():
    g = torch.Generator().manual_seed(500)
    pred = torch.rand(4, 16, generator=g, dtype=torch.double) * 0.8 + 0.1
    target = torch.rand(4, 16, generator=g, dtype=torch.double)
    noisy = torch.rand(4, 48, generator=g, dtype=torch.double) + 0.2
    clean = torch.rand(4, 48, generator=g, dtype=torch.double)

    cases = {
        "MA": lambda p: loss_ma(p, target),
        "MSA": lambda p: loss_msa(p, noisy, clean),
        "combined_0": lambda p: loss_combined(p, target, noisy, clean, ma_weight=0.0),
        "combined_05": lambda p: loss_combined(p, target, noisy, clean, ma_weight=0.5),
        "combined_1": lambda p: loss_combined(p, target, noisy, clean, ma_weight=1.0),
    }
    worst = 0.0
    for fn in cases.values():
        leaf = pred.clone().requires_grad_(True)
        fn(leaf).backward()
        numeric = central_differences(fn, pred.clone())
        rel = float((leaf.grad - numeric).abs().max()
                    / numeric.abs().max().clamp(min=1e-12))
        worst = max(worst, rel)
    report("gradients match central finite differences within 1e-4 relative",
           worst < 1e-4, f"worst relative deviation {worst:.2e} over {len(cases)} losses")


@pytest.fixture(scope="module")
def desk_scale_run(corpus_manifest, tmp_path_factory):
    tmp = tmp_path_factory.mktemp("desk")
    weights_path = tmp / "desk.hrnn"
    config = TrainConfig(loss="MSA", epochs=70, seed=0, crops_per_clip=2)
    net, log = train(corpus_manifest, config, weights_path=weights_path,
                     log_path=tmp / "desk.json")
    return net, log, weights_path


def test_criterion_desk_scale_learning(corpus_manifest, desk_scale_run):
    _, log, weights_path = desk_scale_run
    initial = log["initial_dev_loss"]
    best = log["best"]["dev_loss"]
    drop = 1.0 - best / initial
    dev_curve = [e["dev_loss"] for e in log["history"]]
    # monotone trend, local fluctuation allowed: late mean below early mean
    trend_ok = np.mean(dev_curve[-10:]) < np.mean(dev_curve[:10])

    manifest = load_manifest(corpus_manifest)
    clean = read_wav(manifest.clips("speech", "test")[0])
    noise = read_wav(manifest.clips("noise", "test")[0])
    n = min(len(clean), len(noise))
    clean, scaled = mix_at_snr(clean[:n], noise[:n], 0.0)
    noisy = clean + scaled
    weights = hrnnoise.read_weights_file(weights_path)
    out = hrnnoise.enhance_stream(hrnnoise.Engine(weights), noisy)
    delay = hrnnoise.latency_report().total_samples()
    sdr_in = hrnnoise.si_sdr(noisy, clean)
    sdr_out = hrnnoise.si_sdr(out, clean, delay=delay)

    ok = drop >= 0.30 and trend_ok and sdr_out > sdr_in
    report("desk-scale learning: dev loss -30% and SI-SDR gain in the engine",
           ok, f"dev {initial:.0f} -> {best:.0f} ({100 * drop:.1f}%), held-out "
               f"SI-SDR {sdr_in:.2f} -> {sdr_out:.2f} dB")


def test_criterion_pipeline_parity_and_export(tmp_path):
    x = speech_like(2.0, seed=501) + 0.3 * noise_clip(2.0, seed=502)
    wav_path = tmp_path / "shared.wav"
    hrnnoise.write_wav(wav_path, x)
    signal = read_wav(wav_path)
    offline = features_from_signal(signal)

    analysis = hrnnoise.FbankState()
    norm = hrnnoise.NormalizerState(alpha=hrnnoise.alpha_from_tau(1.0, 0.001))
    streaming = []
    for k in range(len(signal) // HOP):
        spec = hrnnoise.analyze(signal[k * HOP:(k + 1) * HOP], analysis)
        streaming.append(hrnnoise.bark_compress(
            hrnnoise.normalize(hrnnoise.to_db(spec.power()), norm)))
    gap = float(np.max(np.abs(offline - np.asarray(streaming))))

    torch.manual_seed(503)
    net = MaskNet("HC", 16, 16)
    loaded = hrnnoise.load_weights(export_weights(net))
    exact = all(
        np.array_equal(t.detach().numpy(), a) for t, a in [
            (net.gru1.weight_ih_l0, loaded.gru1.input_kernel),
            (net.gru2.weight_hh_l0, loaded.gru2.recurrent_kernel),
            (net.out.weight, loaded.out_kernel),
            (net.out.bias, loaded.out_bias),
        ]
    )
    report("pipeline parity within 1e-5 and bit-exact weight interchange",
           gap < 1e-5 and exact, f"max feature gap {gap:.2e}")
