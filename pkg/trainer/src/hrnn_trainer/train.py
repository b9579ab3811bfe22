"""Training loop: Adam on MA/MSA/combined losses, best-dev export."""

import argparse
import copy
import json
import math
import sys
from dataclasses import asdict, dataclass

import numpy as np
import torch

from .data import assemble_split, load_manifest
from .export import write_weights_file
from .losses import loss_combined, loss_ma, loss_msa
from .network import MaskNet

SAMPLE_RATE = 24000

LOSSES = ("MA", "MSA", "MA_MSA")


@dataclass
class TrainConfig:
    loss: str = "MSA"
    ma_weight: float = 0.5
    variant: str = "HC"
    hidden1: int = 16
    hidden2: int = 16
    batch_size: int = 20
    learning_rate: float = 0.001
    min_seq_s: float = 5.0
    snr_grid: tuple = (-5.0, 0.0, 5.0, 10.0, 20.0)
    epochs: int = 50
    seed: int = 0
    tau_s: float = 1.0
    crops_per_clip: int = 1  # training crops drawn per speech clip and epoch

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")
        if not 0.0 <= self.ma_weight <= 1.0:
            raise ValueError("ma_weight must lie in [0, 1]")
        if self.min_seq_s <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("min_seq_s, batch_size and epochs must be positive")
        if self.crops_per_clip < 1:
            raise ValueError("crops_per_clip must be at least 1")


def _to_batch(examples, device):
    hops = min(e.features.shape[0] for e in examples)
    feats = torch.stack([torch.from_numpy(e.features[:hops]) for e in examples])
    target = torch.stack([torch.from_numpy(e.target[:hops]) for e in examples])
    noisy = torch.stack([torch.from_numpy(e.noisy_mag[:hops]) for e in examples])
    clean = torch.stack([torch.from_numpy(e.clean_mag[:hops]) for e in examples])
    return (feats.to(device), target.to(device), noisy.to(device), clean.to(device))


def _batch_loss(net, batch, config):
    feats, target, noisy, clean = batch
    masks = net(feats)                      # (B, T-1, 16) for hops 0..T-2
    t = masks.shape[1]
    if config.loss == "MA":
        total = loss_ma(masks, target[:, :t])
    elif config.loss == "MSA":
        total = loss_msa(masks, noisy[:, :t], clean[:, :t])
    else:
        total = loss_combined(masks, target[:, :t], noisy[:, :t], clean[:, :t],
                              ma_weight=config.ma_weight)
    return total / feats.shape[0]           # sum per sequence, mean over batch


def train(manifest_path, config: TrainConfig, weights_path=None, log_path=None,
          device="cpu", progress=None):
    """Optimize the configured loss; return (net, log dict).

    Training mixes are redrawn every epoch; the dev mixes are fixed, and
    the parameters of the best dev epoch are kept and exported.
    """
    manifest = load_manifest(manifest_path)
    torch.manual_seed(config.seed)
    # single-threaded CPU math is both fastest at this model size and
    # bitwise reproducible for the seed-determinism guarantee
    torch.set_num_threads(1)
    net = MaskNet(config.variant, config.hidden1, config.hidden2).to(device)
    optimizer = torch.optim.Adam(net.parameters(), lr=config.learning_rate)
    seq_samples = int(config.min_seq_s * SAMPLE_RATE)

    dev_rng = np.random.default_rng((config.seed, 0xDEE))
    dev_examples = assemble_split(manifest, "dev", seq_samples,
                                  config.snr_grid, dev_rng, tau_s=config.tau_s)
    dev_batch = _to_batch(dev_examples, device)

    def dev_loss():
        net.eval()
        with torch.no_grad():
            value = float(_batch_loss(net, dev_batch, config))
        net.train()
        return value

    history = []
    best = {"epoch": -1, "dev_loss": math.inf}
    best_state = copy.deepcopy(net.state_dict())
    initial_dev = dev_loss()

    for epoch in range(config.epochs):
        rng = np.random.default_rng((config.seed, epoch))
        examples = assemble_split(manifest, "train", seq_samples,
                                  config.snr_grid, rng, tau_s=config.tau_s,
                                  crops_per_clip=config.crops_per_clip)
        order = rng.permutation(len(examples))
        epoch_losses = []
        for start in range(0, len(order), config.batch_size):
            chunk = [examples[i] for i in order[start:start + config.batch_size]]
            batch = _to_batch(chunk, device)
            optimizer.zero_grad()
            loss = _batch_loss(net, batch, config)
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss {float(loss.detach())} at epoch {epoch}, "
                    f"batch {start // config.batch_size}; aborting"
                )
            loss.backward()
            optimizer.step()
            epoch_losses.append(float(loss.detach()))
        entry = {
            "epoch": epoch,
            "train_loss": float(np.mean(epoch_losses)),
            "dev_loss": dev_loss(),
        }
        history.append(entry)
        if entry["dev_loss"] < best["dev_loss"]:
            best = {"epoch": epoch, "dev_loss": entry["dev_loss"]}
            best_state = copy.deepcopy(net.state_dict())
        if progress is not None:
            progress(entry)

    net.load_state_dict(best_state)
    log = {
        "config": asdict(config),
        "initial_dev_loss": initial_dev,
        "history": history,
        "best": best,
        "parameters": net.parameter_count(),
    }
    if weights_path is not None:
        write_weights_file(weights_path, net)
        log["weights_file"] = str(weights_path)
    if log_path is not None:
        with open(log_path, "w") as fh:
            json.dump(log, fh, indent=2)
    return net, log


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hrnnoise-train",
        description="Train the band-mask predictor and export HRNN weights",
    )
    parser.add_argument("--manifest", required=True,
                        help="CSV with columns path, kind, split")
    parser.add_argument("--output", required=True, help="HRNN weight file to write")
    parser.add_argument("--log", default=None, help="JSON training log path")
    parser.add_argument("--loss", choices=LOSSES, default="MSA")
    parser.add_argument("--ma-weight", type=float, default=0.5)
    parser.add_argument("--variant", choices=["HC", "C"], default="HC")
    parser.add_argument("--hidden1", type=int, default=16)
    parser.add_argument("--hidden2", type=int, default=None)
    parser.add_argument("--batch-size", type=int, default=20)
    parser.add_argument("--lr", type=float, default=0.001)
    parser.add_argument("--min-seq", type=float, default=5.0,
                        help="sequence length in seconds")
    parser.add_argument("--snr-grid", default="-5,0,5,10,20",
                        help="comma-separated mixing SNRs in dB")
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tau", type=float, default=1.0)
    parser.add_argument("--crops", type=int, default=1,
                        help="training crops per speech clip and epoch")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    config = TrainConfig(
        loss=args.loss,
        ma_weight=args.ma_weight,
        variant=args.variant,
        hidden1=args.hidden1,
        hidden2=args.hidden2 if args.hidden2 is not None else args.hidden1,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        min_seq_s=args.min_seq,
        snr_grid=tuple(float(s) for s in args.snr_grid.split(",")),
        epochs=args.epochs,
        seed=args.seed,
        tau_s=args.tau,
        crops_per_clip=args.crops,
    )
    try:
        _, log = train(
            args.manifest, config, weights_path=args.output, log_path=args.log,
            progress=lambda e: print(
                f"epoch {e['epoch']:3d}  train {e['train_loss']:.4f}  "
                f"dev {e['dev_loss']:.4f}", file=sys.stderr,
            ),
        )
    except Exception as exc:  # noqa: BLE001 - single-line contract
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"best_epoch={log['best']['epoch']}")
    print(f"best_dev_loss={log['best']['dev_loss']:.6g}")
    print(f"parameters={log['parameters']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
