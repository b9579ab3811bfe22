"""Command-line surface: enhance, evaluate, mix, bench, inspect.

Every command exits 0 on success and nonzero with a single
"error: <Type>: <message>" line on stderr otherwise. CSV output keeps the
input file order. HRNN_THREADS caps evaluation parallelism.
"""

import argparse
import csv
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import complexity, metrics
from .audio import SAMPLE_RATE, read_wav, write_wav
from .engine import Engine, EngineConfig, enhance_stream, latency_report
from .model import ArchConfig, random_weights, read_weights_file


def mix_signals(clean, noise, snr_db):
    """Scale noise against clean to a full-signal RMS SNR and add them.

    Noise shorter than the clean signal is tiled end to end (the wrap is
    seamless in the sense that no sample is dropped or faded). A silent
    clean signal has no defined SNR and is rejected.
    """
    clean = np.asarray(clean, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    p_clean = float(np.mean(clean ** 2))
    if p_clean == 0.0:
        raise ValueError("clean signal is silent, SNR is undefined")
    if len(noise) == 0 or not np.any(noise):
        raise ValueError("noise signal is silent or empty")
    if len(noise) < len(clean):
        reps = math.ceil(len(clean) / len(noise))
        noise = np.tile(noise, reps)
    noise = noise[:len(clean)]
    p_noise = float(np.mean(noise ** 2))
    scale = math.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0)))
    return (clean + scale * noise).astype(np.float32)


def bench_run(weights, seconds, seed=0):
    """Process synthetic noise and time every hop; returns timing stats."""
    rng = np.random.default_rng(seed)
    hop = 24
    n_hops = int(seconds * SAMPLE_RATE) // hop
    audio = rng.uniform(-0.5, 0.5, size=n_hops * hop).astype(np.float32)
    engine = Engine(weights)
    laps = np.empty(n_hops)
    start = time.perf_counter()
    for k in range(n_hops):
        t0 = time.perf_counter()
        engine.process_hop(audio[k * hop:(k + 1) * hop])
        laps[k] = time.perf_counter() - t0
    elapsed = time.perf_counter() - start
    return {
        "hops": n_hops,
        "audio_seconds": n_hops * hop / SAMPLE_RATE,
        "wall_seconds": elapsed,
        "real_time_factor": elapsed / (n_hops * hop / SAMPLE_RATE),
        "p50_ms": float(np.percentile(laps, 50) * 1000.0),
        "p99_ms": float(np.percentile(laps, 99) * 1000.0),
    }


def _engine_config(args, arch):
    return EngineConfig(
        arch=arch,
        variance_norm=args.variance_norm,
        tau_s=args.tau,
        gain_floor_db=args.gain_floor,
    )


def _cmd_enhance(args):
    weights = read_weights_file(args.model)
    x = read_wav(args.input)
    engine = Engine(weights, _engine_config(args, weights.arch))
    write_wav(args.output, enhance_stream(engine, x))
    return 0


def _wav_list(path):
    p = Path(path)
    if p.is_dir():
        files = sorted(q for q in p.iterdir() if q.suffix.lower() == ".wav")
        if not files:
            raise ValueError(f"{path}: no .wav files found")
        return files
    return [p]


def _cmd_evaluate(args):
    clean = _wav_list(args.clean)
    noisy = _wav_list(args.noisy)
    enhanced = _wav_list(args.enhanced)
    if not (len(clean) == len(noisy) == len(enhanced)):
        raise ValueError(
            f"mismatched file counts: {len(clean)} clean, {len(noisy)} noisy, "
            f"{len(enhanced)} enhanced"
        )
    delay = args.delay
    if delay is None:
        delay = latency_report().total_samples(SAMPLE_RATE)
    wanted = [m.strip() for m in args.metrics.split(",")] if args.metrics else None

    def one(paths):
        c, n, e = (read_wav(p) for p in paths)
        if not (len(c) == len(n) == len(e)):
            raise ValueError(f"{paths[0].name}: signal lengths differ")
        return metrics.evaluate_triple(
            paths[0].name, c, n, e, SAMPLE_RATE, delay=delay, snr_db=args.snr,
        )

    jobs = list(zip(clean, noisy, enhanced))
    max_workers = int(os.environ.get("HRNN_THREADS", "0")) or min(8, len(jobs))
    if max_workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(one, jobs))
    else:
        rows = [one(j) for j in jobs]

    columns = ["file", "snr_db", "si_sdr_in", "si_sdr_out",
               "stoi_in", "stoi_out", "delta_stoi", "rmse"]
    if wanted:
        keep = {"si_sdr": ["si_sdr_in", "si_sdr_out"],
                "stoi": ["stoi_in", "stoi_out", "delta_stoi"],
                "rmse": ["rmse"]}
        selected = ["file", "snr_db"]
        for m in wanted:
            if m not in keep:
                raise ValueError(f"unknown metric {m!r}, expected si_sdr|stoi|rmse")
            selected.extend(keep[m])
        columns = selected

    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(getattr(row, c)) for c in columns])
        by_snr = {}
        for row in rows:
            by_snr.setdefault(row.snr_db, []).append(row)
        for snr, group in by_snr.items():
            mean_row = ["mean", _fmt(snr)]
            for c in columns[2:]:
                mean_row.append(_fmt(float(np.mean([getattr(r, c) for r in group]))))
            writer.writerow(mean_row)
    finally:
        if args.output:
            out.close()
    return 0


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.6g}"
    return value


def _cmd_mix(args):
    clean = read_wav(args.clean)
    noise = read_wav(args.noise)
    write_wav(args.output, mix_signals(clean, noise, args.snr))
    return 0


def _cmd_bench(args):
    if args.model:
        weights = read_weights_file(args.model)
    else:
        weights = random_weights(ArchConfig("HC", 16, 16), seed=7)
    stats = bench_run(weights, args.seconds)
    for key, value in stats.items():
        print(f"{key}={_fmt(value)}")
    return 0


def _arch_from_args(args):
    if args.model:
        return read_weights_file(args.model).arch
    hidden2 = args.hidden2 if args.hidden2 is not None else args.hidden
    return ArchConfig(variant=args.variant, hidden1=args.hidden, hidden2=hidden2)


def _cmd_inspect(args):
    arch = _arch_from_args(args)
    report = complexity.flop_rate(arch)
    latency = latency_report()
    names = ["gru1", "gru2", "output"]
    print(f"architecture        {arch.variant}-RNN  "
          f"hidden {arch.hidden1}/{arch.hidden2}")
    print(f"{'layer':<14}{'params':>10}{'flops/hop':>12}")
    for name, params in zip(names, report.params_per_layer):
        print(f"{name:<14}{params:>10}{report.breakdown[name]:>12}")
    print(f"{'normalization':<14}{'-':>10}{report.breakdown['normalization']:>12}")
    print(f"{'bark':<14}{'-':>10}{report.breakdown['bark']:>12}")
    print(f"{'total':<14}{report.params_total:>10}{report.flops_per_hop:>12}")
    print(f"network rate   {report.network_flops_per_second / 1e6:.3f} MFLOPS")
    print(f"total rate     {report.flops_per_second / 1e6:.3f} MFLOPS")
    print(f"latency        {latency.fbank_ms:.1f} ms filter bank + "
          f"{latency.lookahead_ms:.1f} ms lookahead + "
          f"{latency.hop_ms:.1f} ms hop = {latency.total_ms:.1f} ms")
    print(f"params_total={report.params_total}")
    print(f"flops_per_second={report.flops_per_second}")
    print(f"network_flops_per_second={report.network_flops_per_second}")
    print(f"latency_total_ms={latency.total_ms}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hrnnoise",
        description="Streaming low-latency noise reduction with a tiny recurrent network",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="denoise a mono 24 kHz WAV file")
    p.add_argument("--model", required=True, help="HRNN weight file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--variance-norm", action="store_true",
                   help="divide features by the running standard deviation")
    p.add_argument("--tau", type=float, default=1.0,
                   help="normalization time constant in seconds")
    p.add_argument("--gain-floor", type=float, default=None,
                   help="lowest mask gain in dB (e.g. -14); default no floor")
    p.set_defaults(func=_cmd_enhance)

    p = sub.add_parser("evaluate", help="compute metrics for clean/noisy/enhanced triples")
    p.add_argument("--clean", required=True, help="WAV file or directory")
    p.add_argument("--noisy", required=True)
    p.add_argument("--enhanced", required=True)
    p.add_argument("--snr", type=float, default=float("nan"),
                   help="input SNR label for the CSV rows")
    p.add_argument("--metrics", default=None,
                   help="comma list of si_sdr,stoi,rmse (default all)")
    p.add_argument("--delay", type=int, default=None,
                   help="enhanced-signal delay in samples (default: reported latency)")
    p.add_argument("--output", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("mix", help="mix clean speech with noise at a target SNR")
    p.add_argument("--clean", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--snr", type=float, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_mix)

    p = sub.add_parser("bench", help="measure per-hop wall-clock cost")
    p.add_argument("--model", default=None, help="HRNN weight file (default: random HC-16)")
    p.add_argument("--seconds", type=float, default=10.0)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("inspect", help="print parameter/FLOP/latency accounting")
    p.add_argument("--model", default=None, help="read the architecture from a weight file")
    p.add_argument("--variant", choices=["HC", "C"], default="HC")
    p.add_argument("--hidden", type=int, default=16, help="hidden size of layer 1")
    p.add_argument("--hidden2", type=int, default=None,
                   help="hidden size of layer 2 (default: same as layer 1)")
    p.set_defaults(func=_cmd_inspect)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single-line contract for all failures
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
