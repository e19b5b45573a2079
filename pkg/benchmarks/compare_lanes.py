"""Timing comparison between the compiled and pure-Python kernel lanes.

Runs the recurrent-scan and CRF kernels, then a full model forward pass,
on each available lane and prints a table of median wall times.

Usage: python3 benchmarks/compare_lanes.py [--repeats 7] [--length 256]
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from starner import kernels
from starner.bench import forward_pass, synthetic_model
from starner.config import Config


def timed(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append((time.perf_counter() - start) * 1000.0)
    return statistics.median(times)


def kernel_tasks(length: int):
    rng = np.random.default_rng(0)
    hidden = 64
    gx = rng.normal(size=(length, 1, 3 * hidden))
    h0 = np.zeros((1, hidden))
    wh = rng.normal(size=(hidden, 3 * hidden)) / np.sqrt(hidden)
    bh = np.zeros(3 * hidden)
    emissions = rng.normal(size=(length, 5))
    transitions = rng.normal(size=(7, 7))

    def gru_roundtrip():
        h_out, cache = kernels.gru_scan_forward(gx, h0, wh, bh)
        kernels.gru_scan_backward(np.ones_like(h_out), h_out, cache, h0, wh)

    def crf_roundtrip():
        log_z, alpha = kernels.crf_forward(emissions, transitions)
        kernels.crf_backward(emissions, transitions, alpha, log_z, 1.0)

    return {"gru scan fwd+bwd": gru_roundtrip, "crf fwd+bwd": crf_roundtrip}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--length", type=int, default=256)
    args = parser.parse_args()

    lanes = kernels.available_lanes()
    config = Config(type_names=("A", "B", "C"))
    model = synthetic_model(config)
    tokens = [f"w{i % 64}" for i in range(args.length)]
    pos = [("N", "V", "D")[i % 3] for i in range(args.length)]

    tasks = kernel_tasks(args.length)
    tasks["model forward"] = lambda: forward_pass(model, tokens, pos)

    results: dict[str, dict[str, float]] = {name: {} for name in tasks}
    for lane in lanes:
        kernels.set_lane(lane)
        for name, fn in tasks.items():
            fn()  # warm up
            results[name][lane] = timed(fn, args.repeats)
    kernels.set_lane("auto")

    width = max(len(name) for name in results)
    header = f"{'task'.ljust(width)}  " + "  ".join(f"{lane:>10}" for lane in lanes)
    if len(lanes) > 1:
        header += f"  {'speedup':>8}"
    print(f"length={args.length}, repeats={args.repeats}, lanes={lanes}")
    print(header)
    for name, by_lane in results.items():
        line = f"{name.ljust(width)}  " + "  ".join(
            f"{by_lane[lane]:>8.2f}ms" for lane in lanes
        )
        if len(lanes) > 1:
            line += f"  {by_lane['py'] / by_lane['ext']:>7.2f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
