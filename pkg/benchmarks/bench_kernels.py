#!/usr/bin/env python3
"""Benchmark the propagation kernel backends and verify their bit parity.

Builds single-view cohorts of growing size, runs the per-view propagation
through every available backend, checks the outputs agree bit for bit, and
reports per-call times plus the compiled-over-pure speedup.

Usage:
    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --sizes 50,100,400 --iterations 20
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from viewgrade.engine import _topology
from viewgrade.kernels import available_backends
from viewgrade.synth import SynthConfig, generate


def build_arrays(n: int, seed: int = 7):
    config = SynthConfig(
        n_graders=n,
        n_submissions=n,
        reviews_per_grader=6,
        n_views=1,
        view_weights=(1.0,),
        bias_counts=(max(1, n // 5),),
        bias_offset_low=2.0,
        bias_offset_high=3.0,
        seed=seed,
    )
    dataset, _ = generate(config)
    (
        _submissions,
        _graders,
        item_edges,
        grader_edges,
        item_ptr,
        item_grader,
        grader_ptr,
        grader_item,
        item_to_grader_slot,
        grader_to_item_slot,
    ) = _topology(dataset)
    lookup = dataset.grade_lookup
    item_grade = np.array([lookup[(s, g, "v1")] for s, g in item_edges])
    grader_grade = np.array([lookup[(s, g, "v1")] for s, g in grader_edges])
    return (
        item_ptr,
        item_grader,
        item_grade,
        grader_ptr,
        grader_item,
        grader_grade,
        item_to_grader_slot,
        grader_to_item_slot,
    )


def best_time(kernel, args, iterations: int, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        kernel(*args, iterations, 1e-6)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="50,100,200,400",
                        help="comma-separated cohort sizes (graders = submissions)")
    parser.add_argument("--iterations", type=int, default=20,
                        help="propagation rounds per call")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repetitions (best is reported)")
    ns = parser.parse_args()

    backends = available_backends()
    names = sorted(backends)
    print(f"backends: {', '.join(names)}")
    if "compiled" not in backends:
        print("note: compiled kernel unavailable; timing the pure backend only")

    header = f"{'size':>6} {'edges':>8}"
    for name in names:
        header += f" {name + ' (ms)':>15}"
    if len(names) > 1:
        header += f" {'speedup':>9} {'parity':>7}"
    print(header)

    for size in (int(s) for s in ns.sizes.split(",")):
        args = build_arrays(size)
        outputs = {}
        times = {}
        for name in names:
            kernel = backends[name].propagate_view
            outputs[name] = kernel(*args, ns.iterations, 1e-6)
            times[name] = best_time(kernel, args, ns.iterations, ns.repeats)
        row = f"{size:>6} {len(args[2]):>8}"
        for name in names:
            row += f" {times[name] * 1e3:>15.3f}"
        if len(names) > 1:
            identical = all(
                np.array_equal(np.asarray(a), np.asarray(b))
                for a, b in zip(outputs["python"], outputs["compiled"])
            )
            row += f" {times['python'] / times['compiled']:>8.1f}x"
            row += f" {'exact' if identical else 'MISMATCH':>7}"
            if not identical:
                print(row)
                print("error: backends disagree; investigate before trusting timings")
                return 1
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
