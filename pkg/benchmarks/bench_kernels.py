"""Compare the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py --qubits 22 --repeat 5
    python benchmarks/bench_kernels.py --json kernels.json

Each kernel runs on a fresh 2^m shard; the best of `repeat` timings is kept.
The end-to-end row runs a whole adder circuit through the SPMD runner.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from pqcsim import kernels
from pqcsim.algorithms.generators import gen_adder
from pqcsim.runner import execute_program

S = 1 / np.sqrt(2)


def kernel_cases(m: int):
    hi, mid = m - 1, m // 2
    p2q = np.arange(m, dtype=np.int64)
    addrs = np.arange(0, 1 << m, 2, dtype=np.int64)
    buf = np.empty(len(addrs), dtype=np.complex128)
    idx = np.empty(1 << m, dtype=np.int64)
    return {
        "apply_1q (H, low bit)": lambda a: kernels.apply_1q(a, 0, S, S, S, -S),
        "apply_1q (H, high bit)": lambda a: kernels.apply_1q(a, hi, S, S, S, -S),
        "phase_1q": lambda a: kernels.phase_1q(a, mid, np.exp(0.3j)),
        "cphase": lambda a: kernels.cphase(a, 0, hi, np.exp(0.3j)),
        "cnot": lambda a: kernels.cnot(a, 1, mid),
        "toffoli": lambda a: kernels.toffoli(a, 0, 1, hi),
        "norm_sq": lambda a: kernels.norm_sq(a),
        "bit_probs (all bits)": lambda a: kernels.bit_probs(a, p2q),
        "gather (half)": lambda a: kernels.gather(a, addrs, buf),
        "logical_indices": lambda a: kernels.logical_indices(0, m, p2q, 0, idx),
    }


def best_of(fn, arg, repeat: int) -> float:
    fn(arg)  # compile / warm up
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(arg)
        times.append(time.perf_counter() - t0)
    return min(times)


def run(m: int, repeat: int, adder_width: int) -> list[dict]:
    rng = np.random.default_rng(0)
    state = rng.normal(size=1 << m) + 1j * rng.normal(size=1 << m)
    state /= np.linalg.norm(state)
    rows = []
    backends = ["numba", "numpy"] if kernels.NUMBA_AVAILABLE else ["numpy"]
    previous = kernels.BACKEND
    try:
        for name in kernel_cases(m):
            row = {"kernel": name, "m": m}
            for b in backends:
                kernels.use(b)
                row[b] = best_of(kernel_cases(m)[name], state.copy(), repeat)
            rows.append(row)
        program = gen_adder([adder_width, adder_width], [(1 << adder_width) - 1, 1])
        row = {"kernel": f"adder circuit L={2 * adder_width}", "m": 2 * adder_width}
        for b in backends:
            kernels.use(b)
            execute_program(program, 1)
            row[b] = min(execute_program(program, 1).report.wall_time_seconds for _ in range(max(1, repeat // 2)))
        rows.append(row)
    finally:
        kernels.use(previous)
    for row in rows:
        if "numba" in row:
            row["speedup"] = row["numpy"] / row["numba"]
    return rows


def format_rows(rows: list[dict]) -> str:
    lines = [f"{'kernel':<28}{'m':>4}{'numba [ms]':>13}{'numpy [ms]':>13}{'numpy/numba':>13}"]
    for r in rows:
        nb = f"{1e3 * r['numba']:>13.3f}" if "numba" in r else f"{'-':>13}"
        sp = f"{r['speedup']:>13.2f}" if "speedup" in r else f"{'-':>13}"
        lines.append(f"{r['kernel']:<28}{r['m']:>4}{nb}{1e3 * r['numpy']:>13.3f}{sp}")
    return "\n".join(lines)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, default=20, help="shard size m (default 20)")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--adder-width", type=int, default=8, help="register width of the end-to-end adder")
    ap.add_argument("--json", metavar="PATH")
    args = ap.parse_args(argv)
    rows = run(args.qubits, args.repeat, args.adder_width)
    print(format_rows(rows))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
