"""Command-line entry point.

    pqcsim run circuit.qc --ranks 4 --kmax 2 --samples 10 --report out.json
    pqcsim shor 247 --y 194 --ranks 4
    pqcsim bench hadamard --qubits 20 --ranks 1 2 4
    pqcsim gen adder --width 11 1365 682 -o adder22.qc
    pqcsim compile logical.qc --ranks 32 --kmax 5
    pqcsim validate compiled.qc --ranks 32
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .algorithms import generators
from .algorithms.shor import PeriodResult, choose_registers, run_shor
from .circuit import InitialState, Program, Qubits, insert_swaps, load_program, serialize_program, validate_locality
from .errors import ParseError, SimulatorError
from .runner import RunReport, execute_program
from .transport import DEFAULT_TIMEOUT, RankTopology

log = logging.getLogger("pqcsim")

EXIT_CODES = {
    "parse": 3,
    "compile": 4,
    "locality": 4,
    "capacity": 4,
    "domain": 5,
    "resource": 6,
    "state": 7,
    "protocol": 8,
    "deadlock": 8,
    "aborted": 8,
}

# name -> (register width, values) for the standard adder workloads
ADDER_SUITES = {
    "adder-3x11": (11, (292, 585, 1170)),
    "adder-2x17": (17, (26214, 104857)),
    "adder-5x7": (7, (7, 9, 19, 35, 65)),
    "adder-3x12": (12, (781, 1054, 3296)),
}
SUITES = ("hadamard", "qft") + tuple(ADDER_SUITES)


# ---------------------------------------------------------------- commands


def cmd_run(
    file,
    n_ranks: int | None = None,
    k_max: int = 1,
    chunk_count: int = 4,
    seed: int = 0,
    sample_count: int = 0,
    report_path=None,
    recompile: bool = False,
    timeout: float = DEFAULT_TIMEOUT,
) -> RunReport:
    program = load_program(file)
    result = execute_program(
        program, n_ranks, k_max, chunk_count, seed, sample_count, timeout=timeout, recompile=recompile
    )
    if report_path:
        Path(report_path).write_text(result.report.to_json() + "\n")
    return result.report


def cmd_shor(
    g: int,
    y: int | None = None,
    n_ranks: int = 1,
    seed: int = 0,
    samples: int = 16,
    k_max: int = 1,
    chunk_count: int = 4,
    attempts: int = 3,
    report_path=None,
    timeout: float = DEFAULT_TIMEOUT,
) -> tuple[RunReport | None, PeriodResult]:
    """Run the pipeline; on a sampling miss, retry with the next seed up to `attempts` times."""
    params = choose_registers(g, y=y)
    for attempt in range(max(attempts, 1)):
        result = run_shor(params, n_ranks, seed + attempt, samples, k_max, chunk_count, timeout)
        if result.retry is None or result.r is not None:
            break
        log.info("attempt %d: %s", attempt + 1, result.retry)
    if report_path:
        Path(report_path).write_text(json.dumps(shor_payload(params, result), sort_keys=True, indent=2) + "\n")
    return result.report, result


def shor_payload(params, result: PeriodResult, timings: bool = True) -> dict:
    d = {
        "g": params.g,
        "y": params.y,
        "x_bits": params.x_bits,
        "f_bits": params.f_bits,
        "l": params.l,
        "r": result.r,
        "s": result.s,
        "factors": list(result.factors) if result.factors else None,
        "expectations": [float(v) for v in result.expectations],
        "samples": list(result.samples),
        "frequencies": list(result.frequencies),
        "retry": result.retry,
    }
    if result.report is not None:
        d["run"] = result.report.payload(timings)
    return d


@dataclass
class BenchRow:
    suite: str
    report: RunReport
    result: int | None = None

    @property
    def columns(self) -> dict:
        r = self.report
        return {
            "suite": self.suite,
            "L": r.l,
            "N": r.n_ranks,
            "N_O": r.n_ops,
            "t_E": r.wall_time_seconds,
            "t_CPU": r.cpu_time_seconds,
            "N*t_E/t_CPU": r.parallel_efficiency,
            "t_CPU/(N*N_O)": r.cpu_per_op,
            "result": self.result,
        }


def bench_program(suite: str, qubits: int | None = None, width: int | None = None, measure: bool = True):
    """(program, register sizes or None) for a named suite."""
    if suite == "hadamard":
        return generators.gen_hadamard_sweep(qubits or 20, measure), None
    if suite == "qft":
        l = qubits or 20
        body = generators.gen_qft(range(l))
        if measure:
            body += generators.measure_all(range(l))
        return Program((Qubits(l), InitialState(0))) + body, None
    if suite in ADDER_SUITES:
        w, values = ADDER_SUITES[suite]
        if width is not None:
            values = tuple(v % (1 << width) for v in values)
            w = width
        sizes = [w] * len(values)
        return generators.gen_adder(sizes, values, measure), sizes
    raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")


def cmd_bench(
    suite: str,
    n_ranks_list: Sequence[int] = (1,),
    k_max: int = 1,
    qubits: int | None = None,
    width: int | None = None,
    measure: bool = True,
    chunk_count: int = 4,
    timeout: float = DEFAULT_TIMEOUT,
) -> list[BenchRow]:
    program, sizes = bench_program(suite, qubits, width, measure)
    # load the compiled kernels before the clock starts
    execute_program(bench_program(suite, 4, 2, measure)[0], 1, k_max, chunk_count, timeout=timeout)
    rows = []
    for n in n_ranks_list:
        rep = execute_program(program, n, k_max, chunk_count, timeout=timeout).report
        value = generators.accumulator_value(rep.expectations, sizes) if sizes and measure else None
        rows.append(BenchRow(suite, rep, value))
    return rows


def format_bench(rows: Sequence[BenchRow]) -> str:
    head = f"{'suite':<12}{'L':>4}{'N':>6}{'N_O':>7}{'t_E[s]':>11}{'t_CPU[s]':>11}{'N*tE/tCPU':>11}{'tCPU/(N*NO)':>13}  result"
    lines = [head]
    for row in rows:
        c = row.columns
        lines.append(
            f"{c['suite']:<12}{c['L']:>4}{c['N']:>6}{c['N_O']:>7}{c['t_E']:>11.4f}{c['t_CPU']:>11.4f}"
            f"{c['N*t_E/t_CPU']:>11.3f}{c['t_CPU/(N*N_O)']:>13.3e}  {'' if c['result'] is None else c['result']}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------- argument parsing


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kmax", type=int, default=1, help="max pairs per swap command (default 1)")
    p.add_argument("--chunks", type=int, default=4, help="messages per partner buffer (default 4)")
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="rendezvous timeout in seconds")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pqcsim", description="Distributed state-vector quantum circuit simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a .qc program")
    p.add_argument("file")
    p.add_argument("--ranks", type=int, default=None, help="rank count (default: MPIPROCESSES or 1)")
    _common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=0)
    p.add_argument("--report", metavar="PATH")
    p.add_argument("--recompile", action="store_true", help="drop existing SWAP commands and compile anew")

    p = sub.add_parser("shor", help="factor G with the simulated period finder")
    p.add_argument("g", type=int)
    p.add_argument("--y", type=int, default=None, help="base (default: smallest usable)")
    p.add_argument("--ranks", type=int, default=1)
    _common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--attempts", type=int, default=3)
    p.add_argument("--report", metavar="PATH")

    p = sub.add_parser("bench", help="timing table for a built-in workload")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--ranks", type=int, nargs="+", default=[1])
    _common(p)
    p.add_argument("--qubits", type=int, default=None, help="L for hadamard and qft (default 20)")
    p.add_argument("--width", type=int, default=None, help="register width override for adder suites")
    p.add_argument("--no-measure", action="store_true", help="leave measurement out of the timings")
    p.add_argument("--report", metavar="PATH")

    p = sub.add_parser("gen", help="write a logical program")
    p.add_argument("kind", choices=("hadamard", "qft", "adder"))
    p.add_argument("values", type=int, nargs="*", help="qubit count, or register values for adder")
    p.add_argument("--width", type=int, default=None, help="adder register width")
    p.add_argument("-o", "--output", metavar="PATH")

    p = sub.add_parser("compile", help="insert SWAP commands for a rank count")
    p.add_argument("file")
    p.add_argument("--ranks", type=int, required=True)
    p.add_argument("--kmax", type=int, default=1)
    p.add_argument("-o", "--output", metavar="PATH")

    p = sub.add_parser("validate", help="check that every gate acts on local qubits")
    p.add_argument("file")
    p.add_argument("--ranks", type=int, default=None, help="rank count (default: MPIPROCESSES or 1)")
    return ap


def _emit(text: str, path) -> None:
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def _gen(args) -> Program:
    if args.kind == "adder":
        if len(args.values) < 2:
            raise ValueError("adder needs at least two register values")
        width = args.width or max(max(args.values).bit_length(), 1)
        return generators.gen_adder([width] * len(args.values), args.values)
    if len(args.values) != 1:
        raise ValueError(f"{args.kind} takes exactly one qubit count")
    l = args.values[0]
    if args.kind == "hadamard":
        return generators.gen_hadamard_sweep(l)
    return bench_program("qft", l)[0]


def dispatch(args) -> int:
    if args.command == "run":
        rep = cmd_run(
            args.file, args.ranks, args.kmax, args.chunks, args.seed, args.samples, args.report,
            args.recompile, args.timeout,
        )
        print(rep.text())
    elif args.command == "shor":
        _, res = cmd_shor(
            args.g, args.y, args.ranks, args.seed, args.samples, args.kmax, args.chunks, args.attempts,
            args.report, args.timeout,
        )
        print(format_shor(args.g, res))
    elif args.command == "bench":
        rows = cmd_bench(
            args.suite, args.ranks, args.kmax, args.qubits, args.width, not args.no_measure, args.chunks,
            args.timeout,
        )
        print(format_bench(rows))
        if args.report:
            payload = [{**r.columns, "run": r.report.payload()} for r in rows]
            Path(args.report).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    elif args.command == "gen":
        _emit(serialize_program(_gen(args)), args.output)
    elif args.command == "compile":
        prog = load_program(args.file)
        topo = RankTopology.from_ranks(prog.l, args.ranks)
        _emit(serialize_program(insert_swaps(prog, topo.m, args.kmax)), args.output)
    elif args.command == "validate":
        prog = load_program(args.file)
        topo = RankTopology.from_ranks(prog.l, args.ranks or prog.declared_ranks or 1)
        diags = validate_locality(prog, topo.m)
        for d in diags:
            print(f"{args.file}:{d}", file=sys.stderr)
        if diags:
            return EXIT_CODES["locality"]
        print(f"ok: locality holds for N={topo.n_ranks} (m={topo.m})")
    return 0


def format_shor(g: int, res: PeriodResult) -> str:
    lines = []
    if res.expectations.size:
        lines += [f"<Q{i}> = {v:.6f}" for i, v in enumerate(res.expectations)]
    if res.frequencies:
        lines.append("k: " + " ".join(str(k) for k in res.frequencies))
    if res.r is not None:
        lines.append(f"r = {res.r}")
    if res.factors:
        lines.append(f"{g} = {res.factors[0]} x {res.factors[1]}")
    if res.retry:
        lines.append(f"retry: {res.retry}")
    return "\n".join(lines)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    if extra:
        # `gen adder --width 11 1365 682`: values after an option land here
        if args.command != "gen" or not all(x.isdigit() for x in extra):
            parser.error(f"unrecognized arguments: {' '.join(extra)}")
        args.values += [int(x) for x in extra]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return dispatch(args)
    except ParseError as exc:
        print(f"pqcsim: parse error: {getattr(args, 'file', '')}:{exc}", file=sys.stderr)
        return EXIT_CODES["parse"]
    except SimulatorError as exc:
        print(f"pqcsim: {exc.category} error: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.category, 1)
    except (ValueError, OSError) as exc:
        print(f"pqcsim: usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
