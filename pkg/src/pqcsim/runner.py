"""SPMD execution of compiled programs and the run report."""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .circuit import (
    BeginMeasurement,
    DoMeasurement,
    EndMeasurement,
    Gate,
    InitialState,
    Program,
    Swap,
    count_operations,
    insert_swaps,
    strip_swaps,
    validate_locality,
)
from .errors import CompileError, LocalityError, StateError
from .layout import QubitPermutation, exchange_slots, plan_from_pairs, shard_logical_indices
from .statevec import (
    SINGLE_QUBIT_GATES,
    StateShard,
    apply_cnot,
    apply_controlled_phase,
    apply_controlled_v,
    apply_phase_shift,
    apply_single_qubit,
    apply_toffoli,
    init_shard_basis,
    norm_squared,
    partial_expectations,
    phase_angle,
)
from .transport import DEFAULT_TIMEOUT, Comm, RankTopology, World, ensure_fits, spawn

NORM_TOL = 1e-9


class RankContext:
    """One rank's shard, its view of the layout, and what it has measured so far."""

    def __init__(self, comm: Comm, sigma: QubitPermutation, chunk_count: int = 4):
        self.comm = comm
        self.sigma = sigma
        self.chunk_count = chunk_count
        self.shard = StateShard(sigma.m, comm.rank)
        self.expectations: dict[int, float] = {}
        self.busy = 0.0
        self.samples: list[int] | None = None

    @property
    def rank(self) -> int:
        return self.comm.rank

    def run(self, instructions: Iterable) -> None:
        for ins in instructions:
            t0 = time.thread_time()
            try:
                self.execute(ins)
            finally:
                self.busy += time.thread_time() - t0

    def timed(self, fn: Callable[[], Any]) -> Any:
        t0 = time.thread_time()
        try:
            return fn()
        finally:
            self.busy += time.thread_time() - t0

    def _bits(self, qubits: Sequence[int]) -> list[int]:
        pos = [self.sigma.position(q) for q in qubits]
        bad = [q for q, p in zip(qubits, pos) if p >= self.sigma.m]
        if bad:
            raise LocalityError(f"rank {self.rank}: qubit(s) {bad} are not local")
        return pos

    def execute(self, ins) -> None:
        if isinstance(ins, Gate):
            self.apply_gate(ins)
        elif isinstance(ins, Swap):
            self.swap(ins.pairs)
        elif isinstance(ins, DoMeasurement):
            self.measure(ins.qubits)
        elif isinstance(ins, InitialState):
            init_shard_basis(self.shard, self.sigma, ins.index)
        elif isinstance(ins, EndMeasurement):
            self.check_norm()
        # QUBITS, MPIPROCESSES and BEGIN MEASUREMENT carry no work

    def apply_gate(self, g: Gate) -> None:
        bits = self._bits(g.qubits)
        s = self.shard
        if g.kind in SINGLE_QUBIT_GATES:
            apply_single_qubit(s, bits[0], SINGLE_QUBIT_GATES[g.kind])
        elif g.kind == "R":
            apply_phase_shift(s, bits[0], phase_angle(g.k))
        elif g.kind == "CNOT":
            apply_cnot(s, bits[0], bits[1])
        elif g.kind == "CPHASE":
            apply_controlled_phase(s, bits[0], bits[1], phase_angle(g.k))
        elif g.kind == "CV":
            apply_controlled_v(s, bits[0], bits[1], phase_angle(g.k))
        elif g.kind == "TOFFOLI":
            apply_toffoli(s, bits[0], bits[1], bits[2])
        else:
            raise CompileError(f"unknown gate kind {g.kind!r}")

    def swap(self, pairs) -> None:
        plan, new_sigma = plan_from_pairs(self.sigma, pairs, self.chunk_count)
        for partner, addrs, _ in exchange_slots(plan, self.rank):
            self.comm.exchange_inplace(partner, self.shard.amps, addrs, self.chunk_count)
        self.sigma = new_sigma

    def measure(self, qubits: Sequence[int]) -> None:
        partial = partial_expectations(self.shard, self._bits(qubits))
        total = self.comm.all_reduce_sum(partial)
        for q, v in zip(qubits, total):
            self.expectations[q] = float(v)

    def global_norm(self) -> float:
        return float(self.comm.all_reduce_sum(norm_squared(self.shard)))

    def check_norm(self, tol: float = NORM_TOL) -> float:
        norm = self.global_norm()
        if not abs(norm - 1.0) <= tol:
            raise StateError(f"global norm drifted to {norm!r}")
        return norm


@dataclass
class DistributedState:
    """Snapshot of all shards after a run, with the layout they were left in."""

    sigma: QubitPermutation
    shards: list

    @property
    def l(self) -> int:
        return self.sigma.l

    def dense(self) -> np.ndarray:
        return gather_state(self.shards, self.sigma)


def gather_state(shards: Sequence[StateShard], sigma: QubitPermutation) -> np.ndarray:
    """Assemble the full 2^l vector indexed by logical basis state."""
    out = np.empty(1 << sigma.l, dtype=np.complex128)
    for shard in shards:
        out[shard_logical_indices(sigma, shard.rank)] = shard.amps
    return out


def scatter_state(dense: np.ndarray, sigma: QubitPermutation) -> list[StateShard]:
    return [
        StateShard(sigma.m, r, np.ascontiguousarray(dense[shard_logical_indices(sigma, r)]))
        for r in range(sigma.n_ranks)
    ]


@dataclass
class RunReport:
    l: int
    n_ranks: int
    k_max: int
    n_ops: int
    wall_time_seconds: float
    cpu_time_seconds: float
    expectations: dict = field(default_factory=dict)
    samples: list | None = None
    exchange_stats: dict = field(default_factory=dict)
    chunk_count: int = 4
    seed: int = 0
    norm: float = 1.0

    def payload(self, timings: bool = True) -> dict:
        d = asdict(self)
        d["expectations"] = {str(q): v for q, v in sorted(self.expectations.items())}
        if not timings:
            del d["wall_time_seconds"], d["cpu_time_seconds"]
        return d

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.payload(timings), sort_keys=True, indent=2)

    @property
    def parallel_efficiency(self) -> float:
        """N * t_E / t_CPU; 1 is the ideal line."""
        if self.cpu_time_seconds <= 0:
            return math.nan
        return self.n_ranks * self.wall_time_seconds / self.cpu_time_seconds

    @property
    def cpu_per_op(self) -> float:
        """t_CPU / (N * N_O)."""
        if self.n_ops == 0:
            return math.nan
        return self.cpu_time_seconds / (self.n_ranks * self.n_ops)

    def text(self) -> str:
        lines = [
            f"L={self.l} N={self.n_ranks} kmax={self.k_max} N_O={self.n_ops}",
            f"t_E={self.wall_time_seconds:.4f}s t_CPU={self.cpu_time_seconds:.4f}s",
        ]
        for q, v in sorted(self.expectations.items()):
            lines.append(f"<Q{q}> = {v:.10f}")
        if self.samples is not None:
            lines.append("samples: " + " ".join(str(s) for s in self.samples))
        return "\n".join(lines)


@dataclass
class RunResult:
    report: RunReport
    program: Program
    state: DistributedState | None = None


def prepare_program(
    program: Program, n_ranks: int, k_max: int = 1, recompile: bool = False
) -> tuple[Program, RankTopology]:
    """Compile (or check) `program` for n_ranks; returns the executable program and topology."""
    topo = RankTopology.from_ranks(program.l, n_ranks)
    if program.has_swaps and not recompile:
        diags = validate_locality(program, topo.m)
        if diags:
            raise LocalityError(str(diags[0]))
        return program, topo
    logical = strip_swaps(program) if program.has_swaps else program
    return insert_swaps(logical, topo.m, k_max), topo


def execute_program(
    program: Program,
    n_ranks: int | None = None,
    k_max: int = 1,
    chunk_count: int = 4,
    seed: int = 0,
    sample_count: int = 0,
    timeout: float = DEFAULT_TIMEOUT,
    keep_state: bool = False,
    recompile: bool = False,
) -> RunResult:
    """Compile if needed, run SPMD on n_ranks, reduce expectations, optionally sample."""
    from .algorithms.sampling import sample_on_rank

    if n_ranks is None:
        n_ranks = program.declared_ranks or 1
    compiled, topo = prepare_program(program, n_ranks, k_max, recompile)
    ensure_fits(topo.l)
    world = World(topo.n_ranks, timeout)

    def rank_main(comm: Comm) -> RankContext:
        ctx = RankContext(comm, QubitPermutation.identity(topo.l, topo.m), chunk_count)
        ctx.run(compiled.instructions)
        ctx.check_norm()
        if sample_count:
            ctx.samples = ctx.timed(lambda: sample_on_rank(comm, ctx.shard, ctx.sigma, sample_count, seed))
        return ctx

    t0 = time.perf_counter()
    contexts = spawn(topo.n_ranks, rank_main, timeout, world)
    wall = time.perf_counter() - t0

    head = contexts[0]
    report = RunReport(
        l=topo.l,
        n_ranks=topo.n_ranks,
        k_max=k_max,
        n_ops=count_operations(compiled),
        wall_time_seconds=wall,
        cpu_time_seconds=sum(c.busy for c in contexts),
        expectations=dict(head.expectations),
        samples=head.samples if sample_count else None,
        exchange_stats=world.stats.as_dict(),
        chunk_count=chunk_count,
        seed=seed,
        norm=round(sum(norm_squared(c.shard) for c in contexts), 12),
    )
    state = DistributedState(head.sigma, [c.shard for c in contexts]) if keep_state else None
    return RunResult(report, compiled, state)


def simulate(program: Program, n_ranks: int = 1, k_max: int = 1, chunk_count: int = 4, **kw) -> np.ndarray:
    """Run and return the gathered dense state in logical order."""
    return execute_program(program, n_ranks, k_max, chunk_count, keep_state=True, **kw).state.dense()


def strip_measurements(program: Program) -> Program:
    keep = (BeginMeasurement, DoMeasurement, EndMeasurement)
    return Program(tuple(i for i in program.instructions if not isinstance(i, keep)))


__all__ = [
    "DistributedState",
    "RankContext",
    "RunReport",
    "RunResult",
    "execute_program",
    "gather_state",
    "prepare_program",
    "scatter_state",
    "simulate",
    "strip_measurements",
]
