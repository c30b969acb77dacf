"""Circuit IR, the line-oriented ``.qc`` text format, and the swap-inserting compiler.

Format (one instruction per line, keywords case-insensitive, ``!`` starts a
comment anywhere, ``#`` starts a comment at the beginning of a line)::

    QUBITS 32
    INITIAL STATE 0
    MPIPROCESSES 32
    H 0
    CPHASE 3 0 5          ! phase 2*pi/2^3 on qubit 5 controlled by qubit 0
    SWAP 2 0 1 27 28      ! pairs (0,27), (1,28)
    BEGIN MEASUREMENT
    DO MEASUREMENT 0 1
    END MEASUREMENT
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

from .errors import CapacityError, CompileError, LocalityError, ParseError
from .layout import EvictionPolicy, QubitPermutation, evict_lowest, plan_from_pairs

# kind -> (has phase parameter k, qubit count)
GATE_ARITY = {
    "H": (False, 1),
    "X": (False, 1),
    "Y": (False, 1),
    "XDAG": (False, 1),
    "YDAG": (False, 1),
    "R": (True, 1),
    "CNOT": (False, 2),
    "CPHASE": (True, 2),
    "CV": (True, 2),
    "TOFFOLI": (False, 3),
}


@dataclass(frozen=True)
class Qubits:
    n: int
    line: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class InitialState:
    index: int
    line: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class MpiProcesses:
    n: int
    line: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    k: int | None = None
    line: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))


@dataclass(frozen=True)
class Swap:
    pairs: tuple[tuple[int, int], ...]
    line: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(tuple(p) for p in self.pairs))

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for p in self.pairs for q in p)


@dataclass(frozen=True)
class BeginMeasurement:
    line: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class DoMeasurement:
    qubits: tuple[int, ...]
    line: int = field(default=0, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))


@dataclass(frozen=True)
class EndMeasurement:
    line: int = field(default=0, compare=False, repr=False)


Instruction = Union[Qubits, InitialState, MpiProcesses, Gate, Swap, BeginMeasurement, DoMeasurement, EndMeasurement]
HEADER_TYPES = (Qubits, InitialState, MpiProcesses)


@dataclass(frozen=True)
class Program:
    instructions: tuple

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        if not self.instructions or not isinstance(self.instructions[0], Qubits):
            raise CompileError("a program must begin with QUBITS")

    @classmethod
    def empty(cls, l: int, initial_state: int = 0) -> "Program":
        return cls((Qubits(l), InitialState(initial_state)))

    @property
    def l(self) -> int:
        return self.instructions[0].n

    @property
    def declared_ranks(self) -> int | None:
        return next((i.n for i in self.instructions if isinstance(i, MpiProcesses)), None)

    @property
    def initial_state(self) -> int:
        return next((i.index for i in self.instructions if isinstance(i, InitialState)), 0)

    @property
    def body(self) -> tuple:
        return tuple(i for i in self.instructions if not isinstance(i, HEADER_TYPES))

    @property
    def has_swaps(self) -> bool:
        return any(isinstance(i, Swap) for i in self.instructions)

    def __add__(self, other: Iterable[Instruction]) -> "Program":
        return Program(self.instructions + tuple(other))


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.message}"


# ---------------------------------------------------------------- parsing

_INT = re.compile(r"[+-]?\d+\Z")
_TWO_WORD = {
    ("INITIAL", "STATE"): "INITIAL STATE",
    ("BEGIN", "MEASUREMENT"): "BEGIN MEASUREMENT",
    ("DO", "MEASUREMENT"): "DO MEASUREMENT",
    ("END", "MEASUREMENT"): "END MEASUREMENT",
}


def _strip_comment(raw: str) -> str:
    if raw.lstrip().startswith("#"):
        return ""
    cut = raw.find("!")
    return raw if cut < 0 else raw[:cut]


def _tokens(line: str) -> list[tuple[str, int]]:
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]


class _LineParser:
    def __init__(self, lineno: int, toks: list[tuple[str, int]], nqubits: int | None):
        self.lineno = lineno
        self.toks = toks
        self.nqubits = nqubits

    def fail(self, msg: str, col: int | None = None):
        raise ParseError(msg, self.lineno, col if col is not None else self.toks[0][1])

    def ints(self, toks, signed=False, qubit=False) -> list[int]:
        out = []
        for text, col in toks:
            if not _INT.match(text) or (not signed and text[0] in "+-"):
                self.fail(f"malformed integer {text!r}", col)
            v = int(text)
            if qubit and self.nqubits is not None and v >= self.nqubits:
                self.fail(f"qubit {v} out of range for QUBITS {self.nqubits}", col)
            out.append(v)
        return out

    def arity(self, args, n: int, what: str):
        if len(args) != n:
            col = args[n][1] if len(args) > n else self.toks[-1][1]
            self.fail(f"{what} expects {n} argument(s), got {len(args)}", col)

    def parse(self) -> Instruction:
        words = [t.upper() for t, _ in self.toks]
        key = words[0]
        rest = self.toks[1:]
        if len(words) >= 2 and (words[0], words[1]) in _TWO_WORD:
            key = _TWO_WORD[(words[0], words[1])]
            rest = self.toks[2:]
        line = self.lineno

        if key == "QUBITS":
            self.arity(rest, 1, key)
            (n,) = self.ints(rest)
            if n < 1:
                self.fail("QUBITS must be at least 1", rest[0][1])
            return Qubits(n, line=line)
        if self.nqubits is None:
            self.fail("program must begin with QUBITS")
        if key == "INITIAL STATE":
            self.arity(rest, 1, key)
            (idx,) = self.ints(rest)
            if idx >= 1 << self.nqubits:
                self.fail(f"initial state {idx} outside [0, 2^{self.nqubits})", rest[0][1])
            return InitialState(idx, line=line)
        if key == "MPIPROCESSES":
            self.arity(rest, 1, key)
            (n,) = self.ints(rest)
            if n < 1:
                self.fail("MPIPROCESSES must be positive", rest[0][1])
            return MpiProcesses(n, line=line)
        if key == "BEGIN MEASUREMENT":
            self.arity(rest, 0, key)
            return BeginMeasurement(line=line)
        if key == "END MEASUREMENT":
            self.arity(rest, 0, key)
            return EndMeasurement(line=line)
        if key == "DO MEASUREMENT":
            if not rest:
                self.fail("DO MEASUREMENT needs at least one qubit")
            qs = self.ints(rest, qubit=True)
            self._distinct(qs, rest)
            return DoMeasurement(tuple(qs), line=line)
        if key == "SWAP":
            if not rest:
                self.fail("SWAP needs a pair count")
            (k,) = self.ints(rest[:1])
            if k < 1:
                self.fail("SWAP pair count must be positive", rest[0][1])
            self.arity(rest[1:], 2 * k, f"SWAP {k}")
            qs = self.ints(rest[1:], qubit=True)
            self._distinct(qs, rest[1:])
            return Swap(tuple(zip(qs[:k], qs[k:])), line=line)
        if key in GATE_ARITY:
            has_k, nq = GATE_ARITY[key]
            self.arity(rest, nq + has_k, key)
            k = self.ints(rest[:1], signed=True)[0] if has_k else None
            qs = self.ints(rest[has_k:], qubit=True)
            self._distinct(qs, rest[has_k:])
            return Gate(key, tuple(qs), k, line=line)
        self.fail(f"unknown keyword {self.toks[0][0]!r}")

    def _distinct(self, qs, toks):
        seen = set()
        for q, (_, col) in zip(qs, toks):
            if q in seen:
                self.fail(f"qubit {q} repeated", col)
            seen.add(q)


def parse_program(text: str) -> Program:
    """Parse ``.qc`` text. Raises :class:`ParseError` carrying line and column."""
    instructions: list[Instruction] = []
    nqubits = None
    in_block = False
    seen_initial = False
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        last_line = lineno
        toks = _tokens(_strip_comment(raw))
        if not toks:
            continue
        lp = _LineParser(lineno, toks, nqubits)
        ins = lp.parse()
        if isinstance(ins, Qubits):
            if nqubits is not None:
                lp.fail("QUBITS given twice")
            nqubits = ins.n
        elif isinstance(ins, InitialState):
            if seen_initial:
                lp.fail("INITIAL STATE given twice")
            if any(isinstance(i, (Gate, Swap, BeginMeasurement)) for i in instructions):
                lp.fail("INITIAL STATE must precede every gate")
            seen_initial = True
        elif isinstance(ins, BeginMeasurement):
            if in_block:
                lp.fail("nested BEGIN MEASUREMENT")
            in_block = True
        elif isinstance(ins, EndMeasurement):
            if not in_block:
                lp.fail("END MEASUREMENT without BEGIN MEASUREMENT")
            in_block = False
        elif isinstance(ins, DoMeasurement):
            if not in_block:
                lp.fail("DO MEASUREMENT outside a measurement block")
        elif isinstance(ins, Gate):
            if not seen_initial:
                lp.fail("gate before INITIAL STATE")
            if in_block:
                lp.fail("gates are not allowed inside a measurement block")
        instructions.append(ins)
    if nqubits is None:
        raise ParseError("missing QUBITS header", max(last_line, 1))
    if in_block:
        raise ParseError("unterminated measurement block", last_line)
    return Program(tuple(instructions))


def load_program(path) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())


# ---------------------------------------------------------------- serialization


def format_instruction(ins: Instruction) -> str:
    if isinstance(ins, Qubits):
        return f"QUBITS {ins.n}"
    if isinstance(ins, InitialState):
        return f"INITIAL STATE {ins.index}"
    if isinstance(ins, MpiProcesses):
        return f"MPIPROCESSES {ins.n}"
    if isinstance(ins, Gate):
        args = ([ins.k] if ins.k is not None else []) + list(ins.qubits)
        return " ".join([ins.kind] + [str(a) for a in args])
    if isinstance(ins, Swap):
        firsts = [str(a) for a, _ in ins.pairs]
        seconds = [str(b) for _, b in ins.pairs]
        return " ".join(["SWAP", str(len(ins.pairs))] + firsts + seconds)
    if isinstance(ins, BeginMeasurement):
        return "BEGIN MEASUREMENT"
    if isinstance(ins, DoMeasurement):
        return "DO MEASUREMENT " + " ".join(str(q) for q in ins.qubits)
    if isinstance(ins, EndMeasurement):
        return "END MEASUREMENT"
    raise TypeError(f"not an instruction: {ins!r}")


def serialize_program(program: Program) -> str:
    return "\n".join(format_instruction(i) for i in program.instructions)


def save_program(program: Program, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_program(program) + "\n")


# ---------------------------------------------------------------- analysis


def count_operations(program: Program) -> int:
    """Number of quantum gate operations; swaps, headers and measurements are not counted."""
    return sum(1 for i in program.instructions if isinstance(i, Gate))


def strip_swaps(program: Program) -> Program:
    return Program(tuple(i for i in program.instructions if not isinstance(i, Swap)))


def _operands(ins: Instruction) -> tuple[int, ...]:
    if isinstance(ins, (Gate, DoMeasurement)):
        return ins.qubits
    return ()


def validate_locality(program: Program, m: int) -> list[Diagnostic]:
    """Trace the qubit permutation through the program without touching amplitudes.

    Returns an empty list when every gate and measurement acts on local
    qubits, otherwise a single diagnostic for the first offending line.
    """
    l = program.l
    if not 0 <= m <= l:
        return [Diagnostic(program.instructions[0].line, 1, f"m={m} outside [0, {l}]")]
    sigma = QubitPermutation.identity(l, m)
    for ins in program.instructions:
        if isinstance(ins, Swap):
            try:
                _, sigma = plan_from_pairs(sigma, ins.pairs)
            except (LocalityError, CapacityError) as exc:
                return [Diagnostic(ins.line, 1, f"structural violation: {exc}")]
            continue
        bad = [q for q in _operands(ins) if not sigma.is_local(q)]
        if bad:
            what = format_instruction(ins)
            return [Diagnostic(ins.line, 1, f"'{what}' acts on nonlocal qubit(s) {bad} at m={m}")]
    return []


# ---------------------------------------------------------------- compilation


def _localize(
    qubits: Sequence[int],
    protected: Iterable[int],
    sigma: QubitPermutation,
    k_max: int,
    policy: EvictionPolicy,
) -> Iterator[tuple[list[int], Swap, QubitPermutation]]:
    """Yield (batch, swap, sigma_after) for batches of at most k_max nonlocal qubits."""
    protected = frozenset(protected)
    pending = [q for q in qubits if not sigma.is_local(q)]
    k_cap = min(k_max, sigma.m, sigma.l - sigma.m)
    if pending and k_cap < 1:
        raise CompileError(f"no qubit can be relocalized with m={sigma.m}, k_max={k_max}")
    while pending:
        batch, pending = pending[:k_cap], pending[k_cap:]
        evicted = policy(sigma, len(batch), protected | frozenset(batch))
        pairs = tuple((sigma.pos_to_qubit[p], q) for p, q in zip(evicted, batch))
        _, sigma = plan_from_pairs(sigma, pairs)
        yield batch, Swap(pairs), sigma


def compile_instructions(
    instructions: Iterable[Instruction],
    sigma: QubitPermutation,
    k_max: int = 1,
    eviction_policy: EvictionPolicy = evict_lowest,
) -> tuple[list[Instruction], QubitPermutation]:
    """Insert swap commands so every gate and measurement is local; also returns the final layout."""
    out: list[Instruction] = []
    for ins in instructions:
        if isinstance(ins, Swap):
            raise CompileError(f"line {ins.line}: input already contains SWAP commands")
        if isinstance(ins, Gate):
            if len(ins.qubits) > sigma.m:
                raise CompileError(
                    f"'{format_instruction(ins)}' needs {len(ins.qubits)} local qubits, only m={sigma.m}"
                )
            for _, swap, sigma in _localize(ins.qubits, ins.qubits, sigma, k_max, eviction_policy):
                out.append(swap)
            out.append(ins)
        elif isinstance(ins, DoMeasurement):
            local = [q for q in ins.qubits if sigma.is_local(q)]
            if len(local) == len(ins.qubits):
                out.append(ins)
                continue
            if local:
                out.append(DoMeasurement(tuple(local)))
            for batch, swap, sigma in _localize(ins.qubits, (), sigma, k_max, eviction_policy):
                out.append(swap)
                out.append(DoMeasurement(tuple(batch)))
        else:
            out.append(ins)
    return out, sigma


def insert_swaps(
    logical: Program,
    m: int,
    k_max: int = 1,
    eviction_policy: EvictionPolicy = evict_lowest,
) -> Program:
    """Compile a swap-free program for 2^(l-m) ranks.

    The MPIPROCESSES header is set (or added after INITIAL STATE) to the rank
    count the output was compiled for.
    """
    l = logical.l
    if not 0 <= m <= l:
        raise CompileError(f"m={m} outside [0, {l}]")
    if k_max < 1:
        raise CompileError("k_max must be at least 1")
    n_ranks = 1 << (l - m)
    header = [i for i in logical.instructions if isinstance(i, (Qubits, InitialState))]
    body = [i for i in logical.instructions if not isinstance(i, HEADER_TYPES)]
    compiled, _ = compile_instructions(body, QubitPermutation.identity(l, m), k_max, eviction_policy)
    return Program(tuple(header) + (MpiProcesses(n_ranks),) + tuple(compiled))
