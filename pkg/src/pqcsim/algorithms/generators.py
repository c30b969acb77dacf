"""Logical (swap-free) benchmark and validation circuits."""
from __future__ import annotations

from itertools import cycle
from typing import Sequence

from ..circuit import BeginMeasurement, DoMeasurement, EndMeasurement, Gate, InitialState, Program, Qubits
from ..errors import DomainError

# Doubled gates that flip |0> to |1> up to a phase, used in turn for each set bit.
INIT_PAIRS = ("X", "Y", "XDAG", "YDAG")


def measure_all(qubits: Sequence[int]) -> list:
    return [BeginMeasurement(), DoMeasurement(tuple(qubits)), EndMeasurement()]


def gen_hadamard_sweep(l: int, measure: bool = True) -> Program:
    if l < 1:
        raise DomainError("need at least one qubit")
    body = [Gate("H", (q,)) for q in range(l)]
    if measure:
        body += measure_all(range(l))
    return Program.empty(l) + body


def gen_qft(qubits: Sequence[int], inverse: bool = False) -> list[Gate]:
    """Fourier network on `qubits`, least significant first.

    qubits[j] carries weight 2^j on input. The output comes out bit-reversed:
    frequency bit i lands on qubits[n-1-i]. The inverse is the reversed
    sequence with every phase negated.
    """
    q = list(qubits)
    if not q:
        raise DomainError("QFT needs at least one qubit")
    gates: list[Gate] = []
    for j in reversed(range(len(q))):
        gates.append(Gate("H", (q[j],)))
        for i in reversed(range(j)):
            gates.append(Gate("CPHASE", (q[i], q[j]), j - i + 1))
    if inverse:
        gates = [g if g.k is None else Gate(g.kind, g.qubits, -g.k) for g in reversed(gates)]
    return gates


def register_qubits(index: int, width: int) -> list[int]:
    return list(range(index * width, (index + 1) * width))


def init_register(qubits: Sequence[int], value: int, pairs=None) -> list[Gate]:
    """Set each 1-bit of `value` with a doubled gate, cycling through INIT_PAIRS."""
    pairs = pairs if pairs is not None else cycle(INIT_PAIRS)
    gates = []
    for i, q in enumerate(qubits):
        if (value >> i) & 1:
            kind = next(pairs)
            gates += [Gate(kind, (q,)), Gate(kind, (q,))]
    return gates


def gen_adder(register_sizes: Sequence[int], values: Sequence[int], measure: bool = True) -> Program:
    """Add every register into the last one, modulo 2^m.

    Register r occupies qubits r*m .. r*m+m-1. The accumulator is
    Fourier-transformed, each source register adds its value through
    controlled phase shifts, and the inverse transform brings the sum back.
    """
    sizes = list(register_sizes)
    if len(sizes) < 2 or len(sizes) != len(values):
        raise DomainError("need at least two registers and one value per register")
    m = sizes[0]
    if m < 1 or any(w != m for w in sizes):
        raise DomainError(f"registers must share one positive width, got {sizes}")
    for v in values:
        if not 0 <= v < 1 << m:
            raise DomainError(f"value {v} does not fit in {m} qubits")

    n = len(sizes)
    regs = [register_qubits(r, m) for r in range(n)]
    acc = regs[-1]
    pairs = cycle(INIT_PAIRS)
    body: list = []
    for reg, v in zip(regs, values):
        body += init_register(reg, v, pairs)
    body += gen_qft(acc)
    for src in regs[:-1]:
        for j in range(m):
            for i in range(j + 1):
                body.append(Gate("CPHASE", (src[i], acc[j]), j - i + 1))
    body += gen_qft(acc, inverse=True)
    if measure:
        body += measure_all(range(n * m))
    return Program((Qubits(n * m), InitialState(0))) + body


def adder_sum(values: Sequence[int], m: int) -> int:
    return sum(values) % (1 << m)


def accumulator_value(expectations: dict, register_sizes: Sequence[int]) -> int:
    """Read the last register from (near-)classical qubit expectations."""
    m = register_sizes[-1]
    base = m * (len(register_sizes) - 1)
    return sum(int(round(expectations[base + i])) << i for i in range(m))
