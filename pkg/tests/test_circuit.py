from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_gates, reference_run
from pqcsim.algorithms import gen_adder, gen_hadamard_sweep
from pqcsim.circuit import (
    BeginMeasurement,
    DoMeasurement,
    EndMeasurement,
    Gate,
    InitialState,
    MpiProcesses,
    Program,
    Qubits,
    Swap,
    count_operations,
    insert_swaps,
    parse_program,
    serialize_program,
    strip_swaps,
    validate_locality,
)
from pqcsim.errors import CompileError, ParseError
from pqcsim.layout import evict_highest
from pqcsim.runner import simulate

DATA = Path(__file__).parent / "data"
SWEEP32 = (DATA / "hadamard32_n32.qc").read_text()


# ---------------------------------------------------------------- parsing


def test_parse_sweep32():
    p = parse_program(SWEEP32)
    assert p.l == 32 and p.declared_ranks == 32
    assert sum(isinstance(i, Gate) and i.kind == "H" for i in p.instructions) == 32
    assert sum(isinstance(i, Swap) for i in p.instructions) == 6
    assert sum(isinstance(i, BeginMeasurement) for i in p.instructions) == 1
    assert sum(isinstance(i, DoMeasurement) for i in p.instructions) == 2


def test_parse_swap_pairs_positionally():
    p = parse_program("QUBITS 32\nSWAP 5 31 1 2 3 4 0 27 28 29 30")
    assert p.body == (Swap(((31, 0), (1, 27), (2, 28), (3, 29), (4, 30))),)


def test_comment_only_body():
    assert parse_program("QUBITS 3\n! only a comment").body == ()
    assert parse_program("QUBITS 3\n# hash comment\n   \n").body == ()


def test_keywords_case_insensitive_and_inline_comments():
    p = parse_program("qubits 3\ninitial state 5 ! note\ncphase -2 0 1\nBegin Measurement\ndo measurement 2\nend measurement")
    assert p.initial_state == 5
    assert p.body[0] == Gate("CPHASE", (0, 1), -2)
    assert p.body[2] == DoMeasurement((2,))


def test_line_numbers_are_kept():
    p = parse_program("QUBITS 2\n\nINITIAL STATE 0\nH 1")
    assert [i.line for i in p.instructions] == [1, 3, 4]


@pytest.mark.parametrize(
    "text,line,col",
    [
        ("QUBITS 4\nINITIAL STATE 0\nFOO 1", 3, 1),
        ("QUBITS 4\nINITIAL STATE 0\nCNOT 1", 3, 6),
        ("QUBITS 4\nINITIAL STATE 0\nH 4", 3, 3),
        ("QUBITS 4\nINITIAL STATE 0\nH 1x", 3, 3),
        ("QUBITS 4\nINITIAL STATE 0\nCNOT 1 1", 3, 8),
        ("QUBITS 4\nSWAP 2 0 1 3", 2, 12),
        ("QUBITS 4\nH 0", 2, 1),
        ("H 0", 1, 1),
        ("", 1, 1),
        ("QUBITS 4\nINITIAL STATE 0\nDO MEASUREMENT 1", 3, 1),
        ("QUBITS 4\nINITIAL STATE 0\nBEGIN MEASUREMENT\nH 1", 4, 1),
        ("QUBITS 4\nINITIAL STATE 0\nBEGIN MEASUREMENT\nBEGIN MEASUREMENT", 4, 1),
        ("QUBITS 4\nINITIAL STATE 0\nEND MEASUREMENT", 3, 1),
        ("QUBITS 4\nINITIAL STATE 0\nBEGIN MEASUREMENT", 3, 1),
        ("QUBITS 4\nINITIAL STATE 16", 2, 15),
        ("QUBITS 4\nQUBITS 4", 2, 1),
        ("QUBITS 4\nINITIAL STATE 0\nH -1", 3, 3),
    ],
)
def test_parse_errors_carry_position(text, line, col):
    with pytest.raises(ParseError) as exc:
        parse_program(text)
    assert (exc.value.line, exc.value.col) == (line, col)
    assert str(exc.value).startswith(f"{line}:{col}: ")


def test_elided_listing_is_reported():
    text = (DATA / "hadamard32_n32_elided.txt").read_text()
    with pytest.raises(ParseError) as exc:
        parse_program(text)
    assert exc.value.line == 6


# ---------------------------------------------------------------- serialization


def test_serialize_empty():
    assert serialize_program(Program.empty(4)) == "QUBITS 4\nINITIAL STATE 0"


def test_serialize_toffoli():
    p = Program.empty(3) + [Gate("TOFFOLI", (0, 1, 2))]
    assert serialize_program(p).splitlines()[-1] == "TOFFOLI 0 1 2"


def test_sweep32_round_trip():
    p = parse_program(SWEEP32)
    text = serialize_program(p)
    assert parse_program(text) == p
    assert serialize_program(parse_program(text)) == text


@st.composite
def programs(draw):
    l = draw(st.integers(1, 8))
    n = draw(st.integers(0, 15))
    seed = draw(st.integers(0, 2**32 - 1))
    body = random_gates(np.random.default_rng(seed), l, n)
    if l >= 2 and draw(st.booleans()):
        body.append(Swap(((0, l - 1),)))
    head = [Qubits(l), InitialState(draw(st.integers(0, (1 << l) - 1)))]
    if draw(st.booleans()):
        head.append(MpiProcesses(draw(st.sampled_from([1, 2, 4]))))
    tail = []
    if draw(st.booleans()):
        qs = draw(st.lists(st.integers(0, l - 1), min_size=1, max_size=l, unique=True))
        tail = [BeginMeasurement(), DoMeasurement(tuple(qs)), EndMeasurement()]
    return Program(tuple(head + body + tail))


@settings(max_examples=200, deadline=None)
@given(programs())
def test_round_trip_property(p):
    assert parse_program(serialize_program(p)) == p


# ---------------------------------------------------------------- compiler


def test_compile_hadamard_sweep_regenerates_sweep32():
    logical = gen_hadamard_sweep(32)
    compiled = insert_swaps(logical, 27, k_max=5)
    assert compiled == parse_program(SWEEP32)


def test_compile_hadamard_sweep_swap_sequence_kmax1():
    compiled = insert_swaps(gen_hadamard_sweep(32, measure=False), 27, k_max=1)
    swaps = [i.pairs for i in compiled.instructions if isinstance(i, Swap)]
    assert swaps == [((0, 27),), ((27, 28),), ((28, 29),), ((29, 30),), ((30, 31),)]


def test_compile_measurement_one_swap5():
    compiled = insert_swaps(gen_hadamard_sweep(32), 27, k_max=5)
    swaps = [i for i in compiled.instructions if isinstance(i, Swap)]
    assert swaps[-1].pairs == ((31, 0), (1, 27), (2, 28), (3, 29), (4, 30))


def test_compile_local_program_unchanged():
    logical = gen_adder([3, 3], [5, 6])
    compiled = insert_swaps(logical, 6, k_max=2)
    assert compiled.body == logical.body
    assert compiled.declared_ranks == 1


def test_compile_sets_mpiprocesses():
    p = parse_program("QUBITS 4\nINITIAL STATE 0\nMPIPROCESSES 16\nH 3")
    c = insert_swaps(p, 2)
    assert c.declared_ranks == 4
    assert sum(isinstance(i, MpiProcesses) for i in c.instructions) == 1


def test_compile_errors():
    with pytest.raises(CompileError):
        insert_swaps(parse_program(SWEEP32), 27)
    p = Program.empty(4) + [Gate("TOFFOLI", (0, 1, 3))]
    with pytest.raises(CompileError):
        insert_swaps(p, 2)
    with pytest.raises(CompileError):
        insert_swaps(p, 5)
    with pytest.raises(CompileError):
        insert_swaps(p, 3, k_max=0)


def test_split_operands_localized_in_one_swap():
    p = Program.empty(6) + [Gate("TOFFOLI", (3, 4, 5))]
    c = insert_swaps(p, 3, k_max=3)
    swaps = [i for i in c.instructions if isinstance(i, Swap)]
    assert len(swaps) == 1 and len(swaps[0].pairs) == 3
    c = insert_swaps(p, 3, k_max=2)
    assert [len(i.pairs) for i in c.instructions if isinstance(i, Swap)] == [2, 1]


def test_one_nonlocal_qubit_costs_one_single_pair_swap():
    for kind, qs in [("H", (5,)), ("CNOT", (0, 5)), ("CPHASE", (5, 1)), ("TOFFOLI", (1, 5, 2))]:
        k = 2 if kind == "CPHASE" else None
        c = insert_swaps(Program.empty(6) + [Gate(kind, qs, k)], 3, k_max=3)
        swaps = [i for i in c.instructions if isinstance(i, Swap)]
        assert len(swaps) == 1 and len(swaps[0].pairs) == 1


def test_pluggable_eviction():
    c = insert_swaps(Program.empty(4) + [Gate("H", (3,))], 2, eviction_policy=evict_highest)
    assert [i.pairs for i in c.instructions if isinstance(i, Swap)] == [((1, 3),)]


# ---------------------------------------------------------------- locality validation


def test_validate_sweep32_symbolically():
    assert validate_locality(parse_program(SWEEP32), 27) == []


def test_validate_reports_nonlocal_gate():
    p = parse_program("QUBITS 32\nINITIAL STATE 0\nH 0\nH 31")
    [d] = validate_locality(p, 27)
    assert d.line == 4 and "31" in d.message
    assert str(d).startswith("4:1: ")


def test_validate_reports_bad_swap():
    p = parse_program("QUBITS 4\nINITIAL STATE 0\nSWAP 1 0 1")
    [d] = validate_locality(p, 2)
    assert d.line == 3 and "structural" in d.message


def test_validate_kmax_above_capacity():
    p = parse_program("QUBITS 6\nINITIAL STATE 0\nSWAP 3 0 1 2 3 4 5")
    assert validate_locality(p, 2)


# ---------------------------------------------------------------- counting


def test_count_operations():
    assert count_operations(gen_hadamard_sweep(27)) == 27
    assert count_operations(Program.empty(3)) == 0
    assert count_operations(parse_program(SWEEP32)) == 32
    assert count_operations(strip_swaps(parse_program(SWEEP32))) == 32


def test_two_register_adder_numbering():
    # 22 initialization gates and the QFT as one block numbered 23, the 66
    # controlled phase shifts 24..89 and the inverse QFT as 90
    p = gen_adder([11, 11], [1365, 682])
    gates = [i for i in p.instructions if isinstance(i, Gate)]
    init = [g for g in gates[:22]]
    assert all(g.kind in ("X", "Y", "XDAG", "YDAG") for g in init)
    assert len(gates) == 22 + 66 + 66 + 66 == count_operations(p)
    block_ops = 22 + 1 + 66 + 1
    assert block_ops == 90


# ---------------------------------------------------------------- compiled semantics


@settings(max_examples=40, deadline=None)
@given(
    l=st.integers(4, 8),
    k_max=st.integers(1, 3),
    log2n=st.integers(1, 3),
    seed=st.integers(0, 2**32 - 1),
)
def test_compiled_is_local_and_equivalent(l, k_max, log2n, seed):
    log2n = min(log2n, l - 3)  # Toffoli needs three local qubits
    m = l - log2n
    rng = np.random.default_rng(seed)
    p = Program.empty(l, int(rng.integers(1 << l))) + random_gates(rng, l, 25)
    c = insert_swaps(p, m, k_max)
    assert validate_locality(c, m) == []
    want, _ = reference_run(p)
    got = simulate(c, 1 << log2n, k_max)
    assert np.abs(got - want).max() < 1e-12
