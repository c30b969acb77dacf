import json
import subprocess
import sys

import pytest

from pqcsim.algorithms.generators import gen_hadamard_sweep
from pqcsim.circuit import insert_swaps, load_program, parse_program, save_program
from pqcsim.cli import EXIT_CODES, bench_program, cmd_bench, cmd_run, cmd_shor, format_bench, main, shor_payload
from pqcsim.algorithms.shor import choose_registers

from test_shor import PUBLISHED_247


@pytest.fixture
def sweep10(tmp_path):
    # the 32-qubit listing scaled down: 10 qubits over 32 ranks leaves m=5
    path = tmp_path / "sweep10.qc"
    save_program(insert_swaps(gen_hadamard_sweep(10), 5, k_max=5), path)
    return path


def test_run_scaled_sweep(sweep10, tmp_path):
    rep = cmd_run(sweep10, report_path=tmp_path / "r.json")
    assert rep.n_ranks == 32
    assert set(rep.expectations) == set(range(10))
    assert all(abs(v - 0.5) < 1e-10 for v in rep.expectations.values())
    saved = json.loads((tmp_path / "r.json").read_text())
    assert saved["n_ranks"] == 32 and saved["n_ops"] == 10


def test_run_report_is_deterministic_without_timings(sweep10):
    a = cmd_run(sweep10, sample_count=8, seed=3)
    b = cmd_run(sweep10, sample_count=8, seed=3)
    assert a.to_json(timings=False) == b.to_json(timings=False)
    assert "wall_time_seconds" not in a.payload(timings=False)


def test_main_run_prints_expectations(sweep10, capsys):
    assert main(["run", str(sweep10)]) == 0
    out = capsys.readouterr().out
    assert "N=32" in out and "<Q9> = 0.5000000000" in out


def test_main_run_bad_rank_count_is_domain_error(sweep10, capsys):
    assert main(["run", str(sweep10), "--ranks", "3", "--recompile"]) == EXIT_CODES["domain"]
    assert "domain error" in capsys.readouterr().err


def test_main_run_locality_violation(tmp_path, capsys):
    path = tmp_path / "bad.qc"
    path.write_text("QUBITS 4\nINITIAL STATE 0\nMPIPROCESSES 2\nSWAP 1 0 3\nH 0\n")
    assert main(["run", str(path)]) == EXIT_CODES["locality"]
    assert "locality error" in capsys.readouterr().err


def test_main_parse_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.qc"
    path.write_text("QUBITS 4\nINITIAL STATE 0\nFOO 1\n")
    assert main(["run", str(path)]) == EXIT_CODES["parse"]
    assert ":3:1:" in capsys.readouterr().err


def test_main_missing_file_is_usage_error(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.qc")]) == 2


def test_adder_through_run_at_four_ranks(tmp_path):
    path = tmp_path / "add.qc"
    assert main(["gen", "adder", "--width", "5", "13", "22", "-o", str(path)]) == 0
    rep = cmd_run(path, n_ranks=4, k_max=2)
    acc = sum(round(rep.expectations[5 + i]) << i for i in range(5))
    assert acc == (13 + 22) % 32


def test_gen_compile_validate_round_trip(tmp_path, capsys):
    logical = tmp_path / "h.qc"
    compiled = tmp_path / "h8.qc"
    assert main(["gen", "hadamard", "12", "-o", str(logical)]) == 0
    assert main(["compile", str(logical), "--ranks", "8", "--kmax", "3", "-o", str(compiled)]) == 0
    prog = load_program(compiled)
    assert prog.declared_ranks == 8 and prog.has_swaps
    assert main(["validate", str(compiled)]) == 0
    assert "ok" in capsys.readouterr().out
    # the logical program is not local at 8 ranks
    assert main(["validate", str(logical), "--ranks", "8"]) == EXIT_CODES["locality"]


def test_gen_to_stdout(capsys):
    assert main(["gen", "qft", "3"]) == 0
    prog = parse_program(capsys.readouterr().out)
    assert prog.l == 3


@pytest.mark.parametrize("ranks", [1, 2, 8])
def test_shor_15(ranks):
    _, res = cmd_shor(15, n_ranks=ranks)
    assert set(res.factors) == {3, 5}


def test_shor_21_with_base_6_factors_immediately():
    rep, res = cmd_shor(21, y=6)
    assert set(res.factors) == {3, 7}
    assert rep is None


def test_shor_247_expectations(tmp_path):
    _, res = cmd_shor(247, y=194, n_ranks=4, report_path=tmp_path / "s.json")
    assert res.r == 18 and set(res.factors) == {13, 19}
    assert max(abs(a - b) for a, b in zip(res.expectations, PUBLISHED_247)) < 5e-4
    saved = json.loads((tmp_path / "s.json").read_text())
    assert saved["r"] == 18 and saved["run"]["n_ranks"] == 4


def test_shor_payload_is_deterministic():
    params = choose_registers(15, y=7)
    a = shor_payload(params, cmd_shor(15, y=7, seed=5)[1], timings=False)
    b = shor_payload(params, cmd_shor(15, y=7, seed=5)[1], timings=False)
    assert a == b


def test_main_shor_domain_error(capsys):
    assert main(["shor", "15", "--y", "15"]) == EXIT_CODES["domain"]


def test_bench_hadamard_rows():
    rows = cmd_bench("hadamard", [1, 2, 4], qubits=16)
    assert [r.report.n_ranks for r in rows] == [1, 2, 4]
    for r in rows:
        c = r.columns
        assert c["L"] == 16 and c["N_O"] == 16
        assert c["t_E"] > 0 and c["t_CPU"] > 0
    text = format_bench(rows)
    assert len(text.splitlines()) == 4


def test_bench_adder_width_override():
    rows = cmd_bench("adder-3x11", [1, 2], width=4)
    assert all(r.result == (292 + 585 + 1170) % 16 for r in rows)
    assert rows[0].report.l == 12


def test_bench_program_unknown_suite():
    with pytest.raises(ValueError):
        bench_program("nope")


def test_bench_unknown_suite_is_argparse_error():
    with pytest.raises(SystemExit) as exc:
        main(["bench", "nope"])
    assert exc.value.code == 2


def test_bench_report_file(tmp_path):
    out = tmp_path / "b.json"
    assert main(["bench", "qft", "--qubits", "8", "--ranks", "1", "2", "--report", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert [r["N"] for r in rows] == [1, 2]


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "pqcsim", "gen", "hadamard", "2"],
                         capture_output=True, text=True, check=True).stdout
    assert out.split() == ["QUBITS", "2", "INITIAL", "STATE", "0", "H", "0", "H", "1",
                           "BEGIN", "MEASUREMENT", "DO", "MEASUREMENT", "0", "1", "END", "MEASUREMENT"]
