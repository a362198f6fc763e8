import csv
import json
import subprocess
import sys

import pytest

from qpir.cli import main


@pytest.fixture
def db3(tmp_path):
    path = tmp_path / "db.txt"
    path.write_text("10\n01\n11\n")
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_run_single_bit(tmp_path, capsys):
    path = tmp_path / "one.txt"
    path.write_text("0\n")
    code, out, _ = run(capsys, "run", str(path), "--index", "1")
    assert code == 0
    assert out.strip() == "item=0 qubits=4 classical=1"


def test_run_three_items(db3, capsys):
    code, out, _ = run(capsys, "run", db3, "--index", "2", "--backend", "dense")
    assert code == 0 and "item=01 qubits=10" in out


def test_run_json_byte_identical(db3, capsys):
    _, first, _ = run(capsys, "run", db3, "--index", "2", "--json")
    _, second, _ = run(capsys, "run", db3, "--index", "2", "--json", "--seed", "12345")
    assert first == second
    doc = json.loads(first)
    assert doc["total_qubits"] == 10 and doc["output"] == "01"


def exit_code(argv):
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


@pytest.mark.parametrize("argv", [
    ["run", "{db}", "--index", "9"],
    ["run", "{missing}", "--index", "1"],
    ["run", "{bad}", "--index", "1"],
    ["run", "{db}"],
    ["run", "{db}", "--index", "1", "--backend", "quantum"],
    ["attack", "{db}", "--index", "1", "--honest"],
    ["verify"],
    ["bench", "--sweep", "width=3"],
])
def test_usage_errors_exit_2(db3, tmp_path, capsys, argv):
    bad = tmp_path / "bad.txt"
    bad.write_text("01\n111\n")
    fmt = {"db": db3, "missing": str(tmp_path / "nope.txt"), "bad": str(bad)}
    assert exit_code([a.format(**fmt) for a in argv]) == 2
    assert capsys.readouterr().err


def test_capacity_exit_code(db3, capsys):
    code, _, err = run(capsys, "run", db3, "--index", "1", "--backend", "dense",
                       "--dense-cap", "4")
    assert code == 3 and "capacity" in err


def test_verify_exhaustive_pass(capsys):
    code, out, _ = run(capsys, "verify", "--exhaustive", "2", "3", "--backend", "both")
    assert code == 0
    assert out.count("PASS") == 2


def test_verify_file_json(db3, capsys):
    code, out, _ = run(capsys, "verify", db3, "--json")
    assert code == 0
    assert json.loads(out)["sparse"]["passed"] is True


def test_verify_negative_control(capsys):
    code, out, _ = run(capsys, "verify", "--exhaustive", "1", "2", "--inject-fault", "z-as-x")
    assert code == 1 and "FAIL" in out


def test_attack_outputs(db3, tmp_path, capsys):
    code, out, _ = run(capsys, "attack", db3, "--index", "3")
    assert code == 0 and "recovered index 3: SUCCESS" in out
    rep = tmp_path / "rep.txt"
    rep.write_text("1\n1\n0\n")
    code, out, _ = run(capsys, "attack", str(rep), "--index", "2")
    assert code == 0 and "index ambiguous among {1, 2}" in out
    code, out, _ = run(capsys, "attack", str(rep), "--index", "3", "--json")
    assert json.loads(out)["candidate_indices"] == [3]


def test_retrieve_bit(tmp_path, capsys):
    path = tmp_path / "bits.txt"
    path.write_text("1011\n")
    code, out, _ = run(capsys, "retrieve-bit", str(path), "--index", "3")
    assert code == 0 and out.startswith("bit=1 qubits=8 (s=2)")
    path.write_text("1" * 17)
    _, out, _ = run(capsys, "retrieve-bit", str(path), "--index", "17")
    assert "qubits=20" in out and "classical=17" in out
    path.write_text("01" * 32)
    _, out, _ = run(capsys, "retrieve-bit", str(path), "--index", "64", "--json")
    doc = json.loads(out)
    assert doc["total_qubits"] == 32 and doc["output"] is not None
    assert doc["block_plan"] == {"n": 64, "s": 8, "j": 8, "offset": 8}


def test_bench_csv_and_figure(tmp_path, capsys):
    out_csv = tmp_path / "bench.csv"
    code, _, _ = run(capsys, "bench", "--sweep", "ell=4,16", "--sweep", "r=4",
                     "--csv", str(out_csv))
    assert code == 0
    rows = list(csv.reader(out_csv.open()))
    assert rows[0] == ["ell", "r", "backend", "quantum_qubits", "classical_bits", "wall_ms"]
    body = {(r[0], r[1], r[2]): r for r in rows[1:]}
    assert body[("4", "4", "dense")][3:5] == ["16", "16"]
    assert body[("4", "4", "sparse")][3:5] == ["16", "16"]
    assert body[("16", "4", "dense")][5] == "skipped(dense)"
    assert body[("16", "4", "sparse")][3] == "40"
    fig = tmp_path / "bench.png"
    assert fig.exists() and fig.stat().st_size > 1000


def test_bench_deterministic_without_timing(capsys):
    argv = ["bench", "--sweep", "ell=2^1..3", "--sweep", "r=ell", "--no-timing"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    assert first.splitlines()[1:] == [
        "2,2,dense,8,4,", "2,2,sparse,8,4,",
        "4,4,dense,16,16,", "4,4,sparse,16,16,",
        "8,8,dense,,64,skipped(dense)", "8,8,sparse,32,64,",
    ]


def test_console_script_entry_point(db3):
    proc = subprocess.run([sys.executable, "-m", "qpir.cli", "run", db3, "--index", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "item=10" in proc.stdout


def test_env_dense_cap(db3, monkeypatch, capsys):
    monkeypatch.setenv("QPIR_DENSE_CAP", "5")
    code, _, _ = run(capsys, "run", db3, "--index", "1", "--backend", "dense")
    assert code == 3


def test_bench_unsimulable_rows_skipped(capsys):
    code, out, _ = run(capsys, "bench", "--sweep", "ell=256", "--sweep", "r=ell",
                       "--backend", "sparse", "--no-timing")
    assert code == 0
    assert out.splitlines()[1] == "256,256,sparse,,65536,skipped(sparse)"


def test_bench_large_sparse_row(capsys):
    code, out, _ = run(capsys, "bench", "--sweep", "ell=1024", "--sweep", "r=16",
                       "--backend", "sparse")
    row = out.splitlines()[1].split(",")
    assert row[:5] == ["1024", "16", "sparse", "2080", "16384"]
    assert float(row[5]) > 0
