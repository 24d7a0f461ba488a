import json
import subprocess
import sys

import pytest

from compsim.cli import bundled_hamiltonians, main

DATA = "src/compsim/data/"


def run(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "compsim", *args], capture_output=True, text=True)


@pytest.fixture
def ham(tmp_path):
    from compsim.hamiltonian import Hamiltonian, save_hamiltonian
    p = tmp_path / "xz.json"
    save_hamiltonian(Hamiltonian.from_paulis([1.0, 1.0], ["X", "Z"]), p)
    return str(p)


def test_bundled_set():
    assert set(bundled_hamiltonians()) == {"heisenberg2.json", "ising2.json", "skewed2.json", "xz2.json"}


def test_cost_single_partition(ham, capsys):
    assert main(["cost", "--ham", ham, "--order", "1", "--time", "1", "--eps", "0.1", "--nb", "4", "--a", "0",
                 "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    (row,) = doc["rows"]
    assert row["r"] == 30 and row["c_comp"] == 150


def test_cost_sweep(ham, capsys):
    assert main(["cost", "--ham", ham]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 + 4


def test_partition_schemes(ham, capsys):
    assert main(["partition", "--ham", ham, "--scheme", "gradient", "--order", "1", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["summary"]["final_cost"] <= doc["summary"]["initial_cost"]
    assert main(["partition", "--ham", ham, "--c", "1", "--trials", "200", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["summary"]["moments"]["LA2"]["ok"]


def test_simulate_writes_gates(ham, tmp_path, capsys):
    out = tmp_path / "gates.json"
    assert main(["simulate", "--ham", ham, "--a", "0", "--nb", "2", "--gates-out", str(out)]) == 0
    assert out.exists()
    assert "composite" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["cost", "--ham", "missing.json"],
    ["cost", "--ham", DATA + "xz2.json", "--order", "3"],
    ["cost", "--ham", DATA + "xz2.json", "--eps", "-1"],
    ["cost", "--ham", DATA + "xz2.json", "--a", "0,9"],
    ["cost", "--ham", DATA + "xz2.json", "--nb", "2", "--c", "1"],
    ["partition", "--ham", DATA + "xz2.json", "--scheme", "gradient"],
    ["partition", "--ham", DATA + "xz2.json", "--nb", "1", "--eps", "1e-6"],
    ["experiment", "exp-decay", "--c", "0.5"],
    ["experiment", "crossover", "--eps-grid", "a,b"],
    ["bogus"],
])
def test_config_errors_exit_3(argv):
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(main(argv))
    assert exc.value.code == 3


def test_malformed_hamiltonian_exit_3(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dim": 2, "terms": [{"coeff": 1.0, "pauli_string": "Q"}]}')
    assert run("cost", "--ham", str(bad)).returncode == 3


def test_verify_quick_subset():
    res = run("verify", "--quick", "--only", "trotter,collapse")
    assert res.returncode == 0, res.stderr
    assert "PASS" not in res.stdout and "trotter" in res.stdout


def test_experiment_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["experiment", "exp-decay", "--l-grid", "16,32", "--trials", "500", "--seed", "7"]
    assert run(*args, "--out", str(a)).returncode == 0
    assert run(*args, "--out", str(b)).returncode == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith("# checks=")
