import subprocess
import sys

import pytest

from greedy_peering.cli import main


def run(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        import io
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_no_args(capsys):
    code, _, err = run(capsys)
    assert code == 1 and "usage" in err


def test_bad_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_regime(capsys):
    code, out, _ = run(capsys, "regime", "--n", "1000", "--m", "16", "--d", "8", "--rule", "fifo")
    assert code == 0
    assert out.splitlines()[0] == "miner_stable=Impossible network_stable=Impossible"


def test_construct_pipe_verify(capsys, monkeypatch):
    code, edges, _ = run(capsys, "construct", "uncapped-nash", "12", "4", "2")
    assert code == 0
    code, out, _ = run(capsys, "verify-nash", "--mode", "exhaustive", stdin=edges, monkeypatch=monkeypatch)
    assert code == 0 and "is_nash=true" in out


def test_verify_negative_exit_two(capsys, tmp_path):
    path = tmp_path / "g.edges"
    code, edges, _ = run(capsys, "construct", "random", "20", "3", "2", "1")
    path.write_text(edges)
    code, out, _ = run(capsys, "verify-nash", str(path))
    assert code == 2 and "witness_node=" in out


def test_verify_budget(capsys, tmp_path):
    path = tmp_path / "g.edges"
    _, edges, _ = run(capsys, "construct", "random", "30", "3", "3", "1")
    path.write_text(edges)
    code, out, _ = run(capsys, "verify-nash", str(path), "--budget", "10")
    assert code == 1 and "budget_exceeded=true" in out


def test_construct_wrong_arity(capsys):
    code, _, err = run(capsys, "construct", "uncapped-nash", "12", "4")
    assert code == 1 and "expects" in err


def test_construct_bad_params(capsys):
    code, _, err = run(capsys, "construct", "capped-general-nash", "2", "2", "64")
    assert code == 1 and err.startswith("error:")


def test_check_stability(capsys, tmp_path):
    path = tmp_path / "g.edges"
    _, edges, _ = run(capsys, "construct", "stable-topology", "20", "3", "5", "lifo")
    path.write_text(edges)
    code, out, _ = run(capsys, "check-stability", str(path), "--expect", "network")
    assert code == 0 and "structural_network_stable=true" in out
    code, out, _ = run(capsys, "check-stability", str(path), "--rule", "fifo", "--expect", "network")
    assert code == 2


def test_simulate(capsys, tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("n = 20\nm = 2\nd = 3\nrounds = 3\nrepetitions = 2\n")
    code, out, _ = run(capsys, "simulate", str(cfg), "--output", str(tmp_path / "out"))
    assert code == 0 and (tmp_path / "out" / "aggregate.csv").exists()


def test_simulate_invalid_config(capsys, tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("n = 20\nm = 2\nd = 3\nd_in = 2\n")
    code, _, err = run(capsys, "simulate", str(cfg))
    assert code == 1 and "d_in" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "greedy_peering", "regime", "--n", "200", "--m", "5",
                           "--d", "8", "--rule", "random"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("miner_stable=Exists network_stable=Impossible")
