import numpy as np
import pytest

import bivirus as bv
from bivirus.cli import main


@pytest.fixture()
def graphs(tmp_path):
    c6 = tmp_path / "c6.txt"
    c6.write_text(bv.cycle_graph(6).to_edge_list())
    w6 = tmp_path / "wheel6.txt"
    w6.write_text(bv.wheel_graph(6).to_edge_list())
    return {"c6": str(c6), "w6": str(w6), "dir": tmp_path}


def test_spectra_stdout_and_csv(graphs, capsys):
    out = graphs["dir"] / "out"
    status = main(["--out-dir", str(out), "spectra",
                   "--graph-a", graphs["c6"], "--graph-b", graphs["w6"]])
    assert status == 0
    captured = capsys.readouterr().out
    lam_a = float([line for line in captured.splitlines()
                   if line.startswith("lambda_A=")][0].split("=")[1])
    assert lam_a == pytest.approx(2.0, abs=1e-9)
    lines = (out / "spectra.csv").read_text().splitlines()
    assert lines[0] == "graph,lambda,d_min,d_max"
    assert lines[1].startswith("A,2.0")
    assert (out / "run_info.txt").read_text().startswith("command=spectra")


def test_check_assumptions_outputs(graphs, capsys):
    out = graphs["dir"] / "chk"
    status = main(["--out-dir", str(out), "check-assumptions",
                   "--graph-a", graphs["c6"], "--rates1", "case3:alpha=2,k=2",
                   "--samples", "8", "--seed", "1"])
    assert status == 0
    body = (out / "assumptions.csv").read_text()
    assert body.startswith("virus,check,passed,witnesses\n")
    assert "1,A1,True,0" in body
    dfr = (out / "dfr.csv").read_text().splitlines()
    assert dfr[0] == "virus,satisfied,min_margin,argmin"
    assert dfr[1].startswith("1,True")


def test_classify_virus_free(graphs, capsys):
    out = graphs["dir"] / "cls"
    status = main(["--out-dir", str(out), "classify",
                   "--graph-a", graphs["c6"], "--graph-b", graphs["c6"],
                   "--rates1", "linear:beta=0.4,delta=1",
                   "--rates2", "linear:beta=0.4,delta=1"])
    assert status == 0
    assert "outcome=VirusFree" in capsys.readouterr().out
    header = (out / "verdict.csv").read_text().splitlines()[0]
    assert header.startswith("outcome,lambda_g0")


def test_simulate_zero_start_constant(graphs):
    out = graphs["dir"] / "sim0"
    status = main(["--out-dir", str(out), "simulate",
                   "--graph-a", graphs["c6"], "--graph-b", graphs["c6"],
                   "--rates1", "linear:beta=1,delta=1",
                   "--rates2", "linear:beta=1,delta=1",
                   "--x0-const", "0", "--y0-const", "0"])
    assert status == 0
    rows = (out / "trajectory_000.csv").read_text().splitlines()
    assert len(rows) == 2  # header + single converged state
    summary = (out / "summary.csv").read_text().splitlines()
    assert summary[1].endswith("converged")


def test_simulate_seeded_random_starts_deterministic(graphs):
    args = ["simulate",
            "--graph-a", graphs["c6"], "--graph-b", graphs["w6"],
            "--rates1", "linear:beta=0.7,delta=1",
            "--rates2", "linear:beta=0.5,delta=1",
            "--starts", "2", "--seed", "11", "--t-max", "50"]
    out1 = graphs["dir"] / "sim1"
    out2 = graphs["dir"] / "sim2"
    assert main(["--out-dir", str(out1)] + args) == 0
    assert main(["--out-dir", str(out2)] + args) == 0
    for name in ("trajectory_000.csv", "trajectory_001.csv", "summary.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_sweep_outputs_and_thread_determinism(graphs, monkeypatch):
    args = ["sweep", "--graph-a", graphs["c6"], "--graph-b", graphs["w6"],
            "--grid1", "4", "--grid2", "4"]
    out1 = graphs["dir"] / "sw1"
    out2 = graphs["dir"] / "sw2"
    monkeypatch.setenv("BIVIRUS_THREADS", "1")
    assert main(["--out-dir", str(out1)] + args) == 0
    monkeypatch.setenv("BIVIRUS_THREADS", "3")
    assert main(["--out-dir", str(out2)] + args) == 0
    assert (out1 / "regions.csv").read_bytes() == (out2 / "regions.csv").read_bytes()
    assert (out1 / "curves.csv").read_bytes() == (out2 / "curves.csv").read_bytes()
    assert (out1 / "regions.csv").read_text().splitlines()[0] == \
        "tau1,tau2,region,lambda_g0,lambda_h0,lambda_u,lambda_v"


def test_bracket_at_coexistence_point(graphs, capsys):
    out = graphs["dir"] / "brk"
    status = main(["--out-dir", str(out), "bracket",
                   "--graph-a", graphs["c6"], "--graph-b", graphs["w6"],
                   "--rates1", "linear:beta=1.467,delta=1",
                   "--rates2", "linear:beta=0.8697,delta=1"])
    assert status == 0
    lines = (out / "bracket.csv").read_text().splitlines()
    assert lines[0] == "node,lower_x,lower_y,upper_x,upper_y,x_star,y_star,u,v"
    assert len(lines) == 7


def test_bracket_fails_cleanly_off_coexistence(graphs, capsys):
    status = main(["--out-dir", str(graphs["dir"] / "brkfail"), "bracket",
                   "--graph-a", graphs["c6"], "--graph-b", graphs["c6"],
                   "--rates1", "linear:beta=1,delta=1",
                   "--rates2", "linear:beta=0.75,delta=1"])
    assert status == 1
    assert "error:" in capsys.readouterr().err


def test_missing_file_is_config_error(graphs):
    with pytest.raises(SystemExit) as err:
        main(["spectra", "--graph-a", str(graphs["dir"] / "nope.txt")])
    assert err.value.code == 2


def test_malformed_graph_is_module_error(graphs, capsys):
    bad = graphs["dir"] / "bad.txt"
    bad.write_text("0 1\n1 1\n")
    status = main(["--out-dir", str(graphs["dir"] / "badout"),
                   "spectra", "--graph-a", str(bad)])
    assert status == 1
    assert "self-loop" in capsys.readouterr().err
