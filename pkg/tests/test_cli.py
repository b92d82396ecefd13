import json
import shutil
import subprocess

import pytest

from mesofd.cli import main


def test_lattice_json(capsys):
    assert main(["lattice", "rD2Q9", "--json"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["valid"] and len(info["weights"]) == 9
    assert info["cs2"] == pytest.approx(1 / 3)


def test_lattice_invalid_exit_code(capsys):
    assert main(["lattice", "rd2q5i", "--d0", "0.7,0.7", "--c", "1"]) == 2
    assert "weights out of" in capsys.readouterr().err


def test_scheme_preset(capsys):
    assert main(["scheme", "preset", "trt", "--param", "s_minus=1.5", "--dt", "0.1", "--cs2", "0.3333333333333333",
                 "--json"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["A"]["A10"] == pytest.approx(info["A"]["A11"])
    assert info["pde"]["kind"] == "ncde"


def test_option_forms(capsys):
    assert main(["lattice", "--name", "rd2q9", "--d0", "0.333333,0.333333", "--c", "1,1"]) == 0
    assert "valid: True" in capsys.readouterr().out
    assert main(["scheme", "preset", "--name", "trt", "--s-minus", "1.2", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["scheme"]["name"] == "trt_magic(s-=1.2)"
    assert main(["stability", "--preset", "srt", "--lattice", "rd2q9", "--d0", "0.3333", "--u", "1,1",
                 "--alpha", "0.01", "--dt", "0.166667", "--scan", "64"]) == 0
    assert "verdict:" in capsys.readouterr().out


def test_scheme_solve(capsys):
    assert main(["scheme", "solve", "--a0", "0.25", "--json"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["residual"] <= 1e-13 and info["ncde_consistent"]


def test_unknown_preset_exit_code(capsys):
    assert main(["scheme", "preset", "mrt"]) == 2


def test_stability_table_rows(capsys):
    # row 1 of the stability table: dx = 1/10, dt = 1/6, D = 0.01
    assert main(["stability", "--preset", "example", "--param", "n=2", "--param", "case=1",
                 "--alpha", "0.01", "--dt", str(1 / 6), "--u", "1,1", "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["u2_over_cs2"] == pytest.approx(50 / 3)
    assert out["max_modulus"] > 1.0 and out["verdict"] == "unstable"


def test_stability_two_level_text(capsys):
    assert main(["stability", "--preset", "linear_two_level", "--param", "ratio=1.8", "--alpha", "0.009",
                 "--dt", "0.01", "--u", "0.3,0.3", "--lam", "0"]) == 0
    out = capsys.readouterr().out
    assert "two_level:ratio_bound" in out and "bound:advection" in out
    assert "verdict: stable" in out


def test_run_writes_csv_and_sidecar(tmp_path, capsys):
    out = tmp_path / "field.csv"
    assert main(["run", "--example", "3", "--case", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,y,phi" and len(lines) == 1 + 6 * 6
    side = json.loads((tmp_path / "field.json").read_text())
    assert side["gre"] == pytest.approx(2.856e-4, rel=1e-3)
    assert "GRE" in capsys.readouterr().out


def test_converge_csv(tmp_path, capsys):
    out = tmp_path / "t4.csv"
    assert main(["converge", "--example", "3", "--case", "1", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "Nx,Nt,GRE,order" and len(rows) == 5
    assert rows[1].startswith("5,10,2.85")


def test_converge_config(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[problem]\npde = ncde\nux = 0.5\n[grid]\nnx = 10\nnt = 12\n")
    assert main(["converge", "--config", str(cfg)]) == 0
    assert capsys.readouterr().out.startswith("Nx,Nt,GRE,order\n10,12,")


@pytest.mark.skipif(shutil.which("mesofd") is None, reason="console script not installed")
def test_console_script():
    r = subprocess.run(["mesofd", "lattice", "rd3q7"], capture_output=True, text=True)
    assert r.returncode == 0 and "rD3Q7" in r.stdout
