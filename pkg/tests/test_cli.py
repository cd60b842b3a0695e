import json
import subprocess
import sys

import pytest

from csldg.cli import main


def write(tmp_path, data, name="c.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_run_writes_outputs(tmp_path, capsys):
    cfg = write(tmp_path, {"nx": 8, "degree": 2, "outputs": {"metadata": str(tmp_path / "meta.json")}})
    code = main(["run", "--config", cfg, "-o", str(tmp_path / "m.csv"), "--dump-field", str(tmp_path / "f.txt")])
    assert code == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "mesh,l2,l2_order,l1,l1_order,linf,linf_order,mass_drift,stability_ratio,wall_s"
    assert (tmp_path / "m.csv").read_text() == out
    assert (tmp_path / "f.txt").read_text().startswith("# csldg modal field")
    assert json.loads((tmp_path / "meta.json").read_text())["steps"] >= 1


def test_run_is_byte_identical(tmp_path):
    cfg = write(tmp_path, {"problem": "swirling", "nx": 8, "degree": 2, "cfl": 2.5})
    for name in ("a", "b"):
        assert main(["run", "--config", cfg, "--threads", "1", "--no-timing", "-o", str(tmp_path / f"{name}.csv"),
                     "--dump-field", str(tmp_path / f"{name}.txt")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()


@pytest.mark.parametrize("content", ['{"nx": 8, "colour": 1}', "{not json", '[1, 2]', '{"degree": "Q2", "cfl": 0}'])
def test_config_errors_exit_2(tmp_path, content, capsys):
    path = tmp_path / "bad.json"
    path.write_text(content)
    assert main(["run", "--config", str(path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "none.json")]) == 2


def test_crossing_exits_3(tmp_path, capsys):
    cfg = write(tmp_path, {"problem": "swirling", "nx": 8, "degree": 1, "cfl": 12, "tracer_order": 2})
    assert main(["run", "--config", cfg]) == 3
    assert "characteristics crossed" in capsys.readouterr().err


def test_convergence_and_plot(tmp_path, capsys):
    pytest.importorskip("matplotlib")
    cfg = write(tmp_path, {"nx": 4, "degree": 1, "cfl": 2.0})
    assert main(["convergence", "--config", cfg, "--meshes", "4", "8", "16", "--plot", str(tmp_path / "p.svg")]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert len(rows) == 4 and rows[3].startswith("16x16,")
    assert (tmp_path / "p.svg").exists()
    assert main(["convergence", "--config", cfg, "--meshes", "4", "12"]) == 2


def test_splitting_override(tmp_path, capsys):
    sched = tmp_path / "s.txt"
    sched.write_text("x 0.5\ny 1\nx 0.5\n")
    assert main(["run", "--splitting", str(sched), "--no-timing"]) == 0
    a = capsys.readouterr().out
    assert main(["run", "--splitting", "strang2", "--no-timing"]) == 0
    assert capsys.readouterr().out == a


def test_bench(tmp_path, capsys):
    cfg = write(tmp_path, {"nx": 4, "degree": 1})
    assert main(["bench", "--config", cfg, "--meshes", "4", "-o", str(tmp_path / "b.csv")]) == 0
    assert capsys.readouterr().out.startswith("mesh,t_svs,t_ibs,ratio\n4x4,")
    assert (tmp_path / "b.csv.meta.json").exists()


def test_verify_exit_codes(tmp_path, capsys):
    cfg = write(tmp_path, {"nx": 8})
    assert main(["verify", "--config", cfg, "-o", str(tmp_path / "v.csv")]) == 0
    assert "mass_balance" in (tmp_path / "v.csv").read_text()
    assert main(["verify", "--config", cfg, "--inject-mass-error", "1e-3"]) == 1
    assert "mass_balance" in capsys.readouterr().out


def test_console_script(tmp_path):
    out = subprocess.run([sys.executable, "-m", "csldg.cli", "run", "--no-timing"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("mesh,")
