import json
import subprocess
import sys

import pytest

from ksphere.cli import COMMANDS, build_parser, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_count_scalar(capsys):
    assert run(capsys, "count", "--k", "2", "--d", "4", "--lambda", "4") == (0, "24\n", "")


def test_weyl_scalar(capsys):
    code, out, _ = run(capsys, "weyl", "--N", "100", "--t", "0", "--xi", "0", "--k", "3")
    assert code == 0 and out == "100+0i\n"


def test_weyl_fraction_argument(capsys):
    code, out, _ = run(capsys, "weyl", "--N", "7", "--t", "1/7", "--k", "2", "--format", "json")
    payload = json.loads(out)
    assert code == 0 and payload["result"]["abs"] == pytest.approx(7**0.5)


def test_density_fit_json(capsys):
    code, out, _ = run(capsys, "density-fit", "--kind", "lacunary", "--base", "2", "--k", "2", "--d", "5", "--Lmax", "4096")
    payload = json.loads(out)
    assert code == 0 and payload["result"]["slope"] <= 0.15


def test_bare_invocation_prints_help(capsys):
    code, out, _ = run(capsys)
    assert code == 0 and "usage" in out and "count" in out


def test_help_for_command(capsys):
    code, out, _ = run(capsys, "--help", "count")
    assert code == 0 and "N(r)" in out


def test_unknown_command_suggests(capsys):
    code, _, err = run(capsys, "cuont")
    assert code == 2 and "count" in err


def test_invalid_input_exit_code(capsys):
    assert run(capsys, "count", "--k", "1", "--d", "4", "--lambda", "4")[0] == 2
    assert run(capsys, "count", "--k", "2", "--d", "4")[0] == 2
    assert run(capsys, "weyl", "--N", "5", "--t", "abc", "--k", "2")[0] == 2


def test_work_bound_exit_code(capsys, monkeypatch):
    monkeypatch.setenv("KSPHERE_WORK_BOUND", "100")
    assert run(capsys, "count", "--k", "2", "--d", "6", "--lambda", "3000")[0] == 3


def test_io_exit_code(capsys, tmp_path):
    missing = tmp_path / "nope" / "out.json"
    assert run(capsys, "count", "--k", "2", "--d", "3", "--lambda", "9", "--output", str(missing))[0] == 4
    assert run(capsys, "count", "--config", str(tmp_path / "absent.cfg"))[0] == 4


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sphere\nk = 2\nd = 4\nlambda = 9\n")
    assert run(capsys, "count", "--config", str(cfg))[1] == "104\n"
    assert run(capsys, "count", "--config", str(cfg), "--lambda", "4")[1] == "24\n"


def test_output_both_and_manifest(capsys, tmp_path):
    out = tmp_path / "series.json"
    code, stdout, _ = run(capsys, "series", "--k", "2", "--d", "2", "--Lmax", "5", "--format", "both", "--output", str(out))
    assert code == 0 and stdout == ""
    assert (tmp_path / "series.csv").read_text().splitlines()[:3] == ["lambda,count", "0,1", "1,4"]
    assert json.loads((tmp_path / "series.json").read_text())["rows"][5]["count"] == 8
    manifest = json.loads((tmp_path / "series.json.manifest.json").read_text())
    assert manifest["version"] and manifest["config"]["Lmax"] == 5 and "wall_time_seconds" in manifest


def test_grid_file_roundtrip(capsys, tmp_path):
    grid = tmp_path / "avg.f64"
    assert run(capsys, "average", "--k", "2", "--d", "2", "--lambda", "5", "--M", "16", "--grid-out", str(grid))[0] == 0
    # the averaged input reaches the sphere, so a second pass needs periodic semantics
    assert run(capsys, "average", "--k", "2", "--d", "2", "--lambda", "5", "--M", "16", "--input", str(grid))[0] == 2
    code, out, _ = run(capsys, "average", "--k", "2", "--d", "2", "--lambda", "5", "--M", "16", "--input", str(grid), "--torus")
    payload = json.loads(out)
    assert code == 0 and payload["result"]["input"]["l1"] == pytest.approx(1.0)


def test_every_command_has_help(capsys):
    build_parser()
    assert len(COMMANDS) == 25
    for name in COMMANDS:
        code, out, _ = run(capsys, "--help", name)
        assert code == 0 and name in out


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ksphere", "count", "--k", "3", "--d", "4", "--lambda", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "8\n"
