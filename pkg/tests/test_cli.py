import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from quasiground.asymptotics import SweepRecord
from quasiground.cli import RunConfig, fmt, main, parse_potential
from quasiground.errors import ConfigError
from quasiground.field import read_field_csv
from quasiground.profile import read_profile_csv


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.delenv("QUASIGROUND_OUT", raising=False)
    return tmp_path


def _run(argv, out, capsys):
    code = main(argv + ["--out", str(out)])
    return code, capsys.readouterr()


def _data_files(d):
    return sorted(f for f in os.listdir(d) if f != "manifest.json")


def test_fmt_twelve_digits():
    assert fmt(2.0 / 3.0) == "0.666666666667"
    assert fmt(4.0) == "4"
    assert fmt("x") == "x"


def test_constants_dim2(out, capsys):
    code, cap = _run(["constants", "--dim", "2"], out, capsys)
    assert code == 0
    assert "q_star = 4\n" in cap.out
    assert "theta = 0.666666666667\n" in cap.out
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok" and manifest["config"]["dim"] == 2
    assert {"numpy", "scipy", "python", "kernels"} <= set(manifest["versions"])
    assert manifest["wall_clock_seconds"] >= 0


def test_profile_writes_csv_and_constants(out, capsys):
    code, cap = _run(["profile", "--dim", "1", "--q", "6"], out, capsys)
    assert code == 0
    consts = json.loads((out / "constants.json").read_text())
    assert consts["profile_peak"] == pytest.approx(4 ** (1 / 3), rel=1e-8)
    assert abs(consts["pohozaev_1"]) < 1e-8
    meta, r, v = read_profile_csv(out / "profile_N1_q6.csv")
    assert v[0] == pytest.approx(4 ** (1 / 3), rel=1e-8) and meta["N"] == 1


def test_sweep_columns_and_determinism(tmp_path, monkeypatch, capsys):
    args = ["sweep", "--dim", "1", "--a-mult", "2", "--mode", "blowup", "--dq", "0.5", "0.25", "0.125"]
    dirs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        monkeypatch.setenv("QUASIGROUND_OUT", str(d))
        assert main(args) == 0
        dirs.append(d)
    capsys.readouterr()
    files = _data_files(dirs[0])
    assert files == ["sweep_a2_zero.csv"]
    for f in files:
        assert (dirs[0] / f).read_bytes() == (dirs[1] / f).read_bytes()
    lines = (dirs[0] / files[0]).read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[1].split(",") == SweepRecord.columns()
    rows = list(csv.DictReader(lines[1:]))
    ratios = [float(r["ratio_quasilinear"]) for r in rows]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    for cell in rows[0].values():
        if "." in cell and "e" not in cell:
            assert len(cell.replace("-", "").replace(".", "").lstrip("0")) <= 12


def test_env_overrides_out(tmp_path, monkeypatch, capsys):
    env_dir = tmp_path / "env"
    monkeypatch.setenv("QUASIGROUND_OUT", str(env_dir))
    assert main(["constants", "--dim", "1", "--out", str(tmp_path / "flag")]) == 0
    capsys.readouterr()
    assert (env_dir / "manifest.json").exists() and not (tmp_path / "flag").exists()


def test_config_file_and_flag_override(out, capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dim": 2, "q": 3.0, "potential": {"kind": "power", "p": 2}}))
    code, cap = _run(["constants", "--config", str(cfg)], out, capsys)
    assert code == 0 and "q = 3\n" in cap.out and "N = 2\n" in cap.out
    code, cap = _run(["constants", "--config", str(cfg), "--dim", "1", "--q", "5"], out, capsys)
    assert code == 0 and "q = 5\n" in cap.out and "N = 1\n" in cap.out
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["potential"] == [{"kind": "power", "p": 2}]


@pytest.mark.parametrize("argv", [
    ["constants", "--dim", "0"],
    ["nope"],
    ["constants", "--tol", "-1"],
    ["minimize", "--nodes", "8"],
    ["constants", "--potential", "bogus"],
    ["threshold", "--bracket", "1"],
])
def test_usage_errors(out, capsys, argv):
    code, cap = _run(argv, out, capsys)
    assert code == 2
    rec = json.loads(cap.err.strip().splitlines()[-1])
    assert rec["error"] == "usage" and rec["message"]


def test_bad_config_file(out, capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, cap = _run(["constants", "--config", str(bad)], out, capsys)
    assert code == 2 and json.loads(cap.err)["error"] == "usage"
    bad.write_text(json.dumps({"unknown_key": 1}))
    code, cap = _run(["constants", "--config", str(bad)], out, capsys)
    assert code == 2


def test_solver_failure_record(out, capsys):
    code, cap = _run(["sweep", "--a-mult", "0.5", "--mode", "blowup"], out, capsys)
    assert code == 1
    rec = json.loads(cap.err.strip())
    assert rec["error"] == "invalid-regime"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "error" and manifest["error"]["error"] == "invalid-regime"


def test_minimize_combinations_and_jobs(tmp_path, monkeypatch, capsys):
    args = ["minimize", "--q", "5", "--a-mult", "0.5", "2", "--potential", "power:p=2",
            "--potential", "zero", "--nodes", "801"]
    outs = []
    for jobs in ("1", "2"):
        d = tmp_path / f"j{jobs}"
        monkeypatch.setenv("QUASIGROUND_OUT", str(d))
        assert main(args + ["--jobs", jobs]) == 0
        outs.append(d)
    capsys.readouterr()
    files = _data_files(outs[0])
    assert len([f for f in files if f.startswith("field_")]) == 4
    for f in files:
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
    u = read_field_csv(outs[0] / "field_a0.5_power-p2-center0.csv")
    assert u.geometry.kind == "interval" and np.all(u.values >= 0)
    rows = list(csv.DictReader(l for l in (outs[0] / "minimize.csv").read_text().splitlines()
                               if not l.startswith("#")))
    assert {r["status"] for r in rows} == {"converged"}


def test_field_csv_round_trip_from_cli(out, capsys):
    code, _ = _run(["minimize", "--q", "4", "--a-mult", "0.5", "--potential", "power:p=2",
                    "--nodes", "401"], out, capsys)
    assert code == 0
    path = out / "field_a0.5_power-p2-center0.csv"
    u = read_field_csv(path)
    u.to_csv(out / "again.csv")
    assert path.read_bytes() == (out / "again.csv").read_bytes()


def test_nonexist_and_gap(out, capsys):
    code, cap = _run(["nonexist", "--dim", "1", "--a-mult", "2"], out, capsys)
    assert code == 0 and "slope=3" in cap.out
    code, cap = _run(["gap", "--potential", "power:p=2", "--dq", "0.5", "0.25"], out, capsys)
    assert code == 0
    rows = (out / "gap_a2_power-p2-center0.csv").read_text().splitlines()
    assert rows[1].startswith("q,gap,raw,lower,upper")


def test_threshold_subcommand(out, capsys):
    code, cap = _run(["threshold", "--potential", "power:p=2", "--rel-tol", "0.05"], out, capsys)
    assert code == 0
    rows = list(csv.DictReader((out / "threshold.csv").read_text().splitlines()))
    assert abs(float(rows[0]["relative_error"])) < 0.05


def test_compactness_sweep_including_critical(out, capsys):
    code, _ = _run(["sweep", "--mode", "compactness", "--a-mult", "0.5", "--potential", "power:p=2",
                    "--dq", "0.5", "0.25", "--include-critical"], out, capsys)
    assert code == 0
    rows = (out / "sweep_a0.5_power-p2-center0.csv").read_text().splitlines()
    assert rows[-1].startswith("6,")


def test_custom_table_potential(tmp_path):
    table = tmp_path / "V.csv"
    table.write_text("# x,v\n0,0\n1,1\n2,4\n40,1600\n")
    spec = parse_potential(f"custom-table:file={table}")
    assert spec["table_x"] == [0.0, 1.0, 2.0, 40.0]
    with pytest.raises(ConfigError):
        parse_potential("power:p")
    with pytest.raises(ConfigError):
        parse_potential("power:p=abc")
    with pytest.raises(ConfigError):
        parse_potential("power:p=-1")


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig("constants", jobs=0)
    with pytest.raises(ConfigError):
        RunConfig("sweep", mode="sideways")
    assert RunConfig("profile").to_dict()["subcommand"] == "profile"


def test_module_entry_point(tmp_path):
    env = dict(os.environ, QUASIGROUND_OUT=str(tmp_path))
    res = subprocess.run([sys.executable, "-m", "quasiground.cli", "constants", "--dim", "2"],
                         capture_output=True, text=True, env=env)
    assert res.returncode == 0 and "q_star = 4" in res.stdout
