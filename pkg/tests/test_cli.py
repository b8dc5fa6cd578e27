import csv
import subprocess
import sys

import pytest

from dqsense import cli, metrology


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_thresholds_table(tmp_path):
    assert cli.main(["thresholds", "--out", str(tmp_path), "--d-max", "4", "--n-max", "2"]) == 0
    rows = _read(tmp_path / "thresholds.csv")
    assert list(rows[0]) == list(cli.THRESHOLD_COLUMNS)
    assert len(rows) == 3 * 2
    first = rows[0]
    assert (first["d"], first["n"]) == ("2", "1")
    assert float(first["F_th_dp"]) == pytest.approx(metrology.threshold_dp(2), abs=1e-11)
    assert float(first["sep_bound"]) == pytest.approx(0.5)
    d3 = next(r for r in rows if r["d"] == "3" and r["n"] == "1")
    assert float(d3["F_th_dp"]) == pytest.approx(0.50963, abs=1e-4)
    assert float(d3["F_bell_opt"]) == pytest.approx(0.714, abs=1e-3)
    # 12 significant digits
    assert len(first["F_th_dp"].replace("0.", "", 1)) <= 12


def test_thresholds_reject_bad_range(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["thresholds", "--out", str(out), "--d-min", "1"]) == 2
    assert "error" in capsys.readouterr().err
    assert not out.exists()


def test_analyze_curves_and_crossings(tmp_path):
    assert cli.main(["analyze", "--out", str(tmp_path), "--n-max", "20"]) == 0
    curves = _read(tmp_path / "eta_curves.csv")
    assert len(curves) == 9 * 20
    crossings = _read(tmp_path / "crossings.csv")
    row = next(r for r in crossings if r["F"] == "0.9" and r["k"] == "0.99")
    assert abs(int(row["n_crossing"]) - float(row["n_max_estimate"])) <= 5
    # F = 0.8, d = 3 has an advantage at n = 1
    pure = next(r for r in curves if r["F"] == "0.8" and r["k"] == "0.9999" and r["n"] == "1")
    assert float(pure["eta"]) > 1


def test_simulate_is_byte_identical(tmp_path):
    args = ["simulate", "--preset", "1", "--seed", "7", "--trials", "5"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "results.csv").read_bytes()
    assert a == (tmp_path / "b" / "results.csv").read_bytes()
    assert a.splitlines()[0].decode() == ",".join(
        ("scenario", "p", "eta", "eta_tilde", "F", "seed", "trials", "eta_raw")
    )
    logs = sorted((tmp_path / "a" / "logs" / "scenario-1").iterdir())
    assert [p.name for p in logs] == [f"trial_{i:05d}.tsv" for i in range(5)]
    assert not any(p.name.startswith(".staging") for p in (tmp_path / "a").iterdir())


def test_simulate_from_config(tmp_path):
    config = tmp_path / "s.yaml"
    config.write_text(
        "name: tiny\nmemory:\n  coherence_time_s: 0.02\ndistribution_window_s: 0.1\n"
    )
    out = tmp_path / "out"
    assert cli.main(["simulate", "--config", str(config), "--seed", "1", "--trials", "3",
                     "--out", str(out), "--log-trials", "0"]) == 0
    rows = _read(out / "results.csv")
    assert rows[0]["scenario"] == "tiny" and rows[0]["trials"] == "3"
    assert not (out / "logs").exists()


def test_sweep_config_list(tmp_path):
    config = tmp_path / "sweep.yaml"
    config.write_text(
        "scenarios:\n"
        "  - {name: a, distribution_window_s: 0.05, memory: {coherence_time_s: 0.02}}\n"
        "  - {name: b, distribution_window_s: 0.05, memory: {coherence_time_s: 0.04}}\n"
    )
    out = tmp_path / "out"
    assert cli.main(["sweep", "--config", str(config), "--seed", "2", "--trials", "2", "--out", str(out)]) == 0
    assert [r["scenario"] for r in _read(out / "sweep.csv")] == ["a", "b"]


def test_validation_errors_leave_no_output(tmp_path, capsys):
    out = tmp_path / "out"
    bad = tmp_path / "bad.yaml"
    bad.write_text("num_nodes: 5\n")
    assert cli.main(["simulate", "--config", str(bad), "--seed", "1", "--trials", "2", "--out", str(out)]) == 2
    assert not out.exists()
    assert cli.main(["simulate", "--preset", "1", "--trials", "2", "--out", str(out)]) == 2
    assert cli.main(["simulate", "--seed", "1", "--trials", "2", "--out", str(out)]) == 2
    assert "error" in capsys.readouterr().err
    assert not out.exists()


def test_failure_keeps_existing_output_untouched(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["thresholds", "--out", str(out), "--d-max", "3", "--n-max", "1"]) == 0
    before = (out / "thresholds.csv").read_bytes()
    assert cli.main(["thresholds", "--out", str(out), "--d-min", "0"]) == 2
    assert (out / "thresholds.csv").read_bytes() == before
    assert [p.name for p in out.iterdir()] == ["thresholds.csv"]


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "dqsense.cli", "thresholds", "--out", str(tmp_path), "--d-max", "3"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "thresholds.csv").exists()


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        cli.main(["simulate", "--preset", "9"])
    assert info.value.code == 2
