import hashlib
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from qbmlab.cli import main
from qbmlab.config import parse_config
from qbmlab.runner import load_curves, redundancy_from_files, run_experiment


def tiny_config(outdir, run_id="t", **kw):
    base = dict(
        n_oscillators=30,
        n_times=4,
        t_max=3.0,
        samples=3,
        n_bands=6,
        outdir=str(outdir),
        run_id=run_id,
    )
    base.update(kw)
    return parse_config(overrides=base, env={})


def digest_dir(outdir, skip_manifest=True):
    out = {}
    for name in sorted(os.listdir(outdir)):
        if skip_manifest and name.endswith("_manifest.json"):
            continue
        with open(os.path.join(outdir, name), "rb") as fh:
            out[name] = hashlib.sha256(fh.read()).hexdigest()
    return out


class TestRunExperiment:
    def test_all_stages_produce_files(self, tmp_path):
        cfg = tiny_config(tmp_path)
        manifest = run_experiment(cfg, ("evolve", "bands", "piplot", "peplot", "redundancy", "compare"))
        names = {f["name"] for f in manifest.files}
        for suffix in ("_state.csv", "_bands.csv", "_mi.csv", "_neg.csv", "_redundancy.csv", "_compare.csv"):
            assert any(n.endswith(suffix) for n in names)
        for f in manifest.files:
            path = tmp_path / f["name"]
            assert path.exists()
            assert hashlib.sha256(path.read_bytes()).hexdigest() == f["sha256"]

    def test_reruns_are_byte_identical(self, tmp_path):
        a_dir, b_dir = tmp_path / "a", tmp_path / "b"
        run_experiment(tiny_config(a_dir), ("bands", "piplot", "peplot", "redundancy"))
        run_experiment(tiny_config(b_dir), ("bands", "piplot", "peplot", "redundancy"))
        da, db = digest_dir(a_dir), digest_dir(b_dir)
        assert da == db
        assert len(da) > 0

    def test_parallel_matches_serial_bitwise(self, tmp_path):
        a_dir, b_dir = tmp_path / "serial", tmp_path / "par"
        run_experiment(tiny_config(a_dir), ("piplot", "peplot"))
        run_experiment(tiny_config(b_dir, workers=3), ("piplot", "peplot"))
        assert digest_dir(a_dir) == digest_dir(b_dir)

    def test_redundancy_from_persisted_curves(self, tmp_path):
        cfg = tiny_config(tmp_path)
        run_experiment(cfg, ("piplot", "peplot", "redundancy"))
        curves = load_curves(cfg.outdir, cfg.run_id)
        assert len(curves) == cfg.n_times
        reports = redundancy_from_files(cfg)
        with open(tmp_path / f"{cfg.run_id}_redundancy_002.json") as fh:
            persisted = json.load(fh)
        rebuilt = reports[2]
        if np.isnan(persisted["r_e"]):
            assert np.isnan(rebuilt.r_e)
        else:
            assert rebuilt.r_e == pytest.approx(persisted["r_e"], rel=1e-12)

    def test_failure_removes_partial_outputs(self, tmp_path, monkeypatch):
        cfg = tiny_config(tmp_path)
        import qbmlab.runner as runner_mod

        def boom(*a, **k):
            raise RuntimeError("disk full")

        real_write = runner_mod._write_json
        calls = {"n": 0}

        def fail_second(*a, **k):
            calls["n"] += 1
            if calls["n"] >= 2:
                boom()
            return real_write(*a, **k)

        monkeypatch.setattr(runner_mod, "_write_json", fail_second)
        with pytest.raises(RuntimeError):
            run_experiment(cfg, ("piplot", "peplot"))
        leftovers = [n for n in os.listdir(tmp_path) if not n.endswith("_manifest.json")]
        assert leftovers == []

    def test_compare_summary_structure(self, tmp_path):
        cfg = tiny_config(tmp_path)
        run_experiment(cfg, ("compare",))
        with open(tmp_path / f"{cfg.run_id}_compare_summary.json") as fh:
            summary = json.load(fh)
        assert set(summary["max_rel_dev_core"]) == {"mi", "neg"}
        assert summary["n_times"] == cfg.n_times
        import csv as csv_mod

        with open(tmp_path / f"{cfg.run_id}_compare.csv") as fh:
            t0_rows = [r for r in csv_mod.DictReader(fh) if float(r["t"]) == 0.0]
        assert t0_rows
        for row in t0_rows:
            assert float(row["analytic"]) == 0.0
            assert abs(float(row["numeric"])) < 1e-8


class TestCli:
    def test_bands_subcommand(self, tmp_path, capsys):
        rc = main(
            [
                "bands",
                "--n-oscillators", "20",
                "--n-times", "3",
                "--t-max", "2",
                "--n-bands", "4",
                "--outdir", str(tmp_path),
                "--run-id", "clitest",
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "clitest_bands.csv" in out
        assert (tmp_path / "clitest_bands.csv").exists()

    def test_validation_exit_code(self, tmp_path, capsys):
        rc = main(["bands", "--cutoff", "-3", "--outdir", str(tmp_path)])
        assert rc == 2
        assert "cutoff" in capsys.readouterr().err

    def test_recurrence_warning(self, tmp_path, capsys):
        rc = main(
            [
                "evolve",
                "--n-oscillators", "10",
                "--n-bands", "5",
                "--cutoff", "20",
                "--t-max", "9",
                "--n-times", "2",
                "--samples", "1",
                "--outdir", str(tmp_path),
            ]
        )
        assert rc == 0
        assert "recurrence" in capsys.readouterr().err

    def test_analytic_subcommand(self, tmp_path):
        rc = main(
            [
                "analytic",
                "--n-oscillators", "30",
                "--exponent", "3",
                "--cutoff", "300",
                "--n-times", "3",
                "--t-max", "2",
                "--outdir", str(tmp_path),
                "--run-id", "ana",
            ]
        )
        assert rc == 0
        assert (tmp_path / "ana_analytic.csv").exists()

    def test_redundancy_from_curves_dir(self, tmp_path, capsys):
        cfg = tiny_config(tmp_path, run_id="reuse")
        run_experiment(cfg, ("piplot", "peplot"))
        out2 = tmp_path / "second"
        rc = main(
            [
                "redundancy",
                "--curves-dir", str(tmp_path),
                "--n-oscillators", "30",
                "--n-times", "4",
                "--t-max", "3.0",
                "--samples", "3",
                "--n-bands", "6",
                "--outdir", str(out2),
                "--run-id", "reuse",
            ]
        )
        assert rc == 0
        assert (out2 / "reuse_redundancy.csv").exists()

    def test_missing_curves_dir_exit_code(self, tmp_path, capsys):
        rc = main(
            [
                "redundancy",
                "--curves-dir", str(tmp_path / "nowhere"),
                "--n-oscillators", "30",
                "--n-bands", "6",
                "--outdir", str(tmp_path),
            ]
        )
        assert rc == 4
        assert "i/o error" in capsys.readouterr().err

    def test_env_seed_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("QBM_SEED", "777")
        cfg = parse_config(overrides={"seed": 1})
        assert cfg.seed == 777

    def test_console_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "qbmlab.cli", "bands", "--n-oscillators", "12",
             "--n-times", "2", "--t-max", "1", "--n-bands", "3",
             "--outdir", str(tmp_path), "--run-id", "sub"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "sub_bands.csv").exists()
