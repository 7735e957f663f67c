import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from cvtele.cli import (
    EXIT_DOMAIN,
    EXIT_FIT,
    EXIT_IO,
    EXIT_OK,
    EXIT_SCHEMA,
    main,
)

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def error_of(err):
    return json.loads(err.strip().splitlines()[-1])


SWEEP = {"protocol": {"preset": "calibrated"}, "sweep": {"n_in": [0.01, 1.0, 10.0], "n_phases": 4}}


class TestSchema:
    def test_unknown_key(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {"protocol": {"preset": "calibrated", "bogus": 1}})
        code, _, err = run(["sweep-photon", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert code == EXIT_SCHEMA
        assert error_of(err)["error"] == "schema"

    def test_wrong_type(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {"sweep": {"n_in": "many"}})
        code, _, _ = run(["sweep-photon", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert code == EXIT_SCHEMA

    def test_invalid_json(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        code, _, err = run(["fit", "--config", str(p)], capsys)
        assert code == EXIT_SCHEMA

    def test_missing_config_file(self, tmp_path, capsys):
        code, _, err = run(["fit", "--config", str(tmp_path / "nope.json")], capsys)
        assert code == EXIT_IO
        assert error_of(err)["error"] == "io"

    def test_usage(self, capsys):
        code, _, err = run([], capsys)
        assert code == EXIT_SCHEMA
        assert error_of(err)["error"] == "usage"

    def test_bad_jobs(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SWEEP)
        code, _, _ = run(["sweep-photon", "--config", cfg, "--jobs", "0"], capsys)
        assert code == EXIT_SCHEMA

    def test_shipped_configs_validate(self):
        from cvtele.cli import load_config

        for p in sorted(CONFIGS.glob("*.json")):
            load_config(p)


class TestSweeps:
    def test_byte_identical_reruns(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SWEEP)
        for d in ("a", "b"):
            assert run(["sweep-photon", "--config", cfg, "--out", str(tmp_path / d)], capsys)[0] == EXIT_OK
        a = (tmp_path / "a" / "sweep_photon.csv").read_bytes()
        assert a == (tmp_path / "b" / "sweep_photon.csv").read_bytes()
        assert a.decode().splitlines()[0] == "n_in,fidelity,stderr,f_cl,f_nc"

    def test_jobs_invariance(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {**SWEEP, "sweep": {"t_cen": [0.17, 2.0, 4.0], "n_phases": 4}})
        run(["sweep-temp", "--config", cfg, "--out", str(tmp_path / "j1")], capsys)
        run(["sweep-temp", "--config", cfg, "--out", str(tmp_path / "j3"), "--jobs", "3"], capsys)
        a = (tmp_path / "j1" / "sweep_temperature.csv").read_bytes()
        assert a == (tmp_path / "j3" / "sweep_temperature.csv").read_bytes()

    def test_empty_sweep(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {"protocol": {"preset": "calibrated"}, "sweep": {"n_in": []}})
        code, _, err = run(["sweep-photon", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert code == EXIT_DOMAIN

    def test_missing_sweep_values(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {"protocol": {"preset": "calibrated"}})
        code, _, _ = run(["sweep-temp", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert code == EXIT_SCHEMA

    def test_classical_ideal_config(self, tmp_path, capsys):
        code, _, _ = run(["sweep-photon", "--config", str(CONFIGS / "classical_ideal.json"),
                          "--out", str(tmp_path)], capsys)
        assert code == EXIT_OK
        rows = np.loadtxt(tmp_path / "sweep_photon.csv", delimiter=",", skiprows=1)
        assert np.all(np.abs(rows[:, 1] - 0.5) <= 1e-6)

    def test_unreachable_calibration_is_domain_error(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {"protocol": {"preset": "lossless",
                                                "feedforward_component_losses": [{"eps": 0.999}]},
                                   "sweep": {"n_in": [1.0]}})
        code, _, err = run(["sweep-photon", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert code == EXIT_DOMAIN


class TestFit:
    def test_synthetic_dataset(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {"fit": {"data": str(CONFIGS / "data" / "synthetic_fidelity.csv")}})
        code, _, _ = run(["fit", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert code == EXIT_OK
        rep = json.loads((tmp_path / "fit_report.json").read_text())
        assert abs(rep["fit"]["params"]["kappa"] - 0.778) < 0.01
        assert abs(rep["fit"]["params"]["zeta"] - 1.015) < 0.02
        assert abs(rep["implied_attenuation_db"] - 1.09) < 0.05
        assert set(rep["qubit"]) == {"f_ground", "f_excited", "f_average"}

    def test_bad_header(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        data.write_text("photons,fid\n0.1,0.7\n1,0.6\n10,0.5\n")
        cfg = write_cfg(tmp_path, {"fit": {"data": str(data)}})
        code, _, err = run(["fit", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert code == EXIT_SCHEMA

    def test_single_point(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        data.write_text("n_in,F,sigma_F\n1.0,0.6,0.01\n")
        cfg = write_cfg(tmp_path, {"fit": {"data": str(data)}})
        code, _, err = run(["fit", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert code == EXIT_FIT
        assert error_of(err)["error"] == "fit"

    def test_missing_data(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {"fit": {"data": str(tmp_path / "absent.csv")}})
        code, _, _ = run(["fit", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert code == EXIT_IO


class TestQubitAndTomography:
    def test_qubit_predict(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {"qubit": {"points": [{"t_cen": 0.17, "kappa": 0.778, "zeta": 1.015}],
                                             "fitted_s_tms_db": 5.0, "target_s_tms_db": [5.0, 10.0]}})
        code, _, _ = run(["qubit-predict", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert code == EXIT_OK
        rows = np.loadtxt(tmp_path / "qubit_predictions.csv", delimiter=",", skiprows=1)
        assert np.isclose(rows[0, -1], 0.6014, atol=1e-4)
        assert rows[1, -1] > rows[0, -1]

    def test_qubit_domain_error(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {"qubit": {"points": [{"t_cen": 0.1, "kappa": -1.0, "zeta": 1.0}]}})
        code, _, _ = run(["qubit-predict", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert code == EXIT_DOMAIN

    def test_tomography_seed_determinism(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {"tomography": {"state": "tms", "n_samples": 20000, "n_batches": 20}})
        for d, seed in (("a", "5"), ("b", "5"), ("c", "6")):
            assert run(["tomo", "--config", cfg, "--out", str(tmp_path / d), "--seed", seed], capsys)[0] == EXIT_OK
        a = (tmp_path / "a" / "reconstruction.json").read_bytes()
        assert a == (tmp_path / "b" / "reconstruction.json").read_bytes()
        assert a != (tmp_path / "c" / "reconstruction.json").read_bytes()
        rep = json.loads(a)
        assert {"negativity", "purity", "gaussianity"} <= set(rep)

    def test_tomography_too_few_samples(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {"tomography": {"n_samples": 10, "n_batches": 100}})
        code, _, _ = run(["tomo", "--config", cfg, "--out", str(tmp_path)], capsys)
        assert code == EXIT_DOMAIN

    def test_entry_point(self, tmp_path):
        cfg = write_cfg(tmp_path, SWEEP)
        proc = subprocess.run([sys.executable, "-m", "cvtele.cli", "sweep-photon", "--config", cfg,
                               "--out", str(tmp_path)], capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.strip().endswith("sweep_photon.csv")
