"""Command-line harness: ``sim <command> --config <file> --out <dir>``.

Commands write CSV/JSON artifacts into the output directory. Failures exit
non-zero and print a one-line JSON object ``{"error": <category>, ...}`` on
stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import presets
from .effective_model import (
    F_CLASSICAL,
    F_NO_CLONING,
    FitError,
    ModelParams,
    fit_decomposition,
    fit_model,
)
from .formatting import write_csv, write_json
from .gaussian import GaussianState, coherent, thermal, vacuum
from .hybrid_qubit import (
    ModelDomainError,
    average_qubit_fidelity,
    fidelity_excited,
    fidelity_ground,
    predict_vs_temperature,
)
from .measures import negativity, purity
from .protocol import (
    ProtocolConfig,
    build_tms,
    effective_params,
    sweep_photon_number,
    sweep_temperature,
    teleport_state,
)
from .tomography import (
    gaussianity_test,
    jackknife,
    reconstruct_gaussian,
    sample_moments,
    sample_state,
    write_moments_csv,
    write_samples_csv,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_SCHEMA = 2
EXIT_IO = 3
EXIT_DOMAIN = 4
EXIT_FIT = 5

_num = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_channel = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "length": _nonneg,
        "attenuation_rate": _nonneg,
        "t_cen": _nonneg,
        "carrier_frequency": {"type": "number", "exclusiveMinimum": 0},
        "explicit_eps": {"type": ["number", "null"], "minimum": 0, "exclusiveMaximum": 1},
    },
}
_stage = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "eps": {"type": "number", "minimum": 0, "maximum": 1},
        "loss_db": _nonneg,
        "n_env": {"type": ["number", "null"], "minimum": 0},
    },
    "oneOf": [{"required": ["eps"]}, {"required": ["loss_db"]}],
}
_stages = {"type": "array", "items": _stage}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "protocol": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"enum": ["calibrated", "lossless", "ideal"]},
                "s_tms_db": _nonneg,
                "gain_db": {"type": ["number", "null"]},
                "coupler_db": {"type": "number", "exclusiveMinimum": 0},
                "n_dev": _nonneg,
                "n_dev_meas": _nonneg,
                "jpa_eps": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "entanglement_channel": _channel,
                "feedforward_channel": _channel,
                "alice_component_losses": _stages,
                "feedforward_component_losses": _stages,
                "bob_component_losses": _stages,
                "t_mc_map": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "items": _nonneg, "minItems": 3, "maxItems": 3},
                },
                "compression_n1db": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "carrier_frequency": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_in": {"type": "array", "items": _nonneg},
                "n_phases": {"type": "integer", "minimum": 1},
                "t_cen": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "n_in_fixed": _nonneg,
            },
        },
        "fit": {
            "type": "object",
            "additionalProperties": False,
            "required": ["data"],
            "properties": {
                "data": {"type": "string"},
                "s_tms_db": _nonneg,
                "branch": {"enum": ["attenuating", "amplifying"]},
            },
        },
        "qubit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "points": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["t_cen", "kappa", "zeta"],
                        "properties": {"t_cen": _num, "kappa": _num, "zeta": _num},
                    },
                },
                "fitted_s_tms_db": _nonneg,
                "target_s_tms_db": {"type": "array", "items": _nonneg},
            },
        },
        "tomography": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "state": {"enum": ["vacuum", "coherent", "thermal", "tms", "teleported"]},
                "s_tms_db": _nonneg,
                "alpha": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                "n_occ": _nonneg,
                "n_samples": {"type": "integer", "minimum": 1},
                "n_batches": {"type": "integer", "minimum": 2},
                "max_order": {"enum": [2, 3, 4]},
                "threshold": {"type": "number", "exclusiveMinimum": 0},
                "save_samples": {"type": "boolean"},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"directory": {"type": "string"}, "format": {"enum": ["csv"]}},
        },
    },
}


class CliError(Exception):
    def __init__(self, category: str, message: str, code: int):
        super().__init__(message)
        self.category = category
        self.code = code


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise CliError("io", f"cannot read config: {exc}", EXIT_IO) from exc
    except json.JSONDecodeError as exc:
        raise CliError("schema", f"config is not valid JSON: {exc}", EXIT_SCHEMA) from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise CliError("schema", f"{where}: {exc.message}", EXIT_SCHEMA) from None


def protocol_from_config(cfg: dict) -> ProtocolConfig:
    section = dict(cfg.get("protocol", {}))
    preset = section.pop("preset", None)
    if preset == "calibrated":
        base = presets.calibrated_config().to_dict()
    elif preset in ("lossless", "ideal"):
        base = presets.lossless_config().to_dict()
        if preset == "ideal":
            base["coupler_db"] = 60.0
    else:
        base = {}
    base.update(section)
    try:
        return ProtocolConfig.from_dict(base)
    except (TypeError, ValueError) as exc:
        raise CliError("domain", f"invalid protocol: {exc}", EXIT_DOMAIN) from exc


def _require(cfg: dict, section: str, key: str):
    value = cfg.get(section, {}).get(key)
    if value is None:
        raise CliError("schema", f"{section}/{key} is required for this command", EXIT_SCHEMA)
    if isinstance(value, list) and not value:
        raise CliError("domain", f"{section}/{key} must not be empty", EXIT_DOMAIN)
    return value


# --- commands -------------------------------------------------------------------

def cmd_sweep_photon(cfg: dict, out: Path, seed: int, jobs: int) -> list:
    proto = protocol_from_config(cfg)
    n_in = _require(cfg, "sweep", "n_in")
    n_phases = cfg.get("sweep", {}).get("n_phases", 16)
    points = sweep_photon_number(proto, n_in, n_phases, jobs=jobs)
    rows = [(p.n_in, p.fidelity, p.stderr, F_CLASSICAL, F_NO_CLONING) for p in points]
    return [write_csv(out / "sweep_photon.csv", ["n_in", "fidelity", "stderr", "f_cl", "f_nc"], rows)]


def cmd_sweep_temperature(cfg: dict, out: Path, seed: int, jobs: int) -> list:
    proto = protocol_from_config(cfg)
    t_list = _require(cfg, "sweep", "t_cen")
    sweep = cfg.get("sweep", {})
    points = sweep_temperature(proto, t_list, sweep.get("n_in_fixed", 1.3), sweep.get("n_phases", 16), jobs=jobs)
    rows = [(p.t_cen, p.fidelity, p.negativity, p.purity, p.n_env, p.n_th) for p in points]
    header = ["t_cen", "fidelity", "negativity", "purity", "n_env", "n_th"]
    return [write_csv(out / "sweep_temperature.csv", header, rows)]


def read_fidelity_csv(path) -> list:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader, [])]
            rows = [r for r in reader if r]
    except OSError as exc:
        raise CliError("io", f"cannot read data: {exc}", EXIT_IO) from exc
    if header not in (["n_in", "F", "sigma_F"], ["n_in", "F"]):
        raise CliError("schema", f"data header must be n_in,F,sigma_F; got {','.join(header)}", EXIT_SCHEMA)
    try:
        return [tuple(float(v) for v in r) for r in rows]
    except ValueError as exc:
        raise CliError("schema", f"non-numeric entry in data: {exc}", EXIT_SCHEMA) from exc


def _qubit_block(params: ModelParams) -> dict:
    return {
        "f_ground": fidelity_ground(params.kappa, params.zeta),
        "f_excited": fidelity_excited(params.kappa, params.zeta),
        "f_average": average_qubit_fidelity(params.kappa, params.zeta),
    }


def cmd_fit(cfg: dict, out: Path, seed: int, jobs: int) -> list:
    path = Path(_require(cfg, "fit", "data"))
    data = read_fidelity_csv(path)
    result = fit_model(data, branch=cfg["fit"].get("branch", "attenuating"))
    report = {
        "data": path.name,
        "fit": result.to_dict(),
        "implied_attenuation_db": result.params.attenuation_db,
        "qubit": _qubit_block(result.params),
    }
    s_db = cfg["fit"].get("s_tms_db")
    if s_db is not None:
        report["decomposition"] = fit_decomposition(data, s_db).to_dict()
    return [write_json(out / "fit_report.json", report)]


def cmd_qubit_predict(cfg: dict, out: Path, seed: int, jobs: int) -> list:
    section = cfg.get("qubit", {})
    if section.get("points"):
        fits = [(p["t_cen"], ModelParams(p["kappa"], p["zeta"])) for p in section["points"]]
        fitted_s = section.get("fitted_s_tms_db")
    else:
        proto = protocol_from_config(cfg).resolved()
        t_list = _require(cfg, "sweep", "t_cen")
        fits = [(t, effective_params(proto.at_temperature(t))) for t in t_list]
        fitted_s = proto.s_tms_db
    targets = section.get("target_s_tms_db") or [fitted_s]
    if any(t is not None for t in targets) and fitted_s is None:
        raise CliError("schema", "qubit/fitted_s_tms_db is required to rescale squeezing", EXIT_SCHEMA)
    rows = []
    for target in targets:
        for p in predict_vs_temperature(fits, fitted_s, target):
            rows.append((p.t_cen, p.s_tms_db, p.kappa, p.zeta, p.f_ground, p.f_excited, p.f_average))
    header = ["t_cen", "s_tms_db", "kappa", "zeta", "f_ground", "f_excited", "f_average"]
    return [write_csv(out / "qubit_predictions.csv", header, rows)]


def _tomography_state(cfg: dict) -> GaussianState:
    section = cfg.get("tomography", {})
    kind = section.get("state", "tms")
    alpha = complex(*section.get("alpha", [0.0, 0.0]))
    if kind == "vacuum":
        return vacuum(1)
    if kind == "coherent":
        return coherent(alpha)
    if kind == "thermal":
        return thermal(section.get("n_occ", 0.0))
    if kind == "tms":
        return build_tms(section.get("s_tms_db", 5.0))
    return teleport_state(protocol_from_config(cfg).resolved(), alpha)


def cmd_tomography(cfg: dict, out: Path, seed: int, jobs: int) -> list:
    section = cfg.get("tomography", {})
    state = _tomography_state(cfg)
    n_samples = section.get("n_samples", 1_000_000)
    n_batches = section.get("n_batches", 100)
    if n_samples < n_batches:
        raise CliError("domain", f"n_samples ({n_samples}) < n_batches ({n_batches})", EXIT_DOMAIN)
    moments = sample_moments(state, n_samples, seed, section.get("max_order", 4), n_batches)
    written = [write_moments_csv(out / "moments.csv", moments)]
    if section.get("save_samples", False):
        written.append(write_samples_csv(out / "samples.csv", sample_state(state, n_samples, seed)))

    rec = reconstruct_gaussian(moments)
    report = {
        "seed": seed,
        "n_samples": rec.n_samples,
        "n_batches": moments.n_batches,
        "mean": rec.state_estimate.mean,
        "cov": rec.state_estimate.cov,
        "mean_stderr": rec.mean_stderr,
        "cov_stderr": rec.cov_stderr,
        "input_mean": state.mean,
        "input_cov": state.cov,
    }
    val, err = jackknife(moments, purity)
    report["purity"] = {"value": val, "stderr": err}
    if state.n_modes == 2:
        val, err = jackknife(moments, negativity)
        report["negativity"] = {"value": val, "stderr": err}
    if moments.max_order >= 3:
        g = gaussianity_test(moments, threshold=section.get("threshold", 4.0))
        report["gaussianity"] = {
            "verdict": g.verdict,
            "max_abs_statistic": g.max_abs_statistic,
            "threshold": g.threshold,
        }
    written.append(write_json(out / "reconstruction.json", report))
    return written


COMMANDS = {
    "sweep-photon": cmd_sweep_photon,
    "sweep-temp": cmd_sweep_temperature,
    "fit": cmd_fit,
    "qubit-predict": cmd_qubit_predict,
    "tomo": cmd_tomography,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sim", description="Microwave CV teleportation simulator")
    p.add_argument("command", nargs="?", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--out", help="output directory (overrides output.directory)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (unsigned 64-bit)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    p.add_argument("--check", action="store_true", help="run the acceptance suite and exit")
    return p


def _fail(category: str, message: str, code: int) -> int:
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.check:
        from .acceptance import run_all

        return EXIT_OK if run_all(verbose=True) else EXIT_CHECK_FAILED
    if args.command is None or args.config is None:
        return _fail("usage", "a command and --config are required (or use --check)", EXIT_SCHEMA)
    if not 0 <= args.seed < 2**64:
        return _fail("usage", "--seed must be an unsigned 64-bit integer", EXIT_SCHEMA)
    if args.jobs < 1:
        return _fail("usage", "--jobs must be >= 1", EXIT_SCHEMA)
    try:
        cfg = load_config(args.config)
        out = Path(args.out or cfg.get("output", {}).get("directory", "results"))
        written = COMMANDS[args.command](cfg, out, args.seed, args.jobs)
    except CliError as exc:
        return _fail(exc.category, str(exc), exc.code)
    except FitError as exc:
        return _fail("fit", str(exc), EXIT_FIT)
    except ModelDomainError as exc:
        return _fail("domain", str(exc), EXIT_DOMAIN)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_IO)
    except ValueError as exc:
        return _fail("domain", str(exc), EXIT_DOMAIN)
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
