"""Qubit-state teleportation fidelities predicted from (kappa, zeta)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .effective_model import FitResult, ModelParams, effective_noise

_RANGE_TOL = 1e-9


class ModelDomainError(ValueError):
    """Parameters lie outside the region where the closed forms are valid."""


@dataclass(frozen=True)
class QubitParams:
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError("theta must lie in [0, pi]")
        if not 0.0 <= self.phi < 2 * np.pi:
            raise ValueError("phi must lie in [0, 2 pi)")


def _check(kappa: float, zeta: float) -> None:
    if kappa <= 0:
        raise ModelDomainError(f"kappa must be positive, got {kappa}")
    if zeta < 0:
        raise ModelDomainError(f"zeta must be non-negative, got {zeta}")


def _in_unit_interval(value: float, name: str) -> float:
    if value < -_RANGE_TOL or value > 1.0 + _RANGE_TOL:
        raise ModelDomainError(f"{name} = {value:.6g} is outside [0, 1]")
    return value


def fidelity_ground(kappa: float, zeta: float) -> float:
    """Fidelity for teleporting |0>; identical to the coherent-state model at alpha = 0."""
    _check(kappa, zeta)
    return _in_unit_interval(2.0 / (zeta + kappa + 1.0), "F(|0>)")


def fidelity_excited(kappa: float, zeta: float) -> float:
    _check(kappa, zeta)
    s = zeta + kappa + 1.0
    F = (2 * zeta**2 - 2 * kappa**2 + 12 * kappa - 2) / s**3
    return _in_unit_interval(F, "F(|1>)")


def average_qubit_fidelity(kappa: float, zeta: float) -> float:
    """Fidelity averaged uniformly over the Bloch sphere."""
    _check(kappa, zeta)
    s = zeta + kappa + 1.0
    F = (6 * zeta + 4 * np.sqrt(kappa)) / (3 * s**2) + 16 * kappa / (3 * s**3)
    return _in_unit_interval(float(F), "average fidelity")


@dataclass(frozen=True)
class QubitPrediction:
    t_cen: float
    kappa: float
    zeta: float
    s_tms_db: float
    f_ground: float
    f_excited: float
    f_average: float


def rescale_zeta(kappa: float, zeta: float, fitted_s_db: float, target_s_db: float) -> float:
    """Swap the squeezing contribution to zeta, keeping device and thermal noise fixed."""
    r_fit = fitted_s_db * np.log(10.0) / 20.0
    r_new = target_s_db * np.log(10.0) / 20.0
    excess = zeta - effective_noise(r_fit, kappa)
    return effective_noise(r_new, kappa) + excess


def predict_vs_temperature(
    fits: Iterable[tuple],
    fitted_s_db: Optional[float] = None,
    target_s_db: Optional[float] = None,
) -> list:
    """Qubit fidelities along a temperature sweep.

    ``fits`` yields ``(t_cen, params)`` where params is a ModelParams or a
    FitResult. When both squeezing levels are given and differ, zeta is
    recomputed for the target squeezing.
    """
    out = []
    for t_cen, p in fits:
        params = p.params if isinstance(p, FitResult) else p
        kappa, zeta = params.kappa, params.zeta
        s_db = fitted_s_db
        if fitted_s_db is not None and target_s_db is not None and target_s_db != fitted_s_db:
            zeta = rescale_zeta(kappa, zeta, fitted_s_db, target_s_db)
            s_db = target_s_db
        if zeta < 0:
            raise ModelDomainError(f"rescaled zeta {zeta:.4g} is negative at T_cen = {t_cen}")
        out.append(QubitPrediction(
            t_cen=float(t_cen), kappa=kappa, zeta=zeta,
            s_tms_db=float("nan") if s_db is None else float(s_db),
            f_ground=fidelity_ground(kappa, zeta),
            f_excited=fidelity_excited(kappa, zeta),
            f_average=average_qubit_fidelity(kappa, zeta),
        ))
    return out
