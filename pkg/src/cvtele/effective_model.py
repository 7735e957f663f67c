"""Closed-form teleportation fidelity model and (kappa, zeta) extraction.

For an output state with displacement gain sqrt(kappa) and isotropic
quadrature variance kappa + zeta (vacuum units), the fidelity to the coherent
input |alpha> is

    F = 2 / (zeta + kappa + 1) * exp(-2 (sqrt(kappa) - 1)^2 |alpha|^2 / (zeta + kappa + 1)).

With a two-mode squeezed resource of parameter r the added noise is

    zeta = (1 + kappa) cosh 2r - 2 sqrt(kappa) sinh 2r + n_dev + n_th.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

# CODATA exact values.
PLANCK_H = 6.62607015e-34
BOLTZMANN_K = 1.380649e-23

F_CLASSICAL = 0.5
F_NO_CLONING = 2.0 / 3.0

KAPPA_BOUNDS = (1e-4, 10.0)
ZETA_BOUNDS = (0.0, 100.0)
MAX_EVALUATIONS = 100_000


class FitError(RuntimeError):
    """The fit did not converge or the data cannot constrain the model."""


@dataclass(frozen=True)
class ModelParams:
    kappa: float
    zeta: float
    r: Optional[float] = None
    n_dev: Optional[float] = None
    n_th: Optional[float] = None

    @classmethod
    def from_decomposition(cls, r: float, kappa: float, n_dev: float = 0.0, n_th: float = 0.0) -> "ModelParams":
        return cls(kappa, effective_noise(r, kappa, n_dev, n_th), r, n_dev, n_th)

    @property
    def attenuation_db(self) -> float:
        return -10.0 * np.log10(self.kappa)

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True)
class FitResult:
    params: ModelParams
    rms_residual: float
    n_points: int
    converged: bool
    iterations: int
    chi2: float = 0.0

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "rms_residual": self.rms_residual,
            "n_points": self.n_points,
            "converged": self.converged,
            "iterations": self.iterations,
            "chi2": self.chi2,
        }


def model_fidelity(n_in, params: ModelParams):
    """Teleportation fidelity for input photon number(s) ``n_in`` (= |alpha|^2)."""
    kappa, zeta = params.kappa, params.zeta
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    n_in = np.asarray(n_in, dtype=float)
    if np.any(n_in < 0):
        raise ValueError("photon numbers must be non-negative")
    denom = zeta + kappa + 1.0
    F = 2.0 / denom * np.exp(-2.0 * (np.sqrt(kappa) - 1.0) ** 2 * n_in / denom)
    return float(F) if F.ndim == 0 else F


def effective_noise(r: float, kappa: float, n_dev: float = 0.0, n_th: float = 0.0) -> float:
    if r < 0:
        raise ValueError("squeezing parameter must be non-negative")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return float(
        (1.0 + kappa) * np.cosh(2 * r) - 2.0 * np.sqrt(kappa) * np.sinh(2 * r) + n_dev + n_th
    )


def planck_occupancy(frequency: float, temperature: float) -> float:
    """Bose-Einstein mean photon number of a mode at ``frequency`` (Hz), ``temperature`` (K)."""
    if frequency <= 0 or temperature <= 0:
        raise ValueError("frequency and temperature must be positive")
    return float(1.0 / np.expm1(PLANCK_H * frequency / (BOLTZMANN_K * temperature)))


def coupled_noise(eps: float, n_env: float) -> float:
    """Thermal photons coupled into a channel with loss fraction ``eps``."""
    return eps * n_env


def attenuation_to_eps(length_m: float, rate_db_per_km: float) -> float:
    return 1.0 - 10.0 ** (-(length_m * rate_db_per_km / 1000.0) / 10.0)


def _validate_data(data) -> tuple:
    arr = np.asarray(list(data), dtype=float)
    if arr.ndim != 2 or arr.shape[1] not in (2, 3):
        raise ValueError("data must be rows of (n_in, F) or (n_in, F, sigma_F)")
    if arr.shape[0] < 3:
        raise FitError(f"need at least 3 points, got {arr.shape[0]}")
    n_in, F = arr[:, 0], arr[:, 1]
    sigma = arr[:, 2] if arr.shape[1] == 3 else np.ones_like(F)
    if np.any(n_in < 0):
        raise ValueError("photon numbers must be non-negative")
    if np.any((F <= 0) | (F > 1)):
        raise ValueError("fidelities must lie in (0, 1]")
    if np.any(sigma <= 0):
        raise ValueError("uncertainties must be positive")
    if np.ptp(n_in) == 0:
        raise FitError("degenerate data: all photon numbers are equal")
    return n_in, F, sigma


def mirror_params(params: ModelParams) -> ModelParams:
    """The other (kappa, zeta) pair that gives the identical fidelity curve.

    F depends on kappa only through (sqrt(kappa) - 1)^2 and zeta + kappa, so
    sqrt(kappa) -> 2 - sqrt(kappa) with zeta + kappa held fixed is an exact
    symmetry. Undefined for kappa >= 4.
    """
    root = np.sqrt(params.kappa)
    if root >= 2.0:
        raise ValueError("no mirror solution for kappa >= 4")
    kappa = (2.0 - root) ** 2
    return ModelParams(float(kappa), float(params.zeta + params.kappa - kappa))


def _from_curve(log_d: float, b: float, branch: str) -> ModelParams:
    # F = 2/D exp(-b n_in), D = zeta + kappa + 1, b = 2 (sqrt(kappa) - 1)^2 / D
    D = np.exp(log_d)
    u = np.sqrt(max(b, 0.0) * D / 2.0)
    root = 1.0 - u if branch == "attenuating" else 1.0 + u
    kappa = root ** 2
    return ModelParams(float(kappa), float(D - kappa - 1.0))


def fit_model(data: Iterable[Sequence[float]], branch: str = "attenuating", xatol: float = 1e-12) -> FitResult:
    """Weighted least-squares estimate of (kappa, zeta) from fidelity data.

    The curve is fitted in the well-conditioned coordinates (ln D, b) of
    ``F = 2/D exp(-b n_in)``, seeded by a weighted linear fit of ln F, and
    then mapped back to (kappa, zeta). The map is two-to-one (see
    :func:`mirror_params`); ``branch`` selects ``"attenuating"`` (kappa <= 1)
    or ``"amplifying"`` (kappa >= 1).
    """
    if branch not in ("attenuating", "amplifying"):
        raise ValueError(f"unknown branch {branch!r}")
    n_in, F, sigma = _validate_data(data)

    w = (F / sigma) ** 2
    A = np.column_stack([np.ones_like(n_in), -n_in]) * np.sqrt(w)[:, None]
    (c0, b0), *_ = np.linalg.lstsq(A, np.log(F) * np.sqrt(w), rcond=None)
    x0 = np.array([np.log(2.0) - c0, max(b0, 1e-12)])

    def chi2(x):
        model = 2.0 * np.exp(-x[0] - x[1] * n_in)
        return float(np.sum(((model - F) / sigma) ** 2))

    # fatol relative to the starting chi2; an absolute floor sits below float resolution
    fatol = 1e-13 * max(1.0, chi2(x0))
    options = {"xatol": xatol, "fatol": fatol, "maxfev": MAX_EVALUATIONS, "maxiter": MAX_EVALUATIONS}
    bounds = [(np.log(2.0), np.log(2.0 + ZETA_BOUNDS[1] + KAPPA_BOUNDS[1])), (0.0, None)]
    x0[0] = np.clip(x0[0], *bounds[0])
    best = minimize(chi2, x0, method="Nelder-Mead", bounds=bounds, options=options)
    iterations = best.nit
    polish = minimize(chi2, best.x, method="Nelder-Mead", bounds=bounds, options=options)
    iterations += polish.nit
    if polish.fun <= best.fun:
        best = polish
    if not best.success:
        raise FitError(f"fit did not converge: {best.message}")

    params = _from_curve(best.x[0], best.x[1], branch)
    if not (KAPPA_BOUNDS[0] <= params.kappa <= KAPPA_BOUNDS[1] and ZETA_BOUNDS[0] <= params.zeta <= ZETA_BOUNDS[1]):
        raise FitError(f"best fit {params} lies outside the parameter bounds on the {branch} branch")
    resid = model_fidelity(n_in, params) - F
    return FitResult(
        params=params,
        rms_residual=float(np.sqrt(np.mean(resid ** 2))),
        n_points=len(F),
        converged=True,
        iterations=int(iterations),
        chi2=float(best.fun),
    )


def fit_decomposition(data, s_tms_db: float) -> FitResult:
    """Fit kappa and the lumped excess noise n_dev + n_th with r fixed by the squeezing level.

    The split between device and thermal noise is not identifiable from
    fidelity data, so the excess is reported as ``n_dev`` with ``n_th = 0``.
    """
    n_in, F, sigma = _validate_data(data)
    r = s_tms_db * np.log(10.0) / 20.0

    def chi2(x):
        params = ModelParams(x[0], effective_noise(r, x[0], x[1]))
        return float(np.sum(((model_fidelity(n_in, params) - F) / sigma) ** 2))

    options = {"xatol": 1e-10, "fatol": 1e-14, "maxfev": MAX_EVALUATIONS}
    runs = [
        minimize(chi2, x0, method="Nelder-Mead", bounds=[KAPPA_BOUNDS, (0.0, 100.0)], options=options)
        for x0 in ((0.5, 0.1), (1.0, 1.0))
    ]
    ok = [res for res in runs if res.success]
    if not ok:
        raise FitError("decomposition fit did not converge")
    best = min(ok, key=lambda res: res.fun)
    params = ModelParams.from_decomposition(r, best.x[0], best.x[1], 0.0)
    resid = model_fidelity(n_in, params) - F
    return FitResult(params, float(np.sqrt(np.mean(resid ** 2))), len(F), True,
                     int(sum(res.nit for res in runs)), float(best.fun))
