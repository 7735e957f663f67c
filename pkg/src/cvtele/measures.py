"""Entanglement, purity, squeezing and fidelity diagnostics."""

from dataclasses import dataclass

import numpy as np

from .gaussian import GaussianState, UnphysicalStateError
from .symplectic import symplectic_eigenvalues

__all__ = [
    "TwoModeDiagnostics",
    "symplectic_eigenvalues",
    "min_ptranspose_eigenvalue",
    "negativity",
    "purity",
    "squeezing_db",
    "fidelity_to_coherent",
    "diagnose",
]


@dataclass(frozen=True)
class TwoModeDiagnostics:
    negativity: float
    purity: float
    squeezing_db: tuple
    min_ptranspose_eig: float


def _require_two_modes(state: GaussianState) -> None:
    if state.n_modes != 2:
        raise ValueError(f"expected a two-mode state, got {state.n_modes} modes")


def min_ptranspose_eigenvalue(state: GaussianState) -> float:
    """Smallest symplectic eigenvalue of the partially transposed state.

    Partial transposition of mode 2 flips the sign of p2.
    """
    _require_two_modes(state)
    P = np.diag([1.0, 1.0, 1.0, -1.0])
    return float(symplectic_eigenvalues(P @ state.cov @ P)[0])


def negativity(state: GaussianState) -> float:
    nu = min_ptranspose_eigenvalue(state)
    return max(0.0, (1.0 - nu) / (2.0 * nu))


def purity(state: GaussianState) -> float:
    """Tr(rho^2) = 1/sqrt(det cov) in vacuum-normalised units."""
    try:
        np.linalg.cholesky(state.cov)
    except np.linalg.LinAlgError:
        raise ValueError("covariance matrix is not positive definite") from None
    sign, logdet = np.linalg.slogdet(state.cov)
    return float(np.exp(-0.5 * logdet))


def squeezing_db(state: GaussianState, mode: int = 0) -> float:
    """Squeezing below vacuum of the most squeezed quadrature, in dB.

    Negative values mean every quadrature is noisier than vacuum.
    """
    return float(-10.0 * np.log10(np.linalg.eigvalsh(state.block(mode))[0]))


def fidelity_to_coherent(target_alpha: complex, state: GaussianState) -> float:
    """Overlap <alpha| rho |alpha> of a single-mode Gaussian state with a coherent target.

    Uses F = 2 exp(-d^T Y^-1 d / 2) / sqrt(det Y) with Y = cov + I and d the
    mean offset; the 1/2 in the exponent belongs to the vacuum-normalised
    convention.
    """
    if state.n_modes != 1:
        raise ValueError("fidelity_to_coherent expects a single-mode state")
    if not state.is_physical():
        raise UnphysicalStateError("state is not physical")
    a = complex(target_alpha)
    d = state.mean - np.array([2.0 * a.real, 2.0 * a.imag])
    Y = state.cov + np.eye(2)
    det = np.linalg.det(Y)
    if det <= 0:
        raise np.linalg.LinAlgError("singular overlap matrix")
    F = 2.0 * np.exp(-0.5 * d @ np.linalg.solve(Y, d)) / np.sqrt(det)
    return float(min(F, 1.0))


def diagnose(state: GaussianState) -> TwoModeDiagnostics:
    nu = min_ptranspose_eigenvalue(state)
    return TwoModeDiagnostics(
        negativity=max(0.0, (1.0 - nu) / (2.0 * nu)),
        purity=purity(state),
        squeezing_db=(squeezing_db(state, 0), squeezing_db(state, 1)),
        min_ptranspose_eig=nu,
    )
