"""Multimode Gaussian states and the operations that transform them.

States are immutable: every operation returns a new :class:`GaussianState`.
Conventions: quadrature order (x1, p1, x2, p2, ...), vacuum covariance equal
to the identity, and a coherent state |alpha> has mean (2 Re alpha, 2 Im alpha).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .symplectic import (
    PHYSICALITY_TOL,
    SYMPLECTIC_TOL,
    expand,
    is_symplectic,
    omega,
    rotation,
    symplectic_eigenvalues,
)


class UnphysicalStateError(ValueError):
    """Raised when a covariance matrix violates the uncertainty principle."""


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance matrix of an n-mode bosonic state."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if mean.size == 0 or mean.size % 2:
            raise ValueError(f"mean must have positive even length, got {mean.size}")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"cov shape {cov.shape} does not match mean length {mean.size}")
        cov = 0.5 * (cov + cov.T)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def block(self, mode: int) -> np.ndarray:
        """2x2 covariance block of one mode."""
        _check_mode(self, mode)
        return self.cov[2 * mode:2 * mode + 2, 2 * mode:2 * mode + 2]

    def min_symplectic_eigenvalue(self) -> float:
        return float(symplectic_eigenvalues(self.cov)[0])

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        return self.min_symplectic_eigenvalue() >= 1.0 - tol

    def require_physical(self, tol: float = PHYSICALITY_TOL) -> "GaussianState":
        nu = self.min_symplectic_eigenvalue()
        if nu < 1.0 - tol:
            raise UnphysicalStateError(f"minimum symplectic eigenvalue {nu:.12g} < 1")
        return self

    def allclose(self, other: "GaussianState", atol: float = 1e-10) -> bool:
        return (
            self.n_modes == other.n_modes
            and np.allclose(self.mean, other.mean, atol=atol, rtol=0)
            and np.allclose(self.cov, other.cov, atol=atol, rtol=0)
        )


@dataclass(frozen=True)
class SymplecticOp:
    """A symplectic matrix acting on the quadratures of a state."""

    matrix: np.ndarray
    description: str = field(default="")

    def __post_init__(self):
        S = np.array(self.matrix, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] % 2:
            raise ValueError(f"symplectic matrix must be square with even size, got {S.shape}")
        if not is_symplectic(S, SYMPLECTIC_TOL):
            raise ValueError(f"matrix for {self.description or 'operation'} is not symplectic")
        S.setflags(write=False)
        object.__setattr__(self, "matrix", S)

    def apply(self, state: GaussianState) -> GaussianState:
        S = self.matrix
        if S.shape[0] != state.mean.size:
            raise ValueError("operation and state dimensions differ")
        return GaussianState(S @ state.mean, S @ state.cov @ S.T)

    def __matmul__(self, other: "SymplecticOp") -> "SymplecticOp":
        return SymplecticOp(self.matrix @ other.matrix, f"{self.description} . {other.description}")


def _check_mode(state: GaussianState, mode: int) -> None:
    if not isinstance(mode, (int, np.integer)) or not 0 <= mode < state.n_modes:
        raise IndexError(f"mode {mode!r} out of range for {state.n_modes}-mode state")


def _quad(z: complex) -> np.ndarray:
    z = complex(z)
    return np.array([2.0 * z.real, 2.0 * z.imag])


# --- states -----------------------------------------------------------------

def vacuum(n_modes: int = 1) -> GaussianState:
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    return GaussianState(np.zeros(2 * n_modes), np.eye(2 * n_modes))


def coherent(alpha: complex) -> GaussianState:
    return GaussianState(_quad(alpha), np.eye(2))


def thermal(n_occ: float) -> GaussianState:
    """Single-mode thermal state with mean photon number ``n_occ``."""
    if n_occ < 0:
        raise ValueError(f"occupancy must be non-negative, got {n_occ}")
    return GaussianState(np.zeros(2), (2.0 * n_occ + 1.0) * np.eye(2))


def tensor(a: GaussianState, b: GaussianState) -> GaussianState:
    n = a.mean.size
    cov = np.zeros((n + b.mean.size,) * 2)
    cov[:n, :n] = a.cov
    cov[n:, n:] = b.cov
    return GaussianState(np.concatenate([a.mean, b.mean]), cov)


def partial_trace(state: GaussianState, keep: Sequence[int]) -> GaussianState:
    """Reduced state on the modes in ``keep`` (in the given order)."""
    keep = list(keep)
    if not keep:
        raise ValueError("must keep at least one mode")
    for m in keep:
        _check_mode(state, m)
    if len(set(keep)) != len(keep):
        raise ValueError("duplicate modes in keep")
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in keep])
    return GaussianState(state.mean[idx], state.cov[np.ix_(idx, idx)])


# --- symplectic operations --------------------------------------------------

def squeezer_op(n_modes: int, mode: int, r: float, phi: float = 0.0) -> SymplecticOp:
    """Squeezes the quadrature at angle ``phi`` by e^-r (variance e^-2r)."""
    R = rotation(phi)
    block = R @ np.diag([np.exp(-r), np.exp(r)]) @ R.T
    return SymplecticOp(expand(block, [mode], n_modes), f"squeeze(r={r:g}, phi={phi:g})")


def rotation_op(n_modes: int, mode: int, theta: float) -> SymplecticOp:
    return SymplecticOp(expand(rotation(theta), [mode], n_modes), f"rotate({theta:g})")


def beam_splitter_op(n_modes: int, mode_i: int, mode_j: int, tau: float, phase: float = 0.0) -> SymplecticOp:
    """Beam splitter a_i -> t a_i - r e^{-i phase} a_j, a_j -> r e^{i phase} a_i + t a_j.

    ``tau`` is the power transmissivity t^2.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {tau}")
    if mode_i == mode_j:
        raise ValueError("beam splitter needs two distinct modes")
    t, r = np.sqrt(tau), np.sqrt(1.0 - tau)
    block = np.block([
        [t * np.eye(2), -r * rotation(-phase)],
        [r * rotation(phase), t * np.eye(2)],
    ])
    return SymplecticOp(expand(block, [mode_i, mode_j], n_modes), f"bs(tau={tau:g})")


def amplifier_op(n_modes: int, mode: int, gain_db: float, axis_phi: float = 0.0) -> SymplecticOp:
    """Noiseless phase-sensitive amplifier: amplitude gain sqrt(G) along ``axis_phi``."""
    g = 10.0 ** (gain_db / 20.0)
    R = rotation(axis_phi)
    block = R @ np.diag([g, 1.0 / g]) @ R.T
    return SymplecticOp(expand(block, [mode], n_modes), f"amp(G={gain_db:g} dB)")


def squeeze(state: GaussianState, mode: int, r: float, phi: float = 0.0) -> GaussianState:
    _check_mode(state, mode)
    if r < 0:
        raise ValueError("squeezing parameter must be non-negative; rotate phi instead")
    return squeezer_op(state.n_modes, mode, r, phi).apply(state)


def phase_rotation(state: GaussianState, mode: int, theta: float) -> GaussianState:
    _check_mode(state, mode)
    return rotation_op(state.n_modes, mode, theta).apply(state)


def beam_splitter(state: GaussianState, mode_i: int, mode_j: int, tau: float, phase: float = 0.0) -> GaussianState:
    _check_mode(state, mode_i)
    _check_mode(state, mode_j)
    return beam_splitter_op(state.n_modes, mode_i, mode_j, tau, phase).apply(state)


def phase_sensitive_amp(state: GaussianState, mode: int, gain_db: float, axis_phi: float = 0.0) -> GaussianState:
    _check_mode(state, mode)
    return amplifier_op(state.n_modes, mode, gain_db, axis_phi).apply(state)


def displace(state: GaussianState, mode: int, beta: complex) -> GaussianState:
    _check_mode(state, mode)
    mean = state.mean.copy()
    mean[2 * mode:2 * mode + 2] += _quad(beta)
    return GaussianState(mean, state.cov)


def loss_thermal_channel(state: GaussianState, mode: int, eps: float, n_env: float) -> GaussianState:
    """Beam-splitter coupling of ``mode`` to a thermal bath.

    A fraction ``eps`` of the power is replaced by a bath mode with
    occupancy ``n_env``, which adds ``eps * n_env`` photons to a vacuum input.
    """
    _check_mode(state, mode)
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"loss fraction must lie in [0, 1], got {eps}")
    if n_env < 0:
        raise ValueError(f"bath occupancy must be non-negative, got {n_env}")
    scale = np.ones(state.mean.size)
    scale[2 * mode:2 * mode + 2] = np.sqrt(1.0 - eps)
    added = np.zeros(state.mean.size)
    added[2 * mode:2 * mode + 2] = eps * (2.0 * n_env + 1.0)
    cov = scale[:, None] * state.cov * scale[None, :] + np.diag(added)
    return GaussianState(scale * state.mean, cov)


def photon_number(state: GaussianState, mode: int = 0) -> float:
    _check_mode(state, mode)
    m = state.mean[2 * mode:2 * mode + 2]
    return float((m @ m + np.trace(state.block(mode)) - 2.0) / 4.0)


def db_to_r(s_db: float) -> float:
    """Squeezing parameter for a squeezing level in dB below vacuum."""
    return s_db * np.log(10.0) / 20.0


def r_to_db(r: float) -> float:
    return 20.0 * r / np.log(10.0)


__all__ = [
    "GaussianState", "SymplecticOp", "UnphysicalStateError", "omega",
    "vacuum", "coherent", "thermal", "tensor", "partial_trace",
    "squeezer_op", "rotation_op", "beam_splitter_op", "amplifier_op",
    "squeeze", "phase_rotation", "beam_splitter", "phase_sensitive_amp",
    "displace", "loss_thermal_channel", "photon_number", "db_to_r", "r_to_db",
]
