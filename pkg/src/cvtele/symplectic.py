"""Symplectic-form helpers shared by the state, measure and protocol modules.

Quadratures are ordered (x1, p1, x2, p2, ...) with x = a + a^dag and
p = -i(a - a^dag), so the vacuum covariance matrix is the identity.
"""

import numpy as np

# Tolerances used across the package.
SYMMETRY_TOL = 1e-10
PHYSICALITY_TOL = 1e-9
SYMPLECTIC_TOL = 1e-9


def omega(n_modes: int) -> np.ndarray:
    """Standard symplectic form, block diagonal in [[0, 1], [-1, 0]]."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def expand(block: np.ndarray, modes, n_modes: int) -> np.ndarray:
    """Embed a 2k x 2k symplectic block acting on ``modes`` into n modes."""
    modes = list(modes)
    S = np.eye(2 * n_modes)
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes])
    S[np.ix_(idx, idx)] = block
    return S


def is_symplectic(S: np.ndarray, tol: float = SYMPLECTIC_TOL) -> bool:
    n = S.shape[0] // 2
    W = omega(n)
    return bool(np.allclose(S.T @ W @ S, W, atol=tol, rtol=0.0))


def symplectic_eigenvalues(cov) -> np.ndarray:
    """Symplectic spectrum of a covariance matrix, sorted ascending.

    The absolute eigenvalues of ``i * Omega @ cov`` come in pairs; one value
    per pair is returned. For positive definite input the Hermitian form
    ``i L^T Omega L`` (``cov = L L^T``) is diagonalised instead, which is
    better conditioned.

    Raises:
        ValueError: if ``cov`` is not square, of even dimension and symmetric.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
        raise ValueError(f"covariance must be square with even dimension, got {cov.shape}")
    scale = max(1.0, float(np.max(np.abs(cov))))
    if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
        raise ValueError("covariance matrix is not symmetric")
    n = cov.shape[0] // 2
    W = omega(n)
    try:
        L = np.linalg.cholesky(cov)
        ev = np.linalg.eigvalsh(1j * (L.T @ W @ L))
    except np.linalg.LinAlgError:
        ev = np.linalg.eigvals(1j * (W @ cov))
    ev = np.sort(np.abs(np.real(ev)))
    return ev[::2]
