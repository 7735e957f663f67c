"""Quadrature sampling, moment accumulation and Gaussian state reconstruction.

Samples are already-calibrated quadratures in vacuum units. Moments are
accumulated per batch; standard errors come from a leave-one-batch-out
jackknife.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .formatting import write_csv
from .gaussian import GaussianState, UnphysicalStateError

DEFAULT_BATCHES = 100
GAUSSIANITY_THRESHOLD = 4.0
MIN_SAMPLES_FOR_VERDICT = 1000


class ReconstructionError(ValueError):
    """Moments do not describe a valid Gaussian state."""


def monomials(n_vars: int, max_order: int) -> list:
    """Exponent tuples of all monomials with total order <= max_order, sorted by order."""
    out = []
    for k in range(max_order + 1):
        for combo in itertools.combinations_with_replacement(range(n_vars), k):
            e = [0] * n_vars
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


@dataclass(frozen=True)
class MomentSet:
    """Raw moments <prod x_i^e_i> up to ``max_order``, overall and per batch."""

    exponents: tuple
    values: np.ndarray
    batch_values: np.ndarray
    batch_sizes: np.ndarray
    max_order: int

    def __post_init__(self):
        if len(self.exponents) != len(self.values) or self.batch_values.shape[1] != len(self.values):
            raise ValueError("inconsistent moment table")
        if self.n_vars % 2:
            raise ValueError("quadrature count must be even")
        zero = self.index[tuple([0] * self.n_vars)]
        if not np.isclose(self.values[zero], 1.0):
            raise ValueError("order-0 moment must equal 1")

    @property
    def n_vars(self) -> int:
        return len(self.exponents[0])

    @property
    def n_samples(self) -> int:
        return int(self.batch_sizes.sum())

    @property
    def n_batches(self) -> int:
        return len(self.batch_sizes)

    @property
    def index(self) -> dict:
        return {e: i for i, e in enumerate(self.exponents)}

    def raw(self, exponent) -> float:
        return float(self.values[self.index[tuple(exponent)]])

    def leave_one_out(self) -> np.ndarray:
        """Moment vectors with each batch removed in turn, shape (B, M)."""
        sizes = self.batch_sizes[:, None].astype(float)
        total = (self.batch_values * sizes).sum(axis=0)
        return (total[None, :] - self.batch_values * sizes) / (self.n_samples - sizes)

    def stderr(self) -> np.ndarray:
        return _jackknife_se(self.leave_one_out())


def _jackknife_se(replicates: np.ndarray) -> np.ndarray:
    B = replicates.shape[0]
    dev = replicates - replicates.mean(axis=0)
    return np.sqrt((B - 1) / B * np.sum(dev ** 2, axis=0))


# --- sampling -----------------------------------------------------------------

def _factor(state: GaussianState) -> np.ndarray:
    if not state.is_physical():
        raise UnphysicalStateError("cannot sample an unphysical state")
    return np.linalg.cholesky(state.cov)


def sample_state(state: GaussianState, n_samples: int, seed: int) -> np.ndarray:
    """Draw ``n_samples`` quadrature vectors, shape (n_samples, 2 n_modes)."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    L = _factor(state)
    z = np.random.default_rng(seed).standard_normal((n_samples, state.mean.size))
    return state.mean + z @ L.T


def _batch_moments(x: np.ndarray, exponents, max_order: int) -> np.ndarray:
    powers = [np.ones_like(x)]
    for _ in range(max_order):
        powers.append(powers[-1] * x)
    out = np.empty(len(exponents))
    for k, e in enumerate(exponents):
        prod = None
        for j, p in enumerate(e):
            if p:
                prod = powers[p][:, j] if prod is None else prod * powers[p][:, j]
        out[k] = 1.0 if prod is None else prod.mean()
    return out


def _check_order(max_order: int) -> None:
    if max_order not in (2, 3, 4):
        raise ValueError(f"max_order must be 2, 3 or 4, got {max_order}")


def compute_moments(samples, max_order: int = 4, n_batches: int = DEFAULT_BATCHES) -> MomentSet:
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise ValueError("samples must be a 2-D array (n_samples, n_quadratures)")
    _check_order(max_order)
    if samples.shape[0] < n_batches:
        raise ValueError(f"{samples.shape[0]} samples cannot fill {n_batches} batches")
    exps = monomials(samples.shape[1], max_order)
    chunks = np.array_split(samples, n_batches)
    return _assemble(exps, [_batch_moments(c, exps, max_order) for c in chunks],
                     [len(c) for c in chunks], max_order)


def sample_moments(state: GaussianState, n_samples: int, seed: int, max_order: int = 4,
                   n_batches: int = DEFAULT_BATCHES) -> MomentSet:
    """Same result as ``compute_moments(sample_state(...))`` without holding all samples."""
    _check_order(max_order)
    if n_samples < n_batches:
        raise ValueError(f"{n_samples} samples cannot fill {n_batches} batches")
    L = _factor(state)
    rng = np.random.default_rng(seed)
    d = state.mean.size
    exps = monomials(d, max_order)
    sizes = [len(c) for c in np.array_split(np.empty(n_samples, dtype=np.bool_), n_batches)]
    rows = []
    for size in sizes:
        x = state.mean + rng.standard_normal((size, d)) @ L.T
        rows.append(_batch_moments(x, exps, max_order))
    return _assemble(exps, rows, sizes, max_order)


def _assemble(exps, rows, sizes, max_order) -> MomentSet:
    batch_values = np.array(rows)
    sizes = np.array(sizes, dtype=np.int64)
    values = (batch_values * sizes[:, None]).sum(axis=0) / sizes.sum()
    return MomentSet(tuple(exps), values, batch_values, sizes, max_order)


# --- reconstruction -----------------------------------------------------------

def _unit(d: int, *idx) -> tuple:
    e = [0] * d
    for i in idx:
        e[i] += 1
    return tuple(e)


def _gaussian_from_vector(vec: np.ndarray, index: dict, d: int, n: int):
    mean = np.array([vec[..., index[_unit(d, i)]] for i in range(d)]).T
    cov = np.empty(vec.shape[:-1] + (d, d))
    for i in range(d):
        for j in range(i, d):
            c = vec[..., index[_unit(d, i, j)]] - mean[..., i] * mean[..., j]
            cov[..., i, j] = cov[..., j, i] = c * n / (n - 1)
    return mean, cov


@dataclass(frozen=True)
class ReconstructionResult:
    state_estimate: GaussianState
    mean_stderr: np.ndarray
    cov_stderr: np.ndarray
    gaussianity: Optional[float]
    n_samples: int


def reconstruct_gaussian(moments: MomentSet) -> ReconstructionResult:
    """Gaussian state estimate from first- and second-order moments."""
    if moments.max_order < 2:
        raise ReconstructionError("reconstruction needs moments up to second order")
    d, idx, N = moments.n_vars, moments.index, moments.n_samples
    mean, cov = _gaussian_from_vector(moments.values, idx, d, N)
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ReconstructionError("estimated covariance matrix is not positive definite") from None
    loo = moments.leave_one_out()
    loo_mean, loo_cov = _gaussian_from_vector(loo, idx, d, N)
    B = moments.n_batches
    gauss = gaussianity_test(moments).max_abs_statistic if moments.max_order >= 3 else None
    return ReconstructionResult(
        state_estimate=GaussianState(mean, cov),
        mean_stderr=_jackknife_se(loo_mean.reshape(B, -1)).reshape(d),
        cov_stderr=_jackknife_se(loo_cov.reshape(B, -1)).reshape(d, d),
        gaussianity=gauss,
        n_samples=N,
    )


def jackknife(moments: MomentSet, func: Callable[[GaussianState], float]) -> tuple:
    """Estimate and jackknife standard error of a scalar function of the reconstructed state."""
    d, idx, N = moments.n_vars, moments.index, moments.n_samples
    mean, cov = _gaussian_from_vector(moments.values, idx, d, N)
    value = float(func(GaussianState(mean, cov)))
    loo_mean, loo_cov = _gaussian_from_vector(moments.leave_one_out(), idx, d, N)
    reps = np.array([func(GaussianState(m, c)) for m, c in zip(loo_mean, loo_cov)], dtype=float)
    return value, float(_jackknife_se(reps[:, None])[0])


# --- Gaussianity --------------------------------------------------------------

def _central(vec: np.ndarray, index: dict, d: int, combo: tuple) -> np.ndarray:
    """Central moment E[prod (x_i - m_i)] for the index multiset ``combo``."""
    k = len(combo)
    means = [vec[..., index[_unit(d, i)]] for i in combo]
    total = 0.0
    for mask in itertools.product((0, 1), repeat=k):
        kept = [combo[p] for p in range(k) if mask[p]]
        term = vec[..., index[_unit(d, *kept)]]
        for p in range(k):
            if not mask[p]:
                term = -term * means[p]
        total = total + term
    return total


def _cumulants(vec: np.ndarray, index: dict, d: int, max_order: int) -> dict:
    cov = {(i, j): _central(vec, index, d, (i, j)) for i in range(d) for j in range(d)}
    out = {}
    for combo in itertools.combinations_with_replacement(range(d), 3):
        out[combo] = _central(vec, index, d, combo)
    if max_order >= 4:
        for combo in itertools.combinations_with_replacement(range(d), 4):
            i, j, k, l = combo
            out[combo] = _central(vec, index, d, combo) - (
                cov[i, j] * cov[k, l] + cov[i, k] * cov[j, l] + cov[i, l] * cov[j, k]
            )
    return out


@dataclass(frozen=True)
class GaussianityResult:
    statistics: dict  # index multiset -> cumulant / standard error
    cumulants: dict
    max_abs_statistic: float
    passed: bool
    inconclusive: bool
    threshold: float

    @property
    def verdict(self) -> str:
        if self.inconclusive:
            return "inconclusive"
        return "gaussian" if self.passed else "non-gaussian"


def gaussianity_test(moments: MomentSet, threshold: float = GAUSSIANITY_THRESHOLD,
                     min_samples: int = MIN_SAMPLES_FOR_VERDICT) -> GaussianityResult:
    """Test that third cumulants and excess fourth cumulants vanish.

    Each cumulant is divided by its jackknife standard error; the state
    passes when every statistic is below ``threshold`` in magnitude.
    Small samples or too few batches give an inconclusive verdict.
    """
    if moments.max_order < 3:
        raise ValueError("Gaussianity test needs moments of order 3 or higher")
    d, idx = moments.n_vars, moments.index
    cums = _cumulants(moments.values, idx, d, moments.max_order)
    loo = _cumulants(moments.leave_one_out(), idx, d, moments.max_order)
    stats = {}
    bad = False
    for key, c in cums.items():
        se = float(_jackknife_se(np.asarray(loo[key])[:, None])[0])
        if not np.isfinite(se) or se <= 0:
            bad = True
            stats[key] = float("nan")
        else:
            stats[key] = float(c) / se
    finite = [abs(s) for s in stats.values() if np.isfinite(s)]
    max_abs = max(finite) if finite else float("nan")
    inconclusive = bad or moments.n_samples < min_samples or moments.n_batches < 10
    return GaussianityResult(
        statistics=stats,
        cumulants={k: float(v) for k, v in cums.items()},
        max_abs_statistic=max_abs,
        passed=(not inconclusive) and max_abs < threshold,
        inconclusive=inconclusive,
        threshold=threshold,
    )


# --- CSV interchange ----------------------------------------------------------

def quadrature_labels(n_vars: int) -> list:
    return [f"{q}{m + 1}" for m in range(n_vars // 2) for q in ("x", "p")]


def write_samples_csv(path, samples) -> Path:
    samples = np.asarray(samples)
    return write_csv(path, quadrature_labels(samples.shape[1]), samples.tolist())


def read_samples_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def write_moments_csv(path, moments: MomentSet) -> Path:
    """One row per moment index.

    Columns: ``index`` (exponents joined by ';'), ``order``, ``value``,
    ``stderr`` and one column per batch. The order-0 row carries the batch
    sample counts in its batch columns.
    """
    B = moments.n_batches
    header = ["index", "order", "value", "stderr"] + [f"batch_{b}" for b in range(B)]
    se = moments.stderr()
    rows = []
    for k, e in enumerate(moments.exponents):
        batch = moments.batch_sizes.tolist() if sum(e) == 0 else moments.batch_values[:, k].tolist()
        rows.append([";".join(map(str, e)), sum(e), moments.values[k], se[k]] + batch)
    return write_csv(path, header, rows)


def read_moments_csv(path) -> MomentSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:4] != ["index", "order", "value", "stderr"]:
            raise ValueError(f"unexpected moments header {header[:4]}")
        rows = list(reader)
    exps = tuple(tuple(int(v) for v in row[0].split(";")) for row in rows)
    values = np.array([float(row[2]) for row in rows])
    batch = np.array([[float(v) for v in row[4:]] for row in rows]).T
    zero = exps.index(tuple([0] * len(exps[0])))
    sizes = batch[:, zero].astype(np.int64)
    batch[:, zero] = 1.0
    return MomentSet(exps, values, batch, sizes, max(sum(e) for e in exps))
