"""Built-in acceptance checks, run by ``sim --check`` and the test suite.

Each check returns a :class:`CheckResult`; tolerances are fixed here.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import gaussian as g
from .effective_model import (
    ModelParams,
    attenuation_to_eps,
    coupled_noise,
    fit_model,
    model_fidelity,
    planck_occupancy,
)
from .hybrid_qubit import average_qubit_fidelity, fidelity_ground
from .measures import negativity
from .presets import ideal_config, lossless_config, calibrated_config
from .protocol import build_tms, calibrate_gain, run_teleportation, sweep_photon_number
from .tomography import gaussianity_test, jackknife, sample_moments, sample_state, compute_moments

REFERENCE = ModelParams(0.778, 1.015)


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d}. {self.name}: {self.detail} ({self.seconds:.2f} s)"


def _crossing(params: ModelParams, level: float) -> float:
    return brentq(lambda n: model_fidelity(n, params) - level, 0.0, 1e4, xtol=1e-12)


def check_fidelity_model():
    f0 = model_fidelity(0.0, REFERENCE)
    n_nc = _crossing(REFERENCE, 2.0 / 3.0)
    n_cl = _crossing(REFERENCE, 0.5)
    ok = abs(f0 - 0.7160) <= 0.0005 and abs(n_nc - 8.3) <= 0.5 and abs(n_cl - 33.0) <= 2.0
    return ok, f"F(0)={f0:.5f} (0.7160+-0.0005), F=2/3 at n_in={n_nc:.3f} (8.3+-0.5), F=1/2 at n_in={n_cl:.3f} (33+-2)", 1.0


def check_attenuation():
    att = REFERENCE.attenuation_db
    return abs(att - 1.09) <= 0.01, f"-10 log10(0.778) = {att:.4f} dB (1.09+-0.01)", 1.0


def check_thermal_coupling():
    eps = attenuation_to_eps(6.0, 1.0)
    n_env = planck_occupancy(5.35e9, 4.0)
    n_th = coupled_noise(eps, n_env)
    return abs(n_th - 0.021) <= 0.002, f"eps={eps:.4e}, n_env={n_env:.3f}, n_th={n_th:.4f} (0.021+-0.002)", 1.0


def check_circuit_model_equivalence():
    n_in = np.logspace(-2, 2, 20)
    points = sweep_photon_number(calibrated_config(), n_in, n_phases=16)
    fit = fit_model([(p.n_in, p.fidelity, 1.0) for p in points])
    f_ideal = run_teleportation(ideal_config(60.0), 1.0 + 0.5j).fidelity
    f_cl = [run_teleportation(ideal_config(0.0), a).fidelity for a in (0.0, 1.0, 3j)]
    dev_cl = max(abs(f - 0.5) for f in f_cl)
    ok = fit.rms_residual < 1e-3 and f_ideal >= 1.0 - 1e-3 and dev_cl <= 1e-6
    detail = (f"fit rms={fit.rms_residual:.2e} (<1e-3), kappa={fit.params.kappa:.4f}, zeta={fit.params.zeta:.4f};"
              f" F(60 dB)={f_ideal:.6f} (>=0.999); max|F(0 dB)-0.5|={dev_cl:.2e} (<=1e-6)")
    return ok, detail, 10.0


def check_gain_calibration():
    gain = calibrate_gain(lossless_config(coupler_db=15.0))
    target = 15.0 + 6.02
    return abs(gain - target) <= 0.01, f"G={gain:.4f} dB (target {target:.2f}+-0.01)", 1.0


def check_qubit_formulas():
    # grid restricted to kappa + zeta >= 1, where F(|0>) <= 1
    kappas = np.linspace(0.05, 2.0, 10)
    zetas = np.linspace(0.0, 5.0, 10)
    dev = max(
        abs(fidelity_ground(k, z) - model_fidelity(0.0, ModelParams(k, z)))
        for k in kappas for z in zetas if k + z >= 1.0
    )
    f_perfect = average_qubit_fidelity(1.0, 0.0)
    f_ref = average_qubit_fidelity(0.778, 1.015)
    ok = dev <= 1e-12 and f_perfect == 1.0 and abs(f_ref - 0.601) <= 0.001
    return ok, f"max|F(|0>) - F(n_in=0)|={dev:.1e}, Fbar(1,0)={f_perfect!r}, Fbar(0.778,1.015)={f_ref:.4f} (0.601+-0.001)", 1.0


def _random_local_symplectic(rng) -> np.ndarray:
    r = rng.uniform(0, 1.0)
    a, b = rng.uniform(0, 2 * np.pi, 2)
    return (g.rotation_op(1, 0, a).matrix @ g.squeezer_op(1, 0, r, b).matrix)


def check_entanglement_measures():
    r = g.db_to_r(5.0)
    n_ideal = negativity(build_tms(5.0))
    closed = (np.exp(2 * r) - 1) / 2
    rng = np.random.default_rng(7)
    base = g.loss_thermal_channel(build_tms(5.0, 0.05), 1, 0.1, 0.5)
    n0 = negativity(base)
    worst = 0.0
    for _ in range(100):
        S = np.eye(4)
        S[:2, :2] = _random_local_symplectic(rng)
        S[2:, 2:] = _random_local_symplectic(rng)
        moved = g.SymplecticOp(S, "local").apply(base)
        worst = max(worst, abs(negativity(moved) - n0))
    hot = g.loss_thermal_channel(build_tms(5.0), 1, attenuation_to_eps(6.0, 1.0), planck_occupancy(5.35e9, 4.0))
    n_hot = negativity(hot)
    ok = abs(n_ideal - 1.081) <= 0.001 and abs(n_ideal - closed) <= 1e-12 and worst < 1e-8 and n_hot > 0
    return ok, f"N(5 dB)={n_ideal:.5f} (1.081+-0.001), max local change={worst:.1e} (<1e-8), N after 4 K link={n_hot:.4f} (>0)", 5.0


def check_fit_roundtrip():
    n_in = np.logspace(-2, 2, 20)
    clean = model_fidelity(n_in, REFERENCE)
    fit = fit_model(list(zip(n_in, clean)))
    err_clean = max(abs(fit.params.kappa - REFERENCE.kappa), abs(fit.params.zeta - REFERENCE.zeta))
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        noisy = clean * (1.0 + 0.005 * rng.standard_normal(n_in.size))
        res = fit_model(list(zip(n_in, noisy, 0.005 * clean)))
        worst = max(worst, abs(res.params.kappa / REFERENCE.kappa - 1), abs(res.params.zeta / REFERENCE.zeta - 1))
    ok = err_clean <= 1e-6 and worst <= 0.02
    return ok, f"noiseless error={err_clean:.1e} (<=1e-6), worst relative error over 100 noisy seeds={worst:.4f} (<=0.02)", 30.0


def check_tomography():
    tms = build_tms(5.0)
    moments = sample_moments(tms, 10_000_000, seed=2024)
    n_est, n_se = jackknife(moments, negativity)
    closed = (np.exp(2 * g.db_to_r(5.0)) - 1) / 2
    z = abs(n_est - closed) / n_se
    state = g.squeeze(g.coherent(0.7 - 0.4j), 0, 0.3, 0.4)
    false_pos = sum(not gaussianity_test(sample_moments(state, 1_000_000, seed=s)).passed for s in range(100))
    rng = np.random.default_rng(11)
    mix = np.concatenate([sample_state(g.coherent(3.0), 500_000, 1), sample_state(g.coherent(-3.0), 500_000, 2)])
    rng.shuffle(mix)
    mixture = gaussianity_test(compute_moments(mix))
    ok = z <= 3.0 and false_pos <= 1 and not mixture.passed and not mixture.inconclusive
    detail = (f"N={n_est:.5f}+-{n_se:.5f} vs {closed:.5f} ({z:.2f} sigma, <=3); Gaussian false positives={false_pos}/100"
              f" (<=1); mixture verdict={mixture.verdict} (max stat {mixture.max_abs_statistic:.0f})")
    return ok, detail, 120.0


def _random_state(rng, n: int) -> g.GaussianState:
    state = g.vacuum(n)
    for m in range(n):
        state = g.loss_thermal_channel(state, m, rng.uniform(0, 1), rng.uniform(0, 3))
        state = g.squeeze(state, m, rng.uniform(0, 1.2), rng.uniform(0, np.pi))
        state = g.displace(state, m, complex(*rng.normal(0, 2, 2)))
    for _ in range(n - 1):
        i, j = rng.choice(n, 2, replace=False)
        state = g.beam_splitter(state, int(i), int(j), rng.uniform(0, 1), rng.uniform(0, 2 * np.pi))
    return state


def _random_step(rng, state: g.GaussianState) -> g.GaussianState:
    n = state.n_modes
    m = int(rng.integers(n))
    kind = rng.integers(7)
    if kind == 0:
        return g.squeeze(state, m, rng.uniform(0, 1.2), rng.uniform(0, 2 * np.pi))
    if kind == 1:
        return g.phase_rotation(state, m, rng.uniform(0, 2 * np.pi))
    if kind == 2 and n > 1:
        i, j = rng.choice(n, 2, replace=False)
        return g.beam_splitter(state, int(i), int(j), rng.uniform(0, 1), rng.uniform(0, 2 * np.pi))
    if kind == 3:
        return g.phase_sensitive_amp(state, m, rng.uniform(-10, 10), rng.uniform(0, np.pi))
    if kind == 4:
        return g.displace(state, m, complex(*rng.normal(0, 2, 2)))
    if kind == 5:
        return g.loss_thermal_channel(state, m, rng.uniform(0, 1), rng.uniform(0, 5))
    if n > 1:
        keep = sorted(rng.choice(n, int(rng.integers(1, n)), replace=False).tolist())
        return g.partial_trace(state, keep)
    return g.tensor(state, _random_state(rng, 1))


def check_physicality():
    rng = np.random.default_rng(42)
    worst = np.inf
    for _ in range(1000):
        state = _random_state(rng, int(rng.integers(1, 4)))
        worst = min(worst, state.min_symplectic_eigenvalue())
        for _ in range(int(rng.integers(1, 9))):
            state = _random_step(rng, state)
            worst = min(worst, state.min_symplectic_eigenvalue())
    return worst >= 1.0 - 1e-9, f"min symplectic eigenvalue over 1000 pipelines = {worst:.12f} (>=1-1e-9)", 10.0


CHECKS: list = [
    (1, "Fidelity model reproduction", check_fidelity_model),
    (2, "Implied attenuation", check_attenuation),
    (3, "Thermal coupling of the cryolink", check_thermal_coupling),
    (4, "Circuit vs closed-form model", check_circuit_model_equivalence),
    (5, "Gain calibration G = 4 eta", check_gain_calibration),
    (6, "Qubit teleportation formulas", check_qubit_formulas),
    (7, "Entanglement measures", check_entanglement_measures),
    (8, "Fit round trip", check_fit_roundtrip),
    (9, "Tomography end to end", check_tomography),
    (10, "Physicality of random pipelines", check_physicality),
]


def run_check(number: int) -> CheckResult:
    _, name, fn = next(c for c in CHECKS if c[0] == number)
    return _timed(number, name, fn)


def _timed(number: int, name: str, fn: Callable) -> CheckResult:
    t0 = time.perf_counter()
    ok, detail, budget = fn()
    dt = time.perf_counter() - t0
    if dt > budget:
        ok = False
        detail += f"; runtime {dt:.1f} s exceeds {budget:g} s"
    return CheckResult(number, name, bool(ok), detail, dt)


def run_all(verbose: bool = True) -> bool:
    results = []
    for number, name, fn in CHECKS:
        res = _timed(number, name, fn)
        results.append(res)
        if verbose:
            print(res.line(), flush=True)
    n_pass = sum(r.passed for r in results)
    if verbose:
        print(f"{n_pass}/{len(results)} acceptance criteria passed")
    return n_pass == len(results)
