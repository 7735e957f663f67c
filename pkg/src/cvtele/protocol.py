"""Analog-feedforward teleportation of coherent states over a two-node link.

Mode bookkeeping inside the circuit::

    0: Alice's input coherent state    -> Bell-measurement port 1 -> discarded
    1: TMS arm A (stays at Alice)      -> Bell-measurement port 2 -> feedforward
    2: TMS arm B (sent to Bob)         -> directional coupler     -> output

The Bell measurement is a hybrid ring followed by a Josephson interferometer
(two degenerate amplifiers on orthogonal axes between two hybrid rings). For
amplitude gain g = sqrt(G) per amplifier this acts on the ring inputs as a
two-mode squeezer with cosh(s) = (g + 1/g) / 2, so the feedforward carries
cosh(s) a_in - sinh(s) a_A^dag.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import bisect

from .effective_model import ModelParams, attenuation_to_eps, planck_occupancy
from .gaussian import (
    GaussianState,
    beam_splitter,
    coherent,
    db_to_r,
    loss_thermal_channel,
    partial_trace,
    phase_sensitive_amp,
    photon_number,
    squeeze,
    tensor,
    thermal,
)
from .measures import fidelity_to_coherent, negativity, purity

CARRIER_FREQUENCY = 5.35e9


def _occupancy(frequency: float, temperature: float) -> float:
    return 0.0 if temperature <= 0 else planck_occupancy(frequency, temperature)


@dataclass(frozen=True)
class LossStage:
    """Insertion loss ``eps`` coupled to a bath.

    ``n_env=None`` ties the bath to the host node's mixing-chamber temperature.
    """

    eps: float
    n_env: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"loss fraction must lie in [0, 1], got {self.eps}")
        if self.n_env is not None and self.n_env < 0:
            raise ValueError("bath occupancy must be non-negative")

    @classmethod
    def from_db(cls, loss_db: float, n_env: Optional[float] = None) -> "LossStage":
        return cls(1.0 - 10.0 ** (-loss_db / 10.0), n_env)


@dataclass(frozen=True)
class ChannelConfig:
    """One cable of the cryolink, thermalised at its center temperature."""

    length: float = 6.0
    attenuation_rate: float = 1.0
    t_cen: float = 0.0
    carrier_frequency: float = CARRIER_FREQUENCY
    explicit_eps: Optional[float] = None

    def __post_init__(self):
        if self.length < 0 or self.attenuation_rate < 0 or self.t_cen < 0:
            raise ValueError("length, attenuation rate and temperature must be non-negative")
        if self.explicit_eps is not None and not 0.0 <= self.explicit_eps < 1.0:
            raise ValueError("explicit_eps must lie in [0, 1)")

    @property
    def eps(self) -> float:
        if self.explicit_eps is not None:
            return self.explicit_eps
        return attenuation_to_eps(self.length, self.attenuation_rate)

    @property
    def n_env(self) -> float:
        return _occupancy(self.carrier_frequency, self.t_cen)

    @property
    def n_th(self) -> float:
        return self.eps * self.n_env


@dataclass(frozen=True)
class TMcMap:
    """Piecewise-linear map from cryolink center temperature to (Alice, Bob) MC temperatures.

    Values are held constant beyond the outermost breakpoints.
    """

    breakpoints: tuple = ((0.0, 0.0, 0.0), (0.2, 0.2, 0.2))

    def __post_init__(self):
        bp = tuple(tuple(float(v) for v in row) for row in self.breakpoints)
        if not bp or any(len(row) != 3 for row in bp):
            raise ValueError("breakpoints must be (t_cen, t_alice, t_bob) triples")
        if any(b[0] <= a[0] for a, b in zip(bp, bp[1:])):
            raise ValueError("breakpoint temperatures must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)

    def __call__(self, t_cen: float) -> tuple:
        arr = np.array(self.breakpoints)
        return (float(np.interp(t_cen, arr[:, 0], arr[:, 1])),
                float(np.interp(t_cen, arr[:, 0], arr[:, 2])))


@dataclass(frozen=True)
class ProtocolConfig:
    s_tms_db: float = 5.0
    gain_db: Optional[float] = None  # None: calibrate so the displacement gain is 1
    coupler_db: float = 15.0
    n_dev: float = 0.0  # thermal photons at the input of each entanglement JPA
    n_dev_meas: float = 0.0  # same, for each measurement JPA
    jpa_eps: float = 0.01  # coupling of the measurement-JPA noise stage
    entanglement_channel: ChannelConfig = field(default_factory=ChannelConfig)
    feedforward_channel: ChannelConfig = field(default_factory=ChannelConfig)
    alice_component_losses: tuple = ()  # on both Bell-measurement inputs
    feedforward_component_losses: tuple = ()  # at Alice, after the interferometer
    bob_component_losses: tuple = ()  # on TMS arm B before the coupler
    t_mc_map: TMcMap = field(default_factory=TMcMap)
    compression_n1db: Optional[float] = None
    carrier_frequency: float = CARRIER_FREQUENCY

    def __post_init__(self):
        if self.s_tms_db < 0:
            raise ValueError("s_tms_db must be non-negative")
        if self.coupler_db <= 0:
            raise ValueError("coupler_db must be positive")
        if self.n_dev < 0 or self.n_dev_meas < 0:
            raise ValueError("device noise must be non-negative")
        if not 0.0 < self.jpa_eps <= 1.0:
            raise ValueError("jpa_eps must lie in (0, 1]")
        if self.compression_n1db is not None and self.compression_n1db <= 0:
            raise ValueError("compression_n1db must be positive")
        for name in ("alice_component_losses", "feedforward_component_losses", "bob_component_losses"):
            stages = tuple(s if isinstance(s, LossStage) else LossStage(*s) for s in getattr(self, name))
            object.__setattr__(self, name, stages)

    @property
    def eta_power(self) -> float:
        return 10.0 ** (-self.coupler_db / 10.0)

    @property
    def node_temperatures(self) -> tuple:
        return self.t_mc_map(self.entanglement_channel.t_cen)

    def at_temperature(self, t_cen: float) -> "ProtocolConfig":
        """Same setup with both cryolink cables at center temperature ``t_cen``."""
        return replace(
            self,
            entanglement_channel=replace(self.entanglement_channel, t_cen=t_cen),
            feedforward_channel=replace(self.feedforward_channel, t_cen=t_cen),
        )

    def with_gain(self, gain_db: Optional[float]) -> "ProtocolConfig":
        return replace(self, gain_db=gain_db)

    def resolved(self) -> "ProtocolConfig":
        """Config with the amplifier gain fixed (calibrated if unset)."""
        return self if self.gain_db is not None else self.with_gain(calibrate_gain(self))

    def stage_occupancies(self, stages: Sequence[LossStage], node_temperature: float) -> list:
        return [
            (s.eps, s.n_env if s.n_env is not None else _occupancy(self.carrier_frequency, node_temperature))
            for s in stages
        ]

    # --- JSON round trip --------------------------------------------------

    def to_dict(self) -> dict:
        def chan(c):
            return {"length": c.length, "attenuation_rate": c.attenuation_rate, "t_cen": c.t_cen,
                    "carrier_frequency": c.carrier_frequency, "explicit_eps": c.explicit_eps}

        return {
            "s_tms_db": self.s_tms_db,
            "gain_db": self.gain_db,
            "coupler_db": self.coupler_db,
            "n_dev": self.n_dev,
            "n_dev_meas": self.n_dev_meas,
            "jpa_eps": self.jpa_eps,
            "entanglement_channel": chan(self.entanglement_channel),
            "feedforward_channel": chan(self.feedforward_channel),
            "alice_component_losses": [{"eps": s.eps, "n_env": s.n_env} for s in self.alice_component_losses],
            "feedforward_component_losses": [
                {"eps": s.eps, "n_env": s.n_env} for s in self.feedforward_component_losses
            ],
            "bob_component_losses": [{"eps": s.eps, "n_env": s.n_env} for s in self.bob_component_losses],
            "t_mc_map": [list(row) for row in self.t_mc_map.breakpoints],
            "compression_n1db": self.compression_n1db,
            "carrier_frequency": self.carrier_frequency,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProtocolConfig":
        d = dict(d)
        kwargs = {}
        for key in ("entanglement_channel", "feedforward_channel"):
            if key in d:
                kwargs[key] = ChannelConfig(**d.pop(key))
        for key in ("alice_component_losses", "feedforward_component_losses", "bob_component_losses"):
            if key in d:
                kwargs[key] = tuple(_stage_from_dict(s) for s in d.pop(key))
        if "t_mc_map" in d:
            kwargs["t_mc_map"] = TMcMap(tuple(tuple(row) for row in d.pop("t_mc_map")))
        return cls(**d, **kwargs)


def _stage_from_dict(s: dict) -> LossStage:
    s = dict(s)
    if "loss_db" in s:
        return LossStage.from_db(s.pop("loss_db"), s.pop("n_env", None))
    return LossStage(**s)


@dataclass(frozen=True)
class TeleportResult:
    alpha: complex
    output_state: GaussianState
    fidelity: float
    displacement_mismatch: float
    added_variance: float


# --- circuit ----------------------------------------------------------------

def build_tms(s_tms_db: float, jpa_noise: float = 0.0) -> GaussianState:
    """Balanced two-mode squeezed state from two orthogonally squeezed modes.

    Each entanglement JPA squeezes a thermal input with ``jpa_noise`` photons.
    Modes are ordered (A, B); x quadratures are correlated and p quadratures
    anticorrelated.
    """
    if s_tms_db < 0:
        raise ValueError("squeezing level must be non-negative")
    r = db_to_r(s_tms_db)
    state = tensor(thermal(jpa_noise), thermal(jpa_noise))
    state = squeeze(state, 0, r, np.pi / 2)
    state = squeeze(state, 1, r, 0.0)
    return beam_splitter(state, 0, 1, 0.5)


def _apply_stages(state: GaussianState, mode: int, stages) -> GaussianState:
    for eps, n_env in stages:
        state = loss_thermal_channel(state, mode, eps, n_env)
    return state


def _send(state: GaussianState, mode: int, channel: ChannelConfig) -> GaussianState:
    return loss_thermal_channel(state, mode, channel.eps, channel.n_env)


def distribute_tms(config: ProtocolConfig) -> GaussianState:
    """The entangled resource as seen at Alice's Bell measurement and at Bob's coupler."""
    t_alice, t_bob = config.node_temperatures
    state = build_tms(config.s_tms_db, config.n_dev)
    state = _apply_stages(state, 0, config.stage_occupancies(config.alice_component_losses, t_alice))
    state = _send(state, 1, config.entanglement_channel)
    return _apply_stages(state, 1, config.stage_occupancies(config.bob_component_losses, t_bob))


def _effective_gain_db(config: ProtocolConfig, alpha: complex) -> float:
    if config.compression_n1db is None:
        return config.gain_db
    g = 10.0 ** (config.gain_db / 10.0) / (1.0 + abs(alpha) ** 2 / config.compression_n1db)
    return 10.0 * math.log10(g)


def teleport_state(config: ProtocolConfig, alpha: complex) -> GaussianState:
    """Bob's output mode for coherent input ``alpha``; ``config.gain_db`` must be set."""
    if config.gain_db is None:
        raise ValueError("gain_db is unset; call config.resolved() first")
    t_alice, _ = config.node_temperatures
    gain_db = _effective_gain_db(config, alpha)

    state = tensor(coherent(alpha), distribute_tms(config))
    state = _apply_stages(state, 0, config.stage_occupancies(config.alice_component_losses, t_alice))

    # Bell measurement: hybrid ring, then the Josephson interferometer.
    state = beam_splitter(state, 0, 1, 0.5)
    if config.n_dev_meas > 0:
        n_j = config.n_dev_meas / config.jpa_eps
        state = loss_thermal_channel(state, 0, config.jpa_eps, n_j)
        state = loss_thermal_channel(state, 1, config.jpa_eps, n_j)
    state = phase_sensitive_amp(state, 0, gain_db, 0.0)
    state = phase_sensitive_amp(state, 1, gain_db, np.pi / 2)
    state = beam_splitter(state, 0, 1, 0.5)

    # Feedforward to Bob and displacement on the directional coupler.
    state = _apply_stages(state, 1, config.stage_occupancies(config.feedforward_component_losses, t_alice))
    state = _send(state, 1, config.feedforward_channel)
    state = beam_splitter(state, 1, 2, 1.0 - config.eta_power)
    return partial_trace(state, [2])


def run_teleportation(config: ProtocolConfig, alpha: complex) -> TeleportResult:
    config = config.resolved()
    out = teleport_state(config, alpha).require_physical()
    m_in = coherent(alpha).mean
    return TeleportResult(
        alpha=complex(alpha),
        output_state=out,
        fidelity=fidelity_to_coherent(alpha, out),
        displacement_mismatch=float(np.sum((out.mean - m_in) ** 2) / 4.0),
        added_variance=float((np.trace(out.cov) - 2.0) / 4.0),
    )


def transfer_kappa(config: ProtocolConfig, gain_db: Optional[float] = None) -> float:
    """End-to-end displacement power gain (|<a_out>| / |alpha|)^2 for a weak input."""
    cfg = replace(config, gain_db=config.gain_db if gain_db is None else gain_db, compression_n1db=None)
    out = teleport_state(cfg, 1.0)
    return float(np.sum(out.mean ** 2) / 4.0)


def calibrate_gain(config: ProtocolConfig, span_db: float = 20.0) -> float:
    """Measurement-JPA gain (dB) for which the displacement gain kappa equals 1."""
    lo, hi = config.coupler_db, config.coupler_db + span_db

    def f(g):
        return transfer_kappa(config, g) - 1.0

    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi > 0:
        raise ValueError(
            f"no unit-gain solution in [{lo:g}, {hi:g}] dB (kappa spans {f_lo + 1:.4g}..{f_hi + 1:.4g});"
            " losses are inconsistent with the coupler"
        )
    return float(bisect(f, lo, hi, xtol=1e-12, maxiter=200))


def effective_params(config: ProtocolConfig) -> ModelParams:
    """(kappa, zeta) of the circuit read off its output moments.

    zeta is the phase-averaged output variance minus the amplified input
    vacuum; the closed-form fidelity model is exact when the output noise is
    isotropic.
    """
    config = config.resolved()
    kappa = transfer_kappa(config)
    out = teleport_state(replace(config, compression_n1db=None), 0.0)
    return ModelParams(kappa, float(np.trace(out.cov) / 2.0 - kappa))


# --- sweeps -----------------------------------------------------------------

@dataclass(frozen=True)
class PhotonPoint:
    n_in: float
    fidelity: float
    stderr: float


@dataclass(frozen=True)
class TemperaturePoint:
    t_cen: float
    fidelity: float
    negativity: float
    purity: float
    n_env: float
    n_th: float


def _phase_averaged(config: ProtocolConfig, n_in: float, n_phases: int) -> PhotonPoint:
    if n_in < 0:
        raise ValueError("photon number must be non-negative")
    thetas = 2 * np.pi * np.arange(n_phases) / n_phases
    amp = math.sqrt(n_in)
    fids = np.array([run_teleportation(config, amp * np.exp(1j * t)).fidelity for t in thetas])
    err = float(np.std(fids, ddof=1) / math.sqrt(n_phases)) if n_phases > 1 else 0.0
    return PhotonPoint(float(n_in), float(fids.mean()), err)


def _temperature_point(config: ProtocolConfig, t_cen: float, n_in: float, n_phases: int) -> TemperaturePoint:
    if t_cen <= 0:
        raise ValueError("center temperature must be positive")
    cfg = config.at_temperature(t_cen)
    tms = distribute_tms(cfg)
    chan = cfg.entanglement_channel
    return TemperaturePoint(
        t_cen=float(t_cen),
        fidelity=_phase_averaged(cfg, n_in, n_phases).fidelity,
        negativity=negativity(tms),
        purity=purity(tms),
        n_env=chan.n_env,
        n_th=chan.n_th,
    )


def _pmap(fn, args_list, jobs: int):
    if jobs <= 1 or len(args_list) <= 1:
        return [fn(*args) for args in args_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*args_list)))


def sweep_photon_number(config: ProtocolConfig, n_in_list, n_phases: int = 16, jobs: int = 1) -> list:
    """Phase-averaged fidelity for each input photon number."""
    if n_phases < 1:
        raise ValueError("n_phases must be >= 1")
    config = config.resolved()
    return _pmap(_phase_averaged, [(config, float(n), n_phases) for n in n_in_list], jobs)


def sweep_temperature(config: ProtocolConfig, t_cen_list, n_in: float = 1.3,
                      n_phases: int = 16, jobs: int = 1) -> list:
    """Fidelity and resource diagnostics versus cryolink center temperature.

    The amplifier gain is fixed once from the base configuration, as in an
    experiment calibrated at base temperature.
    """
    config = config.resolved()
    return _pmap(_temperature_point, [(config, float(t), n_in, n_phases) for t in t_cen_list], jobs)


__all__ = [
    "LossStage", "ChannelConfig", "TMcMap", "ProtocolConfig", "TeleportResult",
    "PhotonPoint", "TemperaturePoint", "build_tms", "distribute_tms", "teleport_state",
    "run_teleportation", "transfer_kappa", "calibrate_gain", "effective_params",
    "sweep_photon_number", "sweep_temperature", "photon_number", "CARRIER_FREQUENCY",
]
