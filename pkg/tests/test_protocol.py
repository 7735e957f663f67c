from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvtele.effective_model import ModelParams, effective_noise, fit_model, model_fidelity
from cvtele.gaussian import coherent, db_to_r
from cvtele.measures import negativity
from cvtele.presets import REFERENCE_KAPPA, REFERENCE_ZETA, ideal_config, lossless_config, calibrated_config
from cvtele.protocol import (
    ChannelConfig,
    LossStage,
    ProtocolConfig,
    TMcMap,
    build_tms,
    calibrate_gain,
    distribute_tms,
    effective_params,
    run_teleportation,
    sweep_photon_number,
    sweep_temperature,
    teleport_state,
    transfer_kappa,
)


def heisenberg_output(alpha, s_db, gain_db, coupler_db):
    """Lossless circuit: out = sqrt(eta) (C a_in - S a_A^dag) + sqrt(1 - eta) b."""
    r = db_to_r(s_db)
    g = np.sqrt(10 ** (gain_db / 10))
    C = (g + 1 / g) / 2
    S = np.sqrt(C ** 2 - 1)
    eta = 10 ** (-coupler_db / 10)
    mean = np.sqrt(eta) * C * coherent(alpha).mean
    var = eta * C ** 2 + (eta * S ** 2 + 1 - eta) * np.cosh(2 * r) \
        - 2 * np.sqrt(eta * (1 - eta)) * S * np.sinh(2 * r)
    return mean, var * np.eye(2)


class TestCircuit:
    @given(st.floats(0, 12), st.floats(0, 30), st.floats(3, 30), st.complex_numbers(max_magnitude=2))
    @settings(max_examples=60, deadline=None)
    def test_lossless_matches_heisenberg_oracle(self, s_db, gain_db, coupler_db, alpha):
        cfg = lossless_config(s_db, coupler_db).with_gain(gain_db)
        out = teleport_state(cfg, alpha)
        mean, cov = heisenberg_output(alpha, s_db, gain_db, coupler_db)
        assert np.allclose(out.mean, mean, atol=1e-9)
        assert np.allclose(out.cov, cov, rtol=1e-9, atol=1e-9)

    @pytest.mark.parametrize("gain_db", [0.0, 10.0, 21.0])
    def test_transfer_kappa(self, gain_db):
        g = np.sqrt(10 ** (gain_db / 10))
        eta = 10 ** -1.5
        assert np.isclose(transfer_kappa(lossless_config().with_gain(gain_db)), eta * ((g + 1 / g) / 2) ** 2)

    def test_calibrated_gain_exact(self):
        eta = 10 ** -1.5
        g = 1 / np.sqrt(eta) + np.sqrt(1 / eta - 1)
        assert np.isclose(calibrate_gain(lossless_config()), 20 * np.log10(g), atol=1e-9)

    @pytest.mark.parametrize("coupler_db,ff_db", [(15.0, 1.0), (20.0, 0.0), (20.0, 2.5)])
    def test_calibrated_gain_with_feedforward_loss(self, coupler_db, ff_db):
        eta = 10 ** (-(coupler_db + ff_db) / 10)
        g = 1 / np.sqrt(eta) + np.sqrt(1 / eta - 1)
        cfg = replace(lossless_config(coupler_db=coupler_db), feedforward_component_losses=(LossStage.from_db(ff_db),))
        assert np.isclose(calibrate_gain(cfg), 20 * np.log10(g), atol=1e-9)

    def test_calibrated_gain_high_gain_asymptote(self):
        # G -> 4/eta once the coupler is weak
        gain = calibrate_gain(lossless_config(coupler_db=40.0))
        assert np.isclose(gain, 40 + 10 * np.log10(4), atol=1e-3)

    @pytest.mark.parametrize("s_db", [0.0, 3.0, 5.0, 10.0])
    def test_calibrated_noise(self, s_db):
        cfg = lossless_config(s_db).resolved()
        p = effective_params(cfg)
        eta = cfg.eta_power
        assert np.isclose(p.kappa, 1.0, atol=1e-10)
        assert np.isclose(p.zeta, 2 * (1 - eta) * np.exp(-2 * db_to_r(s_db)), atol=1e-9)

    def test_leakage_limit(self):
        eta = 10 ** -1.5
        f = run_teleportation(lossless_config(0.0).resolved(), 1.0).fidelity
        assert np.isclose(f, 1 / (2 - eta))

    @pytest.mark.parametrize("alpha", [0.0, 1.0, 3j, -0.5 + 2j])
    def test_classical_limit(self, alpha):
        assert abs(run_teleportation(ideal_config(0.0), alpha).fidelity - 0.5) <= 1e-6

    def test_ideal_high_squeezing(self):
        assert run_teleportation(ideal_config(60.0), 1 + 0.5j).fidelity >= 0.999

    def test_ideal_noise_matches_model(self):
        p = effective_params(ideal_config(5.0))
        assert np.isclose(p.zeta, effective_noise(db_to_r(5.0), 1.0), rtol=1e-5)

    def test_output_is_physical(self):
        res = run_teleportation(calibrated_config(), 0.8 - 0.3j)
        assert res.output_state.is_physical()
        assert res.output_state.n_modes == 1

    def test_requires_gain(self):
        with pytest.raises(ValueError):
            teleport_state(lossless_config(), 1.0)

    def test_infeasible_calibration(self):
        lossy = ProtocolConfig(coupler_db=15.0, bob_component_losses=(LossStage(0.0),),
                               feedforward_component_losses=(LossStage(0.999),))
        with pytest.raises(ValueError):
            calibrate_gain(lossy)

    def test_compression_lowers_gain(self):
        cfg = ideal_config(5.0)
        big = run_teleportation(replace(cfg, compression_n1db=1.0), 3.0)
        small = run_teleportation(cfg, 3.0)
        assert big.displacement_mismatch > small.displacement_mismatch


class TestCalibratedConfig:
    def test_effective_parameters(self):
        p = effective_params(calibrated_config())
        assert np.isclose(p.kappa, REFERENCE_KAPPA, atol=1e-6)
        assert np.isclose(p.zeta, REFERENCE_ZETA, atol=1e-6)

    def test_sweep_follows_model(self):
        n_in = np.logspace(-2, 2, 20)
        pts = sweep_photon_number(calibrated_config(), n_in, n_phases=8)
        F = np.array([p.fidelity for p in pts])
        assert np.allclose(F, model_fidelity(n_in, ModelParams(REFERENCE_KAPPA, REFERENCE_ZETA)), atol=1e-9)
        fit = fit_model(list(zip(n_in, F)))
        assert fit.rms_residual < 1e-3

    def test_phase_independence(self):
        fids = [run_teleportation(calibrated_config(), 1.2 * np.exp(1j * t)).fidelity for t in np.linspace(0, 6, 7)]
        assert np.ptp(fids) < 1e-9

    def test_resource_plausibility(self):
        tms = distribute_tms(calibrated_config())
        assert 0.8 < negativity(tms) < 1.0

    def test_entanglement_survives_hot_link(self):
        pts = sweep_temperature(calibrated_config(), [0.17, 4.0], n_phases=4)
        assert pts[0].negativity > pts[1].negativity > 0
        assert pts[0].fidelity > pts[1].fidelity
        assert np.isclose(pts[1].n_th, 0.0208, atol=1e-4)

    def test_temperature_sweep_validation(self):
        with pytest.raises(ValueError):
            sweep_temperature(calibrated_config(), [0.0])


class TestSweeps:
    def test_jobs_invariance(self):
        cfg = calibrated_config()
        n_in = [0.01, 1.0, 10.0]
        assert sweep_photon_number(cfg, n_in, 4, jobs=1) == sweep_photon_number(cfg, n_in, 4, jobs=2)
        t = [0.5, 2.0, 4.0]
        assert sweep_temperature(cfg, t, 1.3, 4, jobs=1) == sweep_temperature(cfg, t, 1.3, 4, jobs=3)

    def test_empty_sweep(self):
        assert sweep_photon_number(calibrated_config(), []) == []

    def test_negative_photon_number(self):
        with pytest.raises(ValueError):
            sweep_photon_number(calibrated_config(), [-1.0])

    def test_bad_phase_count(self):
        with pytest.raises(ValueError):
            sweep_photon_number(calibrated_config(), [1.0], n_phases=0)


class TestConfig:
    def test_roundtrip(self):
        cfg = calibrated_config()
        assert ProtocolConfig.from_dict(cfg.to_dict()) == cfg

    def test_loss_db_stage(self):
        cfg = ProtocolConfig.from_dict({"bob_component_losses": [{"loss_db": 3.0}]})
        assert np.isclose(cfg.bob_component_losses[0].eps, 1 - 10 ** -0.3)

    @pytest.mark.parametrize("eps", [-0.1, 1.5])
    def test_bad_stage(self, eps):
        with pytest.raises(ValueError):
            LossStage(eps)

    @pytest.mark.parametrize("kwargs", [{"s_tms_db": -1}, {"coupler_db": 0}, {"n_dev": -0.1}, {"jpa_eps": 0}])
    def test_bad_protocol(self, kwargs):
        with pytest.raises(ValueError):
            ProtocolConfig(**kwargs)

    def test_channel(self):
        ch = ChannelConfig(length=6.0, attenuation_rate=1.0, t_cen=4.0)
        assert np.isclose(ch.eps, 1.3806e-3, rtol=1e-4)
        assert np.isclose(ch.n_th, 0.0208, atol=1e-4)
        assert ChannelConfig(t_cen=0.0).n_env == 0.0
        assert ChannelConfig(explicit_eps=0.2).eps == 0.2

    def test_mc_map(self):
        m = TMcMap(((0.0, 0.01, 0.02), (2.0, 0.21, 0.12)))
        assert np.allclose(m(1.0), (0.11, 0.07))
        assert np.allclose(m(5.0), (0.21, 0.12))

    def test_mc_map_unsorted(self):
        with pytest.raises(ValueError):
            TMcMap(((1.0, 0, 0), (0.5, 0, 0)))

    def test_tms_resource(self):
        tms = build_tms(5.0)
        r = db_to_r(5.0)
        assert np.isclose(tms.cov[0, 2], np.sinh(2 * r))
        assert np.isclose(tms.cov[1, 3], -np.sinh(2 * r))
        with pytest.raises(ValueError):
            build_tms(-1.0)
