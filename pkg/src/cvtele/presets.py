"""Ready-made protocol configurations.

``calibrated_config`` is a fit, not a measured device description: the loss split
and device noise were solved so that the circuit's effective parameters are
kappa = 0.778 and zeta = 1.015 at S_TMS = 5 dB and G = 21 dB. The
mixing-chamber temperature map is illustrative.
"""

from .protocol import ChannelConfig, LossStage, ProtocolConfig, TMcMap

REFERENCE_KAPPA = 0.778
REFERENCE_ZETA = 1.015

_CALIBRATED_MC_MAP = TMcMap((
    (0.0, 0.03, 0.03),
    (0.17, 0.03, 0.03),
    (1.0, 0.06, 0.04),
    (2.0, 0.2, 0.08),
    (3.0, 0.45, 0.14),
    (4.0, 0.7, 0.2),
))


def calibrated_config(s_tms_db: float = 5.0, t_cen: float = 0.17) -> ProtocolConfig:
    return ProtocolConfig(
        s_tms_db=s_tms_db,
        gain_db=21.0,
        coupler_db=15.0,
        n_dev=0.03,
        n_dev_meas=0.10422846670576452,
        entanglement_channel=ChannelConfig(length=6.0, attenuation_rate=1.0, t_cen=t_cen),
        feedforward_channel=ChannelConfig(length=6.0, attenuation_rate=1.0, t_cen=t_cen),
        alice_component_losses=(LossStage(0.020211801228800425),),
        feedforward_component_losses=(LossStage.from_db(1.0),),
        bob_component_losses=(LossStage.from_db(0.3),),
        t_mc_map=_CALIBRATED_MC_MAP,
    )


def ideal_config(s_tms_db: float, coupler_db: float = 60.0) -> ProtocolConfig:
    """Lossless, noiseless link with calibrated gain.

    A weak coupler (60 dB by default) makes the Bell measurement effectively
    projective, so no input leaks into the feedforward.
    """
    lossless = ChannelConfig(length=0.0)
    return ProtocolConfig(
        s_tms_db=s_tms_db,
        coupler_db=coupler_db,
        entanglement_channel=lossless,
        feedforward_channel=lossless,
    ).resolved()


def lossless_config(s_tms_db: float = 5.0, coupler_db: float = 15.0) -> ProtocolConfig:
    """Lossless link with a finite coupler; gain left for calibration."""
    lossless = ChannelConfig(length=0.0)
    return ProtocolConfig(s_tms_db=s_tms_db, coupler_db=coupler_db,
                          entanglement_channel=lossless, feedforward_channel=lossless)
