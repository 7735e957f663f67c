"""Gaussian simulation of continuous-variable teleportation over a cryogenic microwave link."""

from .gaussian import (
    GaussianState,
    SymplecticOp,
    UnphysicalStateError,
    beam_splitter,
    coherent,
    displace,
    loss_thermal_channel,
    partial_trace,
    phase_rotation,
    phase_sensitive_amp,
    photon_number,
    squeeze,
    tensor,
    thermal,
    vacuum,
)
from .effective_model import FitError, ModelParams, fit_model, model_fidelity
from .measures import fidelity_to_coherent, negativity, purity

__version__ = "0.1.0"
