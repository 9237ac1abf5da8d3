"""Security analysis of the B92 QKD protocol over lossy and noisy channels."""

from .b92model import (
    AttackChannel,
    Observables,
    ProtocolParams,
    depolarizing_loss_channel,
    observables,
    usd_attack_channel,
)
from .estimator import BoundInput, PhaseBound, closed_form_zero_error, phase_bound
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "AttackChannel",
    "BACKEND",
    "BoundInput",
    "Observables",
    "PhaseBound",
    "ProtocolParams",
    "closed_form_zero_error",
    "depolarizing_loss_channel",
    "observables",
    "phase_bound",
    "usd_attack_channel",
]
