"""
Core domain models: link simulator, estimators and dataset processing
"""

from .constellation import Constellation, ConstellationKind
from .channel import ChannelParams, ChannelMatrix, generate_channel, tap_autocorrelation
from .ofdm import NOISELESS_SNR_DB, PilotPattern, OfdmFrame, modulate_frame, transmit
from .estimators import (
    Interpolation,
    PilotEstimate,
    BetaConstant,
    ChannelAutocorrelation,
    beta_constant,
    estimate_ls_full,
    estimate_lmmse_full,
    estimate_mmse_full,
)
from .dataset import PlanePair, NormalizationStats, DatasetFile

__all__ = [
    "Constellation",
    "ConstellationKind",
    "ChannelParams",
    "ChannelMatrix",
    "generate_channel",
    "tap_autocorrelation",
    "NOISELESS_SNR_DB",
    "PilotPattern",
    "OfdmFrame",
    "modulate_frame",
    "transmit",
    "Interpolation",
    "PilotEstimate",
    "BetaConstant",
    "ChannelAutocorrelation",
    "beta_constant",
    "estimate_ls_full",
    "estimate_lmmse_full",
    "estimate_mmse_full",
    "PlanePair",
    "NormalizationStats",
    "DatasetFile",
]
