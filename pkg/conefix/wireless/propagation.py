"""
Hata urban path loss model
"""

import logging

import numpy as np

from ..cone import ArrayLike
from ..errors import DomainError


logger = logging.getLogger(__name__)

# Constants
MIN_DISTANCE_M = 35.0  # Near-field clamp
FREQ_RANGE_MHZ = (150.0, 1500.0)
H_BS_RANGE_M = (30.0, 200.0)
H_USER_RANGE_M = (1.0, 10.0)


def _warn_outside(name: str, value: float, bounds) -> None:
    if not bounds[0] <= value <= bounds[1]:
        logger.warning(f"Hata {name}={value:g} is outside the validity range "
                       f"[{bounds[0]:g}, {bounds[1]:g}]")


def mobile_antenna_correction(freq_mhz: float, h_user: float) -> float:
    """Small/medium city correction a(h_user) in dB."""
    log_f = np.log10(freq_mhz)
    return (1.1 * log_f - 0.7) * h_user - (1.56 * log_f - 0.8)


def hata_urban_path_loss_db(distance_m: ArrayLike, freq_mhz: float = 900.0,
                            h_bs: float = 30.0, h_user: float = 1.5) -> np.ndarray:
    """
    Urban Hata path loss in dB.

    Distances below 35 m are clamped. Parameters outside the model's validity
    ranges are accepted with a warning.

    Args:
        distance_m: Distance(s) in meters
        freq_mhz: Carrier frequency in MHz
        h_bs: Base station antenna height in meters
        h_user: User antenna height in meters

    Raises:
        DomainError: On nonpositive inputs
    """
    d = np.asarray(distance_m, dtype=float)
    if np.any(~(d > 0)):
        raise DomainError("Distances must be positive")
    for name, value in (("freq_mhz", freq_mhz), ("h_bs", h_bs), ("h_user", h_user)):
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value}")
    _warn_outside("freq_mhz", freq_mhz, FREQ_RANGE_MHZ)
    _warn_outside("h_bs", h_bs, H_BS_RANGE_M)
    _warn_outside("h_user", h_user, H_USER_RANGE_M)

    d_km = np.maximum(d, MIN_DISTANCE_M) / 1000.0
    log_hb = np.log10(h_bs)
    return (69.55 + 26.16 * np.log10(freq_mhz) - 13.82 * log_hb
            - mobile_antenna_correction(freq_mhz, h_user)
            + (44.9 - 6.55 * log_hb) * np.log10(d_km))


def hata_urban_gain(distance_m: ArrayLike, freq_mhz: float = 900.0,
                    h_bs: float = 30.0, h_user: float = 1.5) -> np.ndarray:
    """Linear power gain 10^(-PL_dB/10) of the urban Hata model."""
    return 10.0 ** (-hata_urban_path_loss_db(distance_m, freq_mhz, h_bs, h_user) / 10.0)
