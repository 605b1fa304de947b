"""Large-scale path loss, Rayleigh fading and unit conversions.

All powers are linear mW internally; dBm appears only at configuration
boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelParams",
    "ChannelRealization",
    "path_loss_db",
    "noise_power_mw",
    "sample_channels",
    "dbm_to_mw",
    "mw_to_dbm",
]


@dataclass(frozen=True)
class ChannelParams:
    """Bandwidth, thermal noise density and the fading switch."""

    bandwidth_hz: float = 180e3
    noise_psd_dbm_per_hz: float = -174.0
    fading_enabled: bool = True

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise ValueError(f"bandwidth_hz must be positive, got {self.bandwidth_hz}")


@dataclass(frozen=True)
class ChannelRealization:
    distance_km: float
    gain_sq_linear: float

    def __post_init__(self):
        if not self.distance_km > 0:
            raise ValueError(f"distance_km must be positive, got {self.distance_km}")
        if not self.gain_sq_linear >= 0:
            raise ValueError(f"gain_sq_linear must be nonnegative, got {self.gain_sq_linear}")


def path_loss_db(distance_km):
    """Log-distance path loss ``128.1 + 37.6 log10(d)`` with ``d`` in km.

    Accepts a scalar or an array; raises ``ValueError`` on any non-positive
    distance.
    """
    d = np.asarray(distance_km, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("distance must be positive")
    loss = 128.1 + 37.6 * np.log10(d)
    return float(loss) if loss.ndim == 0 else loss


def noise_power_mw(params: ChannelParams) -> float:
    """Thermal noise power ``N0 * B`` in mW."""
    return 10.0 ** (params.noise_psd_dbm_per_hz / 10.0) * params.bandwidth_hz


def dbm_to_mw(x):
    x = np.asarray(x, dtype=float)
    out = 10.0 ** (x / 10.0)
    return float(out) if out.ndim == 0 else out


def mw_to_dbm(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("power in mW must be positive to convert to dBm")
    out = 10.0 * np.log10(x)
    return float(out) if out.ndim == 0 else out


def sample_channels(seed: int, distances_km, params: ChannelParams) -> list[ChannelRealization]:
    """Draw one channel realization per distance.

    The squared Rayleigh coefficient ``|beta|^2`` is drawn as ``Exp(1)``,
    which is the law of ``|CN(0, 1)|^2``. With fading disabled it is fixed
    to one. The output is a pure function of ``(seed, distances_km, params)``.
    """
    d = np.asarray(list(distances_km), dtype=float)
    if d.size == 0:
        return []
    large_scale = 10.0 ** (-np.asarray(path_loss_db(d)).reshape(d.shape) / 10.0)
    if params.fading_enabled:
        rng = np.random.default_rng(seed)
        fading = rng.exponential(1.0, size=d.shape)
    else:
        fading = np.ones_like(d)
    gains = large_scale * fading
    return [ChannelRealization(float(di), float(gi)) for di, gi in zip(d, gains)]

