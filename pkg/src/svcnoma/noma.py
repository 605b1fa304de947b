"""Uplink NOMA link model under successive interference cancellation.

Devices are decoded in descending order of channel gain: device ``i`` sees
every later-decoded device ``j > i`` as interference. Index 0 is therefore
the strongest device and index ``M-1`` the only interference-free one.

Units: powers and noise in mW, rates in bit/s, energy efficiency in
bit/s per mW.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import math

import numpy as np

from .qos import SvcLayerTable

__all__ = [
    "Device",
    "UplinkScenario",
    "sinr",
    "rate",
    "energy_efficiency",
    "powers_from_sinr",
    "min_sinr_from_rate",
    "is_in_g",
    "is_in_h",
    "g_membership",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class Device:
    """One uplink visual sensor."""

    gain_sq: float
    p_max_mw: float
    ee_min: float
    table: SvcLayerTable
    label: str = ""

    def __post_init__(self):
        if not self.gain_sq > 0:
            raise ValueError(f"gain_sq must be positive, got {self.gain_sq}")
        if not self.p_max_mw > 0:
            raise ValueError(f"p_max_mw must be positive, got {self.p_max_mw}")
        if not self.ee_min >= 0:
            raise ValueError(f"ee_min must be nonnegative, got {self.ee_min}")


def min_sinr_from_rate(rate_min: float, bandwidth_hz: float):
    """SINR needed to support ``rate_min`` over ``bandwidth_hz``: ``2**(R/B) - 1``."""
    r = np.asarray(rate_min, dtype=float)
    if np.any(r < 0):
        raise ValueError("rate must be nonnegative")
    out = np.expm1(r / bandwidth_hz * LN2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class UplinkScenario:
    """A decode-ordered device set with the shared bandwidth and noise power.

    Use :meth:`build` to construct from devices in arbitrary order; it sorts
    by gain and separates exact ties. Direct construction requires the
    devices to be strictly descending in ``gain_sq`` already.
    """

    devices: tuple[Device, ...]
    bandwidth_hz: float
    noise_mw: float
    # position of each decode-ordered device in the caller's original list
    source_index: tuple[int, ...] = field(default=())

    def __post_init__(self):
        devices = tuple(self.devices)
        object.__setattr__(self, "devices", devices)
        if not devices:
            raise ValueError("scenario needs at least one device")
        if not self.bandwidth_hz > 0:
            raise ValueError(f"bandwidth_hz must be positive, got {self.bandwidth_hz}")
        if not self.noise_mw > 0:
            raise ValueError(f"noise_mw must be positive, got {self.noise_mw}")
        for i in range(1, len(devices)):
            if not devices[i].gain_sq < devices[i - 1].gain_sq:
                raise ValueError(
                    f"device {i}: gains must be strictly descending in decode order"
                )
        if not self.source_index:
            object.__setattr__(self, "source_index", tuple(range(len(devices))))

        # cached per-device constants for the hot paths
        B = self.bandwidth_hz
        object.__setattr__(self, "gains", np.array([d.gain_sq for d in devices]))
        object.__setattr__(self, "p_max", np.array([d.p_max_mw for d in devices]))
        object.__setattr__(self, "ee_min", np.array([d.ee_min for d in devices]))
        thresholds = tuple(
            np.atleast_1d(min_sinr_from_rate(np.array(d.table.rates_bps), B)) for d in devices
        )
        object.__setattr__(self, "sinr_thresholds", thresholds)
        object.__setattr__(
            self,
            "psnr_levels",
            tuple(np.concatenate(([0.0], d.table.psnrs_db)) for d in devices),
        )
        object.__setattr__(self, "gamma_min", np.array([t[0] for t in thresholds]))
        object.__setattr__(
            self,
            "_scalars",
            (
                [d.gain_sq for d in devices],
                [d.p_max_mw for d in devices],
                [d.ee_min for d in devices],
            ),
        )

    @classmethod
    def build(cls, devices, bandwidth_hz: float, noise_mw: float) -> "UplinkScenario":
        devices = list(devices)
        if not devices:
            raise ValueError("scenario needs at least one device")
        order = sorted(range(len(devices)), key=lambda k: -devices[k].gain_sq)
        ordered = [devices[k] for k in order]
        for i in range(1, len(ordered)):
            prev = ordered[i - 1].gain_sq
            if ordered[i].gain_sq >= prev:
                # exact tie: nudge the later device one ulp down to keep a strict SIC order
                ordered[i] = replace(ordered[i], gain_sq=float(np.nextafter(prev, 0.0)))
        return cls(tuple(ordered), float(bandwidth_hz), float(noise_mw), tuple(order))

    @property
    def num_devices(self) -> int:
        return len(self.devices)

    @property
    def tables(self) -> tuple[SvcLayerTable, ...]:
        return tuple(d.table for d in self.devices)

    def with_p_max(self, p_max_mw) -> "UplinkScenario":
        """Same channels and tables with new power caps (scalar or per device)."""
        caps = np.broadcast_to(np.asarray(p_max_mw, dtype=float), (self.num_devices,))
        devices = tuple(replace(d, p_max_mw=float(c)) for d, c in zip(self.devices, caps))
        return UplinkScenario(devices, self.bandwidth_hz, self.noise_mw, self.source_index)

    def with_ee_min(self, ee_min) -> "UplinkScenario":
        floors = np.broadcast_to(np.asarray(ee_min, dtype=float), (self.num_devices,))
        devices = tuple(replace(d, ee_min=float(e)) for d, e in zip(self.devices, floors))
        return UplinkScenario(devices, self.bandwidth_hz, self.noise_mw, self.source_index)

    def sinr_caps(self) -> np.ndarray:
        """Interference-free SINR of every device at full power.

        Rounded up to the largest float whose power ``y sigma^2 / h^2`` still
        meets the cap, so the box contains every SINR vector that
        :func:`is_in_g` accepts.
        """
        caps = self.gains * self.p_max / self.noise_mw
        while True:
            over = caps * self.noise_mw / self.gains > self.p_max
            if not np.any(over):
                break
            caps = np.where(over, np.nextafter(caps, 0.0), caps)
        while True:
            up = np.nextafter(caps, np.inf)
            grow = up * self.noise_mw / self.gains <= self.p_max
            if not np.any(grow):
                return caps
            caps = np.where(grow, up, caps)


def _as_vector(scenario: UplinkScenario, x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (scenario.num_devices,):
        raise ValueError(
            f"{name} has trailing length {x.shape[-1:]}, expected {scenario.num_devices}"
        )
    return x


def sinr(scenario: UplinkScenario, p) -> np.ndarray:
    """SINR of every device for power vector(s) ``p`` (last axis = devices)."""
    p = _as_vector(scenario, p, "power vector")
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    received = scenario.gains * p
    # interference on i = sum of received power of devices decoded after i
    tail = np.cumsum(received[..., ::-1], axis=-1)[..., ::-1]
    interference = tail - received
    return received / (interference + scenario.noise_mw)


def rate(scenario: UplinkScenario, gamma) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("SINR must be nonnegative")
    return scenario.bandwidth_hz * np.log1p(gamma) / LN2


def energy_efficiency(rate_bps, power_mw):
    """``R / p`` with ``inf`` where ``p == 0``; zero-power devices meet any floor."""
    r = np.asarray(rate_bps, dtype=float)
    p = np.asarray(power_mw, dtype=float)
    if np.any(r < 0) or np.any(p < 0):
        raise ValueError("rate and power must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(p > 0, r / np.where(p > 0, p, 1.0), np.inf)
    return float(out) if out.ndim == 0 else out


def powers_from_sinr(scenario: UplinkScenario, gamma) -> np.ndarray:
    """Unique power vector(s) realizing SINR ``gamma`` under the SIC order.

    Back-substitution from the last-decoded device, which sees only noise,
    up to the first: ``p_i = gamma_i (sum_{j>i} h_j^2 p_j + sigma^2) / h_i^2``.
    """
    gamma = _as_vector(scenario, gamma, "SINR vector")
    if np.any(gamma < 0):
        raise ValueError("SINR must be nonnegative")
    p = np.empty_like(gamma)
    level = np.full(gamma.shape[:-1], scenario.noise_mw)
    for i in range(scenario.num_devices - 1, -1, -1):
        p[..., i] = gamma[..., i] * level / scenario.gains[i]
        level = level + scenario.gains[i] * p[..., i]
    return p


def is_in_g(scenario: UplinkScenario, y) -> bool:
    """Whether SINR vector ``y`` is achievable within power caps and EE floors.

    Achieving ``y`` requires exactly ``powers_from_sinr(y)``, so the test is
    exact: every ``p_i <= p_max_i`` and every ``R_i >= ee_min_i * p_i``.
    """
    gains, caps, floors = scenario._scalars
    B = scenario.bandwidth_hz
    level = scenario.noise_mw
    for i in range(len(gains) - 1, -1, -1):
        yi = float(y[i])
        if yi < 0:
            raise ValueError("SINR must be nonnegative")
        p = yi * level / gains[i]
        if p > caps[i]:
            return False
        if B * math.log1p(yi) / LN2 < floors[i] * p:
            return False
        level += gains[i] * p
    return True


def g_membership(scenario: UplinkScenario, Y) -> np.ndarray:
    """Vectorized :func:`is_in_g` over the rows of ``Y``."""
    Y = np.atleast_2d(_as_vector(scenario, Y, "SINR array"))
    P = powers_from_sinr(scenario, Y)
    ok = np.all(P <= scenario.p_max, axis=-1)
    R = rate(scenario, Y)
    ok &= np.all(R >= scenario.ee_min * P, axis=-1)
    return ok


def is_in_h(scenario: UplinkScenario, y) -> bool:
    """Whether every device reaches at least its base-layer SINR."""
    y = _as_vector(scenario, y, "SINR vector")
    return bool(np.all(y >= scenario.gamma_min))
