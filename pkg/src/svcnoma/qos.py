"""Discrete video quality model built from SVC layer tables.

A device that delivers rate ``R`` can send every layer whose cumulative
rate requirement does not exceed ``R``; its quality is the PSNR of the
highest such layer, or zero when not even the base layer fits.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

__all__ = [
    "SvcLayerTable",
    "Frame",
    "mse_between_frames",
    "psnr_from_mse",
    "layer_increments",
    "qos_of_rate",
    "synth_table",
    "average_qos",
]

PEAK = 255.0


@dataclass(frozen=True)
class SvcLayerTable:
    """Cumulative ``(rate_bps, psnr_db)`` pairs for layers ``1..L``.

    Both columns must be strictly increasing, the base-layer rate must be
    nonnegative and the base-layer PSNR positive (a zero-layer video is
    defined to have zero quality, so the first increment is the base PSNR).
    """

    rates_bps: tuple[float, ...]
    psnrs_db: tuple[float, ...]

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates_bps)
        psnrs = tuple(float(q) for q in self.psnrs_db)
        object.__setattr__(self, "rates_bps", rates)
        object.__setattr__(self, "psnrs_db", psnrs)
        if len(rates) == 0:
            raise ValueError("layer table needs at least one layer")
        if len(rates) != len(psnrs):
            raise ValueError("rates and PSNRs differ in length")
        for l, (r, q) in enumerate(zip(rates, psnrs), start=1):
            if not (math.isfinite(r) and math.isfinite(q)):
                raise ValueError(f"layer {l}: rate and PSNR must be finite")
        if rates[0] < 0:
            raise ValueError(f"layer 1: base-layer rate must be >= 0, got {rates[0]}")
        if psnrs[0] <= 0:
            raise ValueError(f"layer 1: base-layer PSNR must be > 0, got {psnrs[0]}")
        for l in range(1, len(rates)):
            if not rates[l] > rates[l - 1]:
                raise ValueError(
                    f"layer {l + 1}: rate {rates[l]} not greater than layer {l} rate {rates[l - 1]}"
                )
            if not psnrs[l] > psnrs[l - 1]:
                raise ValueError(
                    f"layer {l + 1}: PSNR {psnrs[l]} not greater than layer {l} PSNR {psnrs[l - 1]}"
                )

    @classmethod
    def from_pairs(cls, pairs) -> "SvcLayerTable":
        pairs = list(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @property
    def num_layers(self) -> int:
        return len(self.rates_bps)

    @property
    def base_rate(self) -> float:
        return self.rates_bps[0]

    @property
    def top_psnr(self) -> float:
        return self.psnrs_db[-1]

    def layers_reached(self, rate_bps: float) -> int:
        """Number of layers decodable at ``rate_bps`` (inclusive thresholds)."""
        return int(np.searchsorted(self.rates_bps, rate_bps, side="right"))

    def to_dict(self) -> dict:
        return {
            "layers": [
                {"rate_bps": r, "psnr_db": q} for r, q in zip(self.rates_bps, self.psnrs_db)
            ]
        }


@dataclass(frozen=True)
class Frame:
    """A luminance frame, ``height x width`` intensities in ``[0, 255]``."""

    luminance: np.ndarray

    def __post_init__(self):
        lum = np.asarray(self.luminance, dtype=float)
        if lum.ndim != 2 or lum.shape[0] < 1 or lum.shape[1] < 1:
            raise ValueError(f"frame must be a non-empty 2-D grid, got shape {lum.shape}")
        if np.any(lum < 0) or np.any(lum > PEAK):
            raise ValueError("luminance must lie in [0, 255]")
        object.__setattr__(self, "luminance", lum)

    @property
    def width(self) -> int:
        return self.luminance.shape[1]

    @property
    def height(self) -> int:
        return self.luminance.shape[0]


def mse_between_frames(original: Frame, reconstructed: Frame) -> float:
    if original.luminance.shape != reconstructed.luminance.shape:
        raise ValueError(
            f"frame dimensions differ: {original.luminance.shape} vs {reconstructed.luminance.shape}"
        )
    diff = original.luminance - reconstructed.luminance
    return float(np.mean(diff * diff))


def psnr_from_mse(mse: float) -> float:
    """PSNR in dB for 8-bit content; ``inf`` for a perfect reconstruction."""
    if mse < 0:
        raise ValueError(f"MSE must be nonnegative, got {mse}")
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


def layer_increments(table: SvcLayerTable) -> tuple[float, ...]:
    """PSNR contributed by each layer, with the zero-layer PSNR taken as 0."""
    q = np.diff(np.concatenate(([0.0], table.psnrs_db)))
    return tuple(float(v) for v in q)


def qos_of_rate(rate_bps: float, table: SvcLayerTable) -> float:
    if rate_bps < 0:
        raise ValueError(f"rate must be nonnegative, got {rate_bps}")
    l = table.layers_reached(rate_bps)
    return table.psnrs_db[l - 1] if l > 0 else 0.0


def synth_table(
    a: float,
    b: float,
    c: float,
    base_rate: float,
    num_layers: int,
    ratio: float = 1.6,
) -> SvcLayerTable:
    """Synthetic layer table from a logarithmic rate-quality curve.

    Layer rates are ``base_rate * ratio**(l-1)`` and layer PSNR is
    ``a + b * log10(1 + c * R_l)``. Parameters that do not give a strictly
    increasing, positive staircase are rejected with ``ValueError``.

    Parameters
    ----------
    a, b:
        Offset and slope of the curve in dB.
    c:
        Rate scale in 1/(bit/s).
    base_rate:
        Base-layer rate in bit/s; must be positive when more than one layer
        is requested, so that geometric spacing increases.
    num_layers:
        Number of layers ``L >= 1``.
    ratio:
        Geometric spacing between consecutive layer rates, ``> 1``.
    """
    if num_layers < 1:
        raise ValueError(f"num_layers must be >= 1, got {num_layers}")
    if num_layers > 1 and not ratio > 1:
        raise ValueError(f"ratio must exceed 1, got {ratio}")
    if not b > 0:
        raise ValueError(f"b must be positive for an increasing staircase, got {b}")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    rates = base_rate * ratio ** np.arange(num_layers, dtype=float)
    psnrs = a + b * np.log10(1.0 + c * rates)
    # base_rate == 0 with L > 1 repeats rate 0 and is rejected by the table itself
    return SvcLayerTable(tuple(rates), tuple(psnrs))


def average_qos(scenario, y) -> float:
    """Mean PSNR over devices when device ``i`` runs at SINR ``y[i]``.

    Layer thresholds are compared in the SINR domain, ``y_i >= 2**(R/B) - 1``,
    which is the same test as ``B log2(1 + y_i) >= R`` without the rounding
    of a log/exp round trip.
    """
    y = np.asarray(y, dtype=float)
    total = 0.0
    for thr, psnr, yi in zip(scenario.sinr_thresholds, scenario.psnr_levels, y):
        l = int(np.searchsorted(thr, yi, side="right"))
        total += psnr[l]
    return total / len(scenario.devices)
