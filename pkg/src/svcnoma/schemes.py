"""Power allocation schemes: the QoS-driven NOMA solver and two baselines.

* ``proposed``: polyblock search maximizing the average layer PSNR.
* ``noma_mt``: the same search and constraints with sum rate as objective.
* ``oma``: time-division access with a greedy PSNR-per-airtime rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Optional

import numpy as np

from . import noma
from .noma import UplinkScenario
from .poa import SolveOutcome, SolverConfig, solve
from .qos import average_qos, layer_increments

__all__ = [
    "Allocation",
    "allocation_from_sinr",
    "solve_proposed",
    "solve_noma_mt",
    "solve_oma",
    "oma_power",
    "layer_floor",
    "SCHEMES",
    "MT_CONFIG",
]

SCHEMES = ("proposed", "noma_mt", "oma")


@dataclass
class Allocation:
    """Per-device outcome of one scheme on one scenario, in decode order."""

    scheme: str
    powers: np.ndarray
    rates: np.ndarray
    layers: np.ndarray
    qos: np.ndarray
    ee: np.ndarray
    avg_qos: float
    avg_ee: float
    status: str
    iterations: int = 0
    time_share: Optional[np.ndarray] = None
    outcome: Optional[SolveOutcome] = field(default=None, repr=False)

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"


def mean_ee(ee: np.ndarray, powers: np.ndarray) -> float:
    """Average EE over transmitting devices; NaN when nobody transmits."""
    active = powers > 0
    if not np.any(active):
        return math.nan
    return float(np.mean(ee[active]))


def _layers_at(scenario: UplinkScenario, y: np.ndarray) -> np.ndarray:
    return np.array(
        [int(np.searchsorted(thr, yi, side="right")) for thr, yi in zip(scenario.sinr_thresholds, y)]
    )


def allocation_from_sinr(
    scenario: UplinkScenario,
    y,
    scheme: str,
    status: str,
    iterations: int = 0,
    outcome: Optional[SolveOutcome] = None,
) -> Allocation:
    """Allocation realizing SINR vector ``y`` under NOMA."""
    y = np.asarray(y, dtype=float)
    p = noma.powers_from_sinr(scenario, y)
    r = noma.rate(scenario, y)
    layers = _layers_at(scenario, y)
    q = np.array([levels[l] for levels, l in zip(scenario.psnr_levels, layers)])
    ee = np.atleast_1d(noma.energy_efficiency(r, p))
    return Allocation(
        scheme=scheme,
        powers=p,
        rates=r,
        layers=layers,
        qos=q,
        ee=ee,
        avg_qos=average_qos(scenario, y),
        avg_ee=mean_ee(ee, p),
        status=status,
        iterations=iterations,
        outcome=outcome,
    )


def _infeasible(scenario: UplinkScenario, scheme: str, iterations: int = 0, outcome=None) -> Allocation:
    M = scenario.num_devices
    zeros = np.zeros(M)
    return Allocation(
        scheme=scheme,
        powers=zeros,
        rates=zeros.copy(),
        layers=np.zeros(M, dtype=int),
        qos=zeros.copy(),
        ee=np.full(M, math.inf),
        avg_qos=math.nan,
        avg_ee=math.nan,
        status="infeasible",
        iterations=iterations,
        outcome=outcome,
    )


def _solve_noma(
    scenario, objective, scheme, config, callback=None, level_floor=None, report=None
) -> Allocation:
    # G is normal, so G & H is nonempty exactly when its corner gamma_min is achievable
    if not noma.is_in_g(scenario, scenario.gamma_min):
        return _infeasible(scenario, scheme)
    out = solve(
        lambda y: noma.is_in_g(scenario, y),
        scenario.gamma_min,
        objective,
        scenario.sinr_caps(),
        config,
        callback=callback,
        level_floor=level_floor,
    )
    if out.best_point is None:
        # stopped by a cap before any projection landed in H; the corner is still feasible
        status = "iteration_cap" if out.iterations >= config.max_iter else "vertex_cap"
        return allocation_from_sinr(scenario, scenario.gamma_min, scheme, status, out.iterations, out)
    y = out.best_point
    if report is not None:
        lowered = report(y)
        # exact arithmetic keeps it in G; guard against a last-ulp disagreement
        if noma.is_in_g(scenario, lowered):
            y = lowered
    return allocation_from_sinr(scenario, y, scheme, out.status, out.iterations, out)


def solve_proposed(
    scenario: UplinkScenario, config: SolverConfig = SolverConfig(), callback=None
) -> Allocation:
    """Maximize average PSNR over achievable SINR vectors.

    The first polyblock is the box under the interference-free SINR caps
    ``h_i^2 p_max_i / sigma^2``, which contains every achievable vector.
    The reported allocation runs every device exactly at the threshold of
    its highest delivered layer, the least-power point with the optimal
    layers; the raw solver point is kept in ``outcome.best_point``.
    """
    return _solve_noma(
        scenario,
        lambda y: average_qos(scenario, y),
        "proposed",
        config,
        callback,
        level_floor=lambda z: layer_floor(scenario, z),
        report=lambda y: layer_floor(scenario, y),
    )


def layer_floor(scenario: UplinkScenario, y) -> np.ndarray:
    """Lower every coordinate to the SINR threshold of the last layer it clears.

    Coordinates below the base threshold drop to zero. The average PSNR is
    unchanged, and the result is the least such point.
    """
    out = np.zeros(scenario.num_devices)
    for i, (thr, yi) in enumerate(zip(scenario.sinr_thresholds, y)):
        l = int(np.searchsorted(thr, yi, side="right"))
        if l > 0:
            out[i] = thr[l - 1]
    return out


# The sum rate is smooth, so the outer approximation closes its last percent
# slowly; the baseline settles for a 1% bound gap or 300 cuts, whichever first.
MT_CONFIG = SolverConfig(delta=1e-3, max_iter=300, value_tol=1e-2)


def solve_noma_mt(scenario: UplinkScenario, config: SolverConfig = MT_CONFIG) -> Allocation:
    """Maximize sum rate under the same caps, EE floors and base-layer rates.

    The returned point is always feasible; with the default settings its sum
    rate is typically within a few percent of the maximum.
    """
    B = scenario.bandwidth_hz

    def throughput(y):
        return B * float(np.sum(np.log1p(y))) / noma.LN2

    return _solve_noma(scenario, throughput, "noma_mt", config)


def oma_power(gain_sq: float, p_max_mw: float, ee_min: float, noise_mw: float, bandwidth_hz: float) -> float:
    """Largest power in ``[0, p_max]`` whose full-time EE meets ``ee_min``.

    ``R(p)/p`` falls monotonically from ``B h^2 / (sigma^2 ln 2)`` at ``p -> 0``,
    so the feasible powers form an interval starting at zero. Returns 0 when
    no positive power qualifies.
    """

    def ee(p):
        return bandwidth_hz * math.log1p(gain_sq * p / noise_mw) / math.log(2.0) / p

    if ee_min <= 0 or ee(p_max_mw) >= ee_min:
        return p_max_mw
    if bandwidth_hz * gain_sq / (noise_mw * math.log(2.0)) <= ee_min:
        return 0.0
    lo, hi = 0.0, p_max_mw
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if ee(mid) >= ee_min:
            lo = mid
        else:
            hi = mid
    return lo


def solve_oma(scenario: UplinkScenario, time_budget: float = 1.0, enforce_ee: bool = True) -> Allocation:
    """Time-division baseline with greedy marginal-utility airtime grants.

    Each device transmits at :func:`oma_power` when active, interference
    free. Airtime is handed out one layer at a time to the device whose next
    layer buys the most PSNR per unit of frame time; ties go to the lower
    index. A grant that no longer fits the remaining budget blocks that
    device for good, since later grants only shrink the budget.
    """
    if time_budget < 0:
        raise ValueError(f"time_budget must be nonnegative, got {time_budget}")
    M = scenario.num_devices
    B, noise = scenario.bandwidth_hz, scenario.noise_mw
    power = np.array(
        [
            oma_power(d.gain_sq, d.p_max_mw, d.ee_min if enforce_ee else 0.0, noise, B)
            for d in scenario.devices
        ]
    )
    full_rate = B * np.log1p(scenario.gains * power / noise) / noma.LN2
    tables = scenario.tables
    increments = [layer_increments(t) for t in tables]

    level = np.zeros(M, dtype=int)
    tau = np.zeros(M)
    blocked = full_rate <= 0
    used = 0.0
    tol = 1e-12 * max(time_budget, 1.0)
    while True:
        pick, pick_ratio, pick_cost = -1, -math.inf, 0.0
        for i in range(M):
            L = tables[i].num_layers
            if blocked[i] or level[i] >= L:
                continue
            prev = tables[i].rates_bps[level[i] - 1] if level[i] > 0 else 0.0
            cost = (tables[i].rates_bps[level[i]] - prev) / full_rate[i]
            if used + cost > time_budget + tol:
                blocked[i] = True
                continue
            gain = increments[i][level[i]]
            ratio = math.inf if cost == 0 else gain / cost
            if ratio > pick_ratio:
                pick, pick_ratio, pick_cost = i, ratio, cost
        if pick < 0:
            break
        level[pick] += 1
        tau[pick] += pick_cost
        used += pick_cost

    served = level > 0
    rates = np.array(
        [tables[i].rates_bps[level[i] - 1] if served[i] else 0.0 for i in range(M)]
    )
    powers = np.where(served, power, 0.0)
    q = np.array([scenario.psnr_levels[i][level[i]] for i in range(M)])
    with np.errstate(divide="ignore", invalid="ignore"):
        ee = np.where(served & (powers > 0), full_rate / np.where(powers > 0, powers, 1.0), math.inf)
    status = "converged" if np.any(served) else "infeasible"
    return Allocation(
        scheme="oma",
        powers=powers,
        rates=rates,
        layers=level,
        qos=q,
        ee=ee,
        avg_qos=float(np.mean(q)),
        avg_ee=mean_ee(ee, powers),
        status=status,
        time_share=tau,
    )
