"""Brute-force optimizers for small instances.

Both searches are exhaustive and independent of the polyblock machinery;
they exist to check it.
"""

from __future__ import annotations

import math

import numpy as np

from . import noma
from .noma import UplinkScenario
from .schemes import Allocation, _infeasible, allocation_from_sinr, mean_ee

__all__ = ["enumerate_layer_optimum", "grid_search", "MAX_TUPLES", "MAX_GRID_POINTS"]

MAX_TUPLES = 1_000_000
MAX_GRID_POINTS = 10_000_000


def enumerate_layer_optimum(scenario: UplinkScenario) -> Allocation:
    """Exact optimum of the layer staircase by listing every layer tuple.

    The average PSNR depends on the SINR vector only through the number of
    layers each device clears, so it suffices to test the cheapest SINR
    vector for each tuple: every device exactly at its layer threshold. A
    device may only deliver zero layers when its base layer needs no rate.
    Among optimal tuples the one with the least total power is returned.
    """
    choices = []
    for thr, levels, d in zip(scenario.sinr_thresholds, scenario.psnr_levels, scenario.devices):
        first = 1 if d.table.base_rate > 0 else 0
        sinr_of_level = np.concatenate(([0.0], thr))
        ls = np.arange(first, len(levels))
        choices.append((sinr_of_level[ls], levels[ls]))
    count = math.prod(len(c[0]) for c in choices)
    if count > MAX_TUPLES:
        raise ValueError(f"{count} layer tuples exceed the enumeration guard of {MAX_TUPLES}")

    grids = np.meshgrid(*[np.arange(len(c[0])) for c in choices], indexing="ij")
    idx = [g.ravel() for g in grids]
    Y = np.stack([c[0][i] for c, i in zip(choices, idx)], axis=1)
    total = np.zeros(Y.shape[0])
    for c, i in zip(choices, idx):
        total += c[1][i]
    value = total / scenario.num_devices

    ok = noma.g_membership(scenario, Y)
    if not np.any(ok):
        return _infeasible(scenario, "oracle")
    power = noma.powers_from_sinr(scenario, Y).sum(axis=1)
    cand = np.flatnonzero(ok)
    top = cand[value[cand] == value[cand].max()]
    best = top[np.argmin(power[top])]
    return allocation_from_sinr(scenario, Y[best], "oracle", "converged")


def grid_search(scenario: UplinkScenario, points_per_dim: int) -> Allocation:
    """Best average PSNR over the uniform power grid ``{0, ..., p_max}^M``.

    Every grid point is checked against the base-layer rate, the power caps
    (by construction) and the EE floors using the forward SINR map, so the
    result is a feasible lower bound on the optimum.
    """
    n = int(points_per_dim)
    M = scenario.num_devices
    if n < 2:
        raise ValueError("points_per_dim must be at least 2")
    if n**M > MAX_GRID_POINTS:
        raise ValueError(f"{n}^{M} grid points exceed the guard of {MAX_GRID_POINTS}")

    axes = [np.linspace(0.0, d.p_max_mw, n) for d in scenario.devices]
    best_value, best_power, best_p = -math.inf, math.inf, None
    # chunk over the first device to bound memory
    rest = np.meshgrid(*axes[1:], indexing="ij") if M > 1 else []
    rest = [g.ravel() for g in rest]
    for p0 in axes[0]:
        P = np.column_stack([np.full(rest[0].size if rest else 1, p0)] + rest)
        Y = noma.sinr(scenario, P)
        R = noma.rate(scenario, Y)
        ok = np.all(Y >= scenario.gamma_min, axis=1)
        ok &= np.all(R >= scenario.ee_min * P, axis=1)
        if not np.any(ok):
            continue
        total = np.zeros(P.shape[0])
        for i in range(M):
            lv = np.searchsorted(scenario.sinr_thresholds[i], Y[:, i], side="right")
            total += scenario.psnr_levels[i][lv]
        value = np.where(ok, total / M, -math.inf)
        vmax = value.max()
        top = np.flatnonzero(value == vmax)
        psum = P[top].sum(axis=1)
        j = top[np.argmin(psum)]
        if vmax > best_value or (vmax == best_value and psum.min() < best_power):
            best_value, best_power, best_p = vmax, float(psum.min()), P[j].copy()
    if best_p is None:
        return _infeasible(scenario, "grid")
    alloc = allocation_from_sinr(scenario, noma.sinr(scenario, best_p), "grid", "converged")
    alloc.powers = best_p
    alloc.ee = np.atleast_1d(noma.energy_efficiency(alloc.rates, best_p))
    alloc.avg_ee = mean_ee(alloc.ee, best_p)
    return alloc
