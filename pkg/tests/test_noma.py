import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from svcnoma import noma
from svcnoma.noma import (
    Device,
    UplinkScenario,
    energy_efficiency,
    g_membership,
    is_in_g,
    is_in_h,
    min_sinr_from_rate,
    powers_from_sinr,
    rate,
    sinr,
)

from conftest import random_scenario, scenario_from, table

T1 = table((1.0, 30.0))


def unit(gains, p_max=1e9, ee_min=0.0, bandwidth=1.0, tables=None):
    tables = tables or [T1] * len(gains)
    return scenario_from(gains, p_max, ee_min, tables, bandwidth, 1.0)


def test_sinr_examples():
    assert sinr(unit([2.0]), [3.0]) == pytest.approx([6.0])
    assert np.all(sinr(unit([4.0, 1.0]), [0.0, 0.0]) == 0.0)
    assert sinr(unit([4.0, 1.0]), [1.0, 2.0]) == pytest.approx([4 / 3, 2.0])


def test_sinr_batched_and_errors():
    sc = unit([4.0, 1.0])
    out = sinr(sc, [[1.0, 2.0], [0.0, 1.0]])
    assert out == pytest.approx(np.array([[4 / 3, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        sinr(sc, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        sinr(sc, [-1.0, 2.0])


def test_rate_examples():
    sc = unit([1.0], bandwidth=180e3)
    assert rate(sc, [1.0]) == pytest.approx([180e3])
    assert rate(sc, [0.0]) == pytest.approx([0.0])
    assert rate(sc, [3.0]) == pytest.approx([360000.0])
    with pytest.raises(ValueError):
        rate(sc, [-0.1])


def test_energy_efficiency_examples():
    assert energy_efficiency(1000.0, 10.0) == 100.0
    assert energy_efficiency(0.0, 0.0) == math.inf
    assert energy_efficiency(360000.0, 100.0) == 3600.0
    assert list(energy_efficiency([1.0, 2.0], [0.0, 4.0])) == [math.inf, 0.5]
    with pytest.raises(ValueError):
        energy_efficiency(-1.0, 1.0)


def test_powers_from_sinr_examples():
    assert np.all(powers_from_sinr(unit([4.0, 1.0]), [0.0, 0.0]) == 0.0)
    assert powers_from_sinr(unit([2.0]), [6.0]) == pytest.approx([3.0])
    assert powers_from_sinr(unit([4.0, 1.0]), [4 / 3, 2.0]) == pytest.approx([1.0, 2.0])
    with pytest.raises(ValueError):
        powers_from_sinr(unit([1.0]), [-1.0])


def test_min_sinr_examples():
    B = 180e3
    assert min_sinr_from_rate(B, B) == pytest.approx(1.0)
    assert min_sinr_from_rate(0.0, B) == 0.0
    assert min_sinr_from_rate(2 * B, B) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        min_sinr_from_rate(-1.0, B)


@settings(max_examples=200)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_round_trip(M, seed):
    rng = np.random.default_rng(seed)
    gains = np.sort(rng.uniform(0.1, 10.0, M))[::-1]
    assume(np.all(np.diff(gains) < 0))
    sc = unit(gains)
    gamma = rng.uniform(0.0, 100.0, M)
    back = sinr(sc, powers_from_sinr(sc, gamma))
    assert np.max(np.abs(back - gamma)) / (1 + np.max(gamma)) <= 1e-9


def test_is_in_g_examples(rng):
    sc = random_scenario(rng, 3)
    assert is_in_g(sc, np.zeros(3))
    caps = sc.sinr_caps()
    for i in range(3):
        y = np.zeros(3)
        y[i] = caps[i] * (1 + 1e-9)
        assert not is_in_g(sc, y)
    with pytest.raises(ValueError):
        is_in_g(sc, [-1.0, 0.0, 0.0])


def test_sinr_caps_are_the_largest_accepted_values(rng):
    for _ in range(50):
        sc = random_scenario(rng, 3, ee_min=0.0)
        caps = sc.sinr_caps()
        for i in range(3):
            y = np.zeros(3)
            y[i] = caps[i]
            assert is_in_g(sc, y)
            y[i] = np.nextafter(caps[i], np.inf)
            assert not is_in_g(sc, y)


def test_membership_flips_at_power_cap():
    # no EE floors, so only the caps bind
    sc = unit([4.0, 2.0, 1.0], p_max=[3.0, 2.0, 5.0])
    y = np.array([0.2, 0.3, 0.5])
    assert is_in_g(sc, y)
    # independent scale search: when does device 0 hit its cap?
    lo, hi = y[0], 1e3
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        p = powers_from_sinr(sc, [mid, y[1], y[2]])
        lo, hi = (mid, hi) if p[0] <= 3.0 else (lo, mid)
    assert is_in_g(sc, [lo, y[1], y[2]])
    assert not is_in_g(sc, [hi * (1 + 1e-12), y[1], y[2]])
    level = 1.0 + 1.0 * powers_from_sinr(sc, y)[2] + 2.0 * powers_from_sinr(sc, y)[1]
    assert lo == pytest.approx(3.0 * 4.0 / level, rel=1e-12)


def test_membership_respects_ee_floor():
    # B=1, h^2=1, sigma^2=1: EE(p) = log2(1+p)/p; EE(1) = 1, EE(3) = 2/3
    sc = unit([1.0], p_max=10.0, ee_min=2 / 3)
    assert is_in_g(sc, [3.0 - 1e-9])
    assert not is_in_g(sc, [3.0 + 1e-6])


def test_g_membership_matches_scalar(rng):
    for _ in range(20):
        sc = random_scenario(rng, 3)
        Y = rng.uniform(0, 1, (200, 3)) * sc.sinr_caps()
        assert list(g_membership(sc, Y)) == [is_in_g(sc, y) for y in Y]


def test_is_in_h_examples():
    sc = unit([2.0, 1.0], tables=[table((1.0, 30.0)), table((2.0, 20.0))])
    assert is_in_h(sc, sc.gamma_min)
    assert sc.gamma_min == pytest.approx([1.0, 3.0])
    assert not is_in_h(sc, [0.999, 5.0])
    zero = unit([2.0, 1.0], tables=[table((0.0, 30.0)), table((0.0, 20.0))])
    assert is_in_h(zero, [0.0, 0.0])


def _feasible_points(sc, rng, n):
    out = []
    while len(out) < n:
        P = rng.uniform(0, 1, (4 * n, sc.num_devices)) * sc.p_max
        Y = sinr(sc, P)
        out.extend(Y[g_membership(sc, Y)])
    return np.array(out[:n])


def test_normality(rng):
    sc = random_scenario(rng, 4)
    Y = _feasible_points(sc, rng, 500)
    Yp = Y * rng.uniform(0, 1, Y.shape)
    assert np.all(g_membership(sc, Yp))


@given(st.lists(st.floats(0, 100), min_size=3, max_size=3), st.lists(st.floats(0, 100), min_size=3, max_size=3))
def test_conormal_h(y, dy):
    sc = unit([3.0, 2.0, 1.0], tables=[table((1.0, 30.0)), table((0.5, 20.0)), table((2.0, 25.0))])
    if is_in_h(sc, y):
        assert is_in_h(sc, np.add(y, dy))


def test_interference_lowers_sinr():
    sc = unit([4.0, 2.0, 1.0])
    base = sinr(sc, [1.0, 1.0, 1.0])
    more = sinr(sc, [1.0, 1.0, 2.0])
    assert more[0] < base[0] and more[1] < base[1] and more[2] > base[2]


@given(st.lists(st.floats(0, 50), min_size=3, max_size=3), st.integers(0, 2), st.floats(0.01, 10))
def test_powers_nondecreasing_in_sinr(gamma, k, d):
    sc = unit([4.0, 2.0, 1.0])
    up = np.array(gamma, dtype=float)
    up[k] += d
    p0, p1 = powers_from_sinr(sc, gamma), powers_from_sinr(sc, up)
    assert np.all(p1[: k + 1] >= p0[: k + 1])
    assert np.all(p1[k + 1:] == p0[k + 1:])


def test_build_orders_and_breaks_ties():
    devs = [Device(1.0, 1.0, 0.0, T1, "a"), Device(3.0, 1.0, 0.0, T1, "b"), Device(3.0, 1.0, 0.0, T1, "c")]
    sc = UplinkScenario.build(devs, 1.0, 1.0)
    assert [d.label for d in sc.devices] == ["b", "c", "a"]
    assert sc.source_index == (1, 2, 0)
    assert sc.devices[1].gain_sq == np.nextafter(3.0, 0.0)


@pytest.mark.parametrize(
    "kw",
    [dict(gain_sq=0.0), dict(p_max_mw=0.0), dict(ee_min=-1.0)],
)
def test_device_validation(kw):
    args = dict(gain_sq=1.0, p_max_mw=1.0, ee_min=0.0, table=T1)
    args.update(kw)
    with pytest.raises(ValueError):
        Device(**args)


def test_scenario_validation():
    d = Device(1.0, 1.0, 0.0, T1)
    with pytest.raises(ValueError):
        UplinkScenario((d, d), 1.0, 1.0)
    with pytest.raises(ValueError):
        UplinkScenario((), 1.0, 1.0)
    with pytest.raises(ValueError):
        UplinkScenario((d,), 1.0, 0.0)
    with pytest.raises(ValueError):
        UplinkScenario((d,), 0.0, 1.0)


def test_with_overrides_keep_channels(rng):
    sc = random_scenario(rng, 3)
    assert np.all(sc.with_p_max(5.0).p_max == 5.0)
    assert np.all(sc.with_ee_min([1.0, 2.0, 3.0]).ee_min == [1.0, 2.0, 3.0])
    assert np.all(sc.with_p_max(5.0).gains == sc.gains)
    assert noma.LN2 == pytest.approx(math.log(2))
