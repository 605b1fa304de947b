import numpy as np
import pytest

from svcnoma import channel
from svcnoma.noma import Device, UplinkScenario
from svcnoma.qos import SvcLayerTable, synth_table

BANDWIDTH = 180e3


def scenario_from(gains, p_max, ee_min, tables, bandwidth=1.0, noise=1.0):
    M = len(gains)
    p_max = np.broadcast_to(p_max, (M,))
    ee_min = np.broadcast_to(ee_min, (M,))
    devices = [Device(float(g), float(p), float(e), t) for g, p, e, t in zip(gains, p_max, ee_min, tables)]
    return UplinkScenario.build(devices, bandwidth, noise)


def random_scenario(rng, M, layers=(2, 3, 4), p_dbm=(10.0, 30.0), radius_m=1000.0, ee_min=1e3):
    """Random cell-edge scenario drawn without the experiments module."""
    d_km = np.sqrt(rng.uniform((35.0 / radius_m) ** 2, 1.0, M)) * radius_m / 1000.0
    params = channel.ChannelParams()
    gains = 10 ** (-channel.path_loss_db(d_km) / 10) * rng.exponential(1.0, M)
    p_mw = channel.dbm_to_mw(rng.uniform(*p_dbm))
    tables = [
        synth_table(20.0, 8.0, 1e-4, rng.uniform(8e4, 3e5), int(rng.choice(layers)), rng.uniform(1.3, 2.0))
        for _ in range(M)
    ]
    return scenario_from(gains, p_mw, ee_min, tables, BANDWIDTH, channel.noise_power_mw(params))


def table(*pairs):
    return SvcLayerTable.from_pairs(pairs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
