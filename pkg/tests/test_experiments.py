import io
import math

import numpy as np
import pytest

from svcnoma import channel
from svcnoma.experiments import (
    COVERAGE_SWEEP_M,
    CONVERGENCE_HEADER,
    SWEEP_HEADER,
    SweepSpec,
    _distances_m,
    coverage_sweep_spec,
    generate_scenario,
    iterations_to_converge,
    power_sweep_spec,
    preset_tables,
    run_convergence,
    run_coverage_sweep,
    run_power_sweep,
    run_sweep,
    write_convergence_csv,
    write_sweep_csv,
)
from svcnoma.schemes import solve_proposed


def rows_by_cell(rows):
    out = {}
    for r in rows:
        out.setdefault((r.swept_value, r.trial), {})[r.scheme] = r
    return out


@pytest.mark.parametrize(
    "kw",
    [
        dict(trials=0),
        dict(num_devices=0),
        dict(schemes=("proposed", "magic")),
        dict(placement="ring"),
        dict(radius_m=(30.0, 600.0)),
        dict(p_max_dbm=()),
        dict(ee_min=-1.0),
        dict(workers=0),
    ],
)
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        SweepSpec(**kw)


def test_spec_needs_exactly_one_sweep_list():
    with pytest.raises(ValueError):
        SweepSpec(radius_m=(600.0, 800.0)).swept_param
    with pytest.raises(ValueError):
        SweepSpec(p_max_dbm=20.0).swept_param
    assert power_sweep_spec().swept_param == "p_max_dbm"
    assert coverage_sweep_spec().swept_param == "radius_m"
    with pytest.raises(ValueError):
        run_power_sweep(coverage_sweep_spec(trials=1))
    with pytest.raises(ValueError):
        run_coverage_sweep(power_sweep_spec(trials=1))


def test_coverage_defaults():
    spec = coverage_sweep_spec()
    assert spec.radius_m == COVERAGE_SWEEP_M
    assert min(spec.radius_m) == 600.0 and max(spec.radius_m) == 1400.0
    assert spec.p_max_dbm == 22.0
    assert power_sweep_spec().p_max_dbm == (10.0, 15.0, 20.0, 25.0, 30.0)


def test_scenario_is_deterministic():
    spec = SweepSpec(p_max_dbm=20.0)
    a, b = generate_scenario(spec, 4), generate_scenario(spec, 4)
    assert np.array_equal(a.gains, b.gains) and a.source_index == b.source_index
    assert not np.array_equal(a.gains, generate_scenario(spec, 5).gains)
    assert not np.array_equal(a.gains, generate_scenario(SweepSpec(p_max_dbm=20.0, seed=1), 4).gains)


def test_scenario_contents():
    spec = SweepSpec(p_max_dbm=20.0, num_devices=5, ee_min=250.0)
    sc = generate_scenario(spec, 0)
    assert sc.num_devices == 5
    assert np.all(np.diff(sc.gains) < 0)
    assert np.allclose(sc.p_max, 100.0) and np.all(sc.ee_min == 250.0)
    assert sc.noise_mw == channel.noise_power_mw(channel.ChannelParams())
    # device k of the draw carries preset table k
    presets = preset_tables(5)
    assert all(sc.tables[i] == presets[sc.source_index[i]] for i in range(5))


def test_distances_within_disk():
    spec = SweepSpec(channel=channel.ChannelParams(fading_enabled=False), p_max_dbm=20.0, radius_m=800.0)
    for t in range(50):
        sc = generate_scenario(spec, t)
        # invert the deterministic path loss back to distance
        d_km = 10 ** ((-10 * np.log10(sc.gains) - 128.1) / 37.6)
        assert np.all(d_km * 1000 <= 800.0 * (1 + 1e-9))
        assert np.all(d_km * 1000 >= 35.0 * (1 - 1e-9))


def test_uniform_area_second_moment():
    spec = SweepSpec(p_max_dbm=20.0, radius_m=1000.0)
    u = np.random.default_rng(9).random(100_000)
    d = _distances_m(spec, u, 1000.0)
    assert np.mean(d**2) == pytest.approx(1000.0**2 / 2, rel=0.02)
    radial = _distances_m(SweepSpec(p_max_dbm=20.0, placement="radius"), u, 1000.0)
    assert np.mean(radial) == pytest.approx((1000.0 + 35.0) / 2, rel=0.02)


def test_coverage_moves_same_devices_outward():
    spec = coverage_sweep_spec(channel=channel.ChannelParams(fading_enabled=False))
    near, far = generate_scenario(spec, 3, radius_m=600.0), generate_scenario(spec, 3, radius_m=1400.0)
    assert near.source_index == far.source_index
    assert np.all(far.gains < near.gains)


def test_power_sweep_rows_and_ordering():
    spec = power_sweep_spec(trials=4, p_max_dbm=(10.0, 20.0, 30.0))
    rows = run_power_sweep(spec)
    assert len(rows) == 3 * 4 * 3
    keys = [(r.swept_value, r.trial, spec.schemes.index(r.scheme)) for r in rows]
    assert keys == sorted(keys)
    assert all(r.swept_param == "p_max_dbm" for r in rows)
    for cell in rows_by_cell(rows).values():
        p, m = cell["proposed"], cell["noma_mt"]
        if not math.isnan(p.avg_psnr_db):
            assert p.avg_psnr_db >= m.avg_psnr_db
        else:
            assert p.status == "infeasible" and math.isnan(p.avg_ee)


def test_power_sweep_mean_nondecreasing():
    spec = power_sweep_spec(trials=10, schemes=("proposed",))
    rows = run_power_sweep(spec)
    means = []
    for v in spec.p_max_dbm:
        vals = [r.avg_psnr_db for r in rows if r.swept_value == v]
        means.append(np.mean(np.nan_to_num(vals, nan=0.0)))
    assert all(b >= a for a, b in zip(means, means[1:]))


def test_sweep_cells_share_scenario():
    spec = power_sweep_spec(trials=2, p_max_dbm=(20.0,), schemes=("proposed",))
    row = run_sweep(spec)[1]
    direct = solve_proposed(generate_scenario(spec, 1, p_max_dbm=20.0), spec.solver)
    assert row.avg_psnr_db == direct.avg_qos or (math.isnan(row.avg_psnr_db) and not direct.feasible)


def test_empty_schemes():
    assert run_power_sweep(power_sweep_spec(schemes=(), trials=2)) == []


def test_single_radius_list_is_point_run():
    listed = run_coverage_sweep(coverage_sweep_spec(radius_m=(900.0,), trials=3))
    point = run_power_sweep(power_sweep_spec(radius_m=900.0, p_max_dbm=(22.0,), trials=3))
    key = lambda r: (r.scheme, r.trial, r.status, np.nan_to_num(r.avg_psnr_db, nan=-1.0), r.iterations)
    assert [key(r) for r in listed] == [key(r) for r in point]


def test_convergence_traces():
    spec = SweepSpec(p_max_dbm=23.0, trials=8)
    rows = run_convergence(spec, (2, 3))
    traces = {}
    for r in rows:
        traces.setdefault((r.devices, r.trial), []).append(r)
    assert {k[0] for k in traces} == {2, 3}
    for trace in traces.values():
        assert [r.iteration for r in trace] == list(range(1, len(trace) + 1))
        ub = [r.upper_bound for r in trace]
        cbv = [r.best_value for r in trace]
        assert all(a >= b for a, b in zip(ub, ub[1:]))
        assert all(b >= a for a, b in zip(cbv, cbv[1:]))
    counts = iterations_to_converge(rows)
    assert set(counts) == {2, 3}
    with pytest.raises(ValueError):
        run_convergence(spec, (0,))


def test_csv_format():
    spec = power_sweep_spec(trials=2, p_max_dbm=(10.0, 20.0))
    rows = run_sweep(spec)
    buf = io.StringIO()
    text = write_sweep_csv(rows, spec.to_dict(), buf)
    assert buf.getvalue() == text
    lines = text.splitlines()
    assert lines[0].startswith("# config: ")
    assert lines[1] == ",".join(SWEEP_HEADER)
    assert len(lines) == 2 + len(rows)
    first = lines[2].split(",")
    assert first[0] == rows[0].scheme
    assert first[4] == format(rows[0].avg_psnr_db, ".9g")
    assert write_sweep_csv(rows).splitlines()[0] == ",".join(SWEEP_HEADER)
    conv = write_convergence_csv(run_convergence(SweepSpec(p_max_dbm=23.0, trials=1), (2,)))
    assert conv.splitlines()[0] == ",".join(CONVERGENCE_HEADER)


def test_reproducible_and_worker_independent():
    spec = power_sweep_spec(trials=3, p_max_dbm=(15.0, 25.0))
    a = write_sweep_csv(run_sweep(spec), spec.to_dict())
    b = write_sweep_csv(run_sweep(spec), spec.to_dict())
    assert a == b
    par = SweepSpec(**{**spec.__dict__, "workers": 2})
    assert write_sweep_csv(run_sweep(par)) == write_sweep_csv(run_sweep(spec))
