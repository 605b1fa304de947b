"""Monte Carlo scenario generation and the sweep experiments.

Devices are dropped at random in a disk around the base station. Each trial
draws its placement and fading from its own stream, seeded by
``(seed, trial)``, and every scheme and every swept value in that trial sees
the same draw, so rows are paired.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import asdict, dataclass, field
import io
import json
import math
from typing import Optional, Sequence, Union

import numpy as np

from . import channel
from .channel import ChannelParams
from .noma import Device, UplinkScenario
from .poa import SolverConfig
from .qos import SvcLayerTable, synth_table
from .schemes import MT_CONFIG, SCHEMES, solve_noma_mt, solve_oma, solve_proposed

__all__ = [
    "SweepSpec",
    "SweepRow",
    "ConvergenceRow",
    "TABLE_PRESETS",
    "preset_tables",
    "generate_scenario",
    "run_power_sweep",
    "run_coverage_sweep",
    "run_sweep",
    "run_convergence",
    "iterations_to_converge",
    "write_sweep_csv",
    "write_convergence_csv",
    "SWEEP_HEADER",
    "CONVERGENCE_HEADER",
    "POWER_SWEEP_DBM",
    "COVERAGE_SWEEP_M",
    "power_sweep_spec",
    "coverage_sweep_spec",
]

POWER_SWEEP_DBM = (10.0, 15.0, 20.0, 25.0, 30.0)
COVERAGE_SWEEP_M = (600.0, 800.0, 1000.0, 1200.0, 1400.0)

SWEEP_HEADER = (
    "scheme",
    "swept_param",
    "swept_value",
    "trial",
    "avg_psnr_db",
    "avg_ee",
    "iterations",
    "status",
)
CONVERGENCE_HEADER = ("devices", "trial", "iteration", "upper_bound", "best_value", "gap", "status")

# Rate-quality curves for four synthetic clips, from static to high motion.
# Each gives a + b log10(1 + c R) dB at geometrically spaced layer rates.
TABLE_PRESETS = (
    dict(a=22.0, b=7.0, c=2e-4, base_rate=192e3, num_layers=5, ratio=1.5),
    dict(a=20.0, b=8.0, c=1e-4, base_rate=256e3, num_layers=3, ratio=1.8),
    dict(a=18.0, b=9.0, c=6e-5, base_rate=320e3, num_layers=4, ratio=1.5),
    dict(a=21.0, b=7.5, c=1.5e-4, base_rate=224e3, num_layers=3, ratio=1.7),
)


def preset_tables(num_devices: int) -> tuple[SvcLayerTable, ...]:
    """Built-in layer tables, cycling through :data:`TABLE_PRESETS`."""
    return tuple(synth_table(**TABLE_PRESETS[i % len(TABLE_PRESETS)]) for i in range(num_devices))


Sweepable = Union[float, Sequence[float]]


def _is_list(v) -> bool:
    return isinstance(v, (list, tuple, np.ndarray))


@dataclass(frozen=True)
class SweepSpec:
    """Configuration of a sweep or convergence run.

    ``radius_m`` and ``p_max_dbm`` are each a scalar or a list of values to
    sweep. ``tables`` gives one layer table per device index (cycled when
    shorter than ``num_devices``); ``None`` selects :func:`preset_tables`.
    ``placement`` is ``"area"`` (uniform over the disk) or ``"radius"``
    (uniform distance).
    """

    schemes: tuple[str, ...] = SCHEMES
    num_devices: int = 3
    radius_m: Sweepable = 1000.0
    p_max_dbm: Sweepable = POWER_SWEEP_DBM
    ee_min: float = 1e3
    trials: int = 30
    seed: int = 0
    solver: SolverConfig = SolverConfig()
    mt_solver: SolverConfig = MT_CONFIG
    tables: Optional[tuple[SvcLayerTable, ...]] = None
    placement: str = "area"
    min_distance_m: float = 35.0
    channel: ChannelParams = field(default_factory=ChannelParams)
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(self.schemes))
        for key in ("radius_m", "p_max_dbm"):
            v = getattr(self, key)
            if _is_list(v):
                v = tuple(float(x) for x in v)
                if not v:
                    raise ValueError(f"{key} sweep list is empty")
            else:
                v = float(v)
            object.__setattr__(self, key, v)
        if self.tables is not None:
            object.__setattr__(self, "tables", tuple(self.tables))
            if not self.tables:
                raise ValueError("tables must not be empty")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes {sorted(unknown)}; choose from {SCHEMES}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.num_devices < 1:
            raise ValueError(f"num_devices must be >= 1, got {self.num_devices}")
        if self.placement not in ("area", "radius"):
            raise ValueError(f"placement must be 'area' or 'radius', got {self.placement!r}")
        if not self.ee_min >= 0:
            raise ValueError(f"ee_min must be nonnegative, got {self.ee_min}")
        if not self.min_distance_m > 0:
            raise ValueError("min_distance_m must be positive")
        radii = self.radius_m if _is_list(self.radius_m) else (self.radius_m,)
        if min(radii) <= self.min_distance_m:
            raise ValueError(f"radius must exceed the minimum distance {self.min_distance_m} m")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    @property
    def swept_param(self) -> str:
        """``"p_max_dbm"`` or ``"radius_m"``; raises unless exactly one is a list."""
        r, p = _is_list(self.radius_m), _is_list(self.p_max_dbm)
        if r == p:
            raise ValueError("exactly one of radius_m and p_max_dbm must be a sweep list")
        return "radius_m" if r else "p_max_dbm"

    def device_tables(self, num_devices: Optional[int] = None) -> tuple[SvcLayerTable, ...]:
        M = self.num_devices if num_devices is None else num_devices
        if self.tables is None:
            return preset_tables(M)
        return tuple(self.tables[i % len(self.tables)] for i in range(M))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schemes"] = list(self.schemes)
        d["tables"] = None if self.tables is None else [t.to_dict() for t in self.tables]
        return d


def power_sweep_spec(**kw) -> SweepSpec:
    """Power caps 10 to 30 dBm at a 1000 m radius, unless overridden."""
    return SweepSpec(**{"radius_m": 1000.0, "p_max_dbm": POWER_SWEEP_DBM, **kw})


def coverage_sweep_spec(**kw) -> SweepSpec:
    """Radii 600 to 1400 m at a 22 dBm power cap, unless overridden."""
    return SweepSpec(**{"radius_m": COVERAGE_SWEEP_M, "p_max_dbm": 22.0, **kw})


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    swept_param: str
    swept_value: float
    trial: int
    avg_psnr_db: float
    avg_ee: float
    iterations: int
    status: str


@dataclass(frozen=True)
class ConvergenceRow:
    devices: int
    trial: int
    iteration: int
    upper_bound: float
    best_value: float
    gap: float
    status: str


def _trial_draws(spec: SweepSpec, trial: int, num_devices: int):
    # one stream per trial: placement quantile and fading, independent of radius and power
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, trial]))
    u = rng.random(num_devices)
    fading_seed = int(rng.integers(2**63))
    return u, fading_seed


def _distances_m(spec: SweepSpec, u: np.ndarray, radius_m: float) -> np.ndarray:
    r0 = spec.min_distance_m
    if spec.placement == "area":
        # inverse CDF of the uniform-area law on the annulus r0 <= r <= R
        return np.sqrt(r0**2 + u * (radius_m**2 - r0**2))
    return r0 + u * (radius_m - r0)


def generate_scenario(
    spec: SweepSpec,
    trial: int,
    radius_m: Optional[float] = None,
    p_max_dbm: Optional[float] = None,
    num_devices: Optional[int] = None,
) -> UplinkScenario:
    """Random decode-ordered scenario for one trial.

    ``radius_m`` and ``p_max_dbm`` default to the sweep spec's values and must be
    given when the sweep spec sweeps them. Placement quantiles and fading depend
    only on ``(spec.seed, trial)``, so a larger radius moves the same devices
    outward instead of redrawing them.
    """
    M = spec.num_devices if num_devices is None else num_devices
    radius_m = _scalar(spec.radius_m, radius_m, "radius_m")
    p_max_dbm = _scalar(spec.p_max_dbm, p_max_dbm, "p_max_dbm")
    u, fading_seed = _trial_draws(spec, trial, M)
    d_km = _distances_m(spec, u, radius_m) / 1000.0
    links = channel.sample_channels(fading_seed, d_km, spec.channel)
    p_mw = channel.dbm_to_mw(p_max_dbm)
    tables = spec.device_tables(M)
    devices = [
        Device(link.gain_sq_linear, p_mw, spec.ee_min, table, label=f"dev{k}")
        for k, (link, table) in enumerate(zip(links, tables))
    ]
    return UplinkScenario.build(
        devices, spec.channel.bandwidth_hz, channel.noise_power_mw(spec.channel)
    )


def _scalar(spec_value, override, name):
    if override is not None:
        return float(override)
    if _is_list(spec_value):
        raise ValueError(f"{name} is swept; pass a single value")
    return float(spec_value)


def _run_scheme(scheme: str, scenario: UplinkScenario, spec: SweepSpec, callback=None):
    if scheme == "proposed":
        return solve_proposed(scenario, spec.solver, callback)
    if scheme == "noma_mt":
        return solve_noma_mt(scenario, spec.mt_solver)
    return solve_oma(scenario)


def _row(scheme, param, value, trial, alloc) -> SweepRow:
    feasible = alloc.feasible
    return SweepRow(
        scheme=scheme,
        swept_param=param,
        swept_value=value,
        trial=trial,
        avg_psnr_db=alloc.avg_qos if feasible else math.nan,
        avg_ee=alloc.avg_ee if feasible else math.nan,
        iterations=alloc.iterations,
        status=alloc.status,
    )


def _sweep_trial(args) -> list[list[SweepRow]]:
    spec, trial = args
    param = spec.swept_param
    out = []
    for value in getattr(spec, param):
        scenario = generate_scenario(spec, trial, **{param: value})
        out.append([_row(s, param, value, trial, _run_scheme(s, scenario, spec)) for s in spec.schemes])
    return out


def _map_trials(fn, spec: SweepSpec, extra=()):
    jobs = [(spec, t, *extra) for t in range(spec.trials)]
    if spec.workers == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=spec.workers) as pool:
        return list(pool.map(fn, jobs))


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """Run every scheme on every (swept value, trial) cell.

    Rows come out ordered by swept value, then trial, then scheme in the
    order given, whatever the number of workers. Infeasible cells are kept
    with NaN PSNR and EE.
    """
    values = getattr(spec, spec.swept_param)
    if not spec.schemes:
        return []
    per_trial = _map_trials(_sweep_trial, spec)
    rows = []
    for v in range(len(values)):
        for trial_rows in per_trial:
            rows.extend(trial_rows[v])
    return rows


def run_power_sweep(spec: SweepSpec) -> list[SweepRow]:
    if spec.swept_param != "p_max_dbm":
        raise ValueError("power sweep needs p_max_dbm as the sweep list")
    return run_sweep(spec)


def run_coverage_sweep(spec: SweepSpec) -> list[SweepRow]:
    if spec.swept_param != "radius_m":
        raise ValueError("coverage sweep needs radius_m as the sweep list")
    return run_sweep(spec)


def _convergence_trial(args) -> list[ConvergenceRow]:
    spec, trial, M = args
    scenario = generate_scenario(spec, trial, num_devices=M)
    alloc = solve_proposed(scenario, spec.solver)
    trace = alloc.outcome.trace if alloc.outcome is not None else []
    return [
        ConvergenceRow(M, trial, r.iteration, r.upper_bound, r.best_value, r.gap, alloc.status)
        for r in trace
    ]


def run_convergence(spec: SweepSpec, device_counts: Sequence[int] = (2, 3, 4)) -> list[ConvergenceRow]:
    """Per-iteration upper bound and incumbent of the proposed solver.

    ``radius_m`` and ``p_max_dbm`` must be scalars. Infeasible trials
    contribute no rows.
    """
    rows = []
    for M in device_counts:
        if M < 1:
            raise ValueError(f"device count must be >= 1, got {M}")
        for trial_rows in _map_trials(_convergence_trial, spec, (M,)):
            rows.extend(trial_rows)
    return rows


def iterations_to_converge(rows: Sequence[ConvergenceRow]) -> dict[int, list[int]]:
    """Final iteration count of every converged trial, keyed by device count."""
    last: dict[tuple[int, int], ConvergenceRow] = {}
    for r in rows:
        last[(r.devices, r.trial)] = r
    out: dict[int, list[int]] = {}
    for (M, _), r in sorted(last.items()):
        if r.status == "converged":
            out.setdefault(M, []).append(r.iteration)
    return out


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".9g")
    return str(v)


def _write_csv(rows, header, config: Optional[dict], stream=None) -> str:
    buf = io.StringIO()
    if config is not None:
        buf.write("# config: " + json.dumps(config, sort_keys=True, default=_json_default) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(getattr(r, k)) for k in header])
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_sweep_csv(rows, config: Optional[dict] = None, stream=None) -> str:
    """Serialize sweep rows; ``config`` is echoed as a leading ``# config:`` line.

    Returns the CSV text and also writes it to ``stream`` when given.
    """
    return _write_csv(rows, SWEEP_HEADER, config, stream)


def write_convergence_csv(rows, config: Optional[dict] = None, stream=None) -> str:
    return _write_csv(rows, CONVERGENCE_HEADER, config, stream)
