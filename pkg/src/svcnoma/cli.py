"""Command-line driver: ``svcnoma {solve,sweep,convergence,gen-tables}``.

Exit codes: 0 success (``solve``: converged), 1 invalid input, 2 infeasible
instance, 3 iteration or vertex cap reached.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import channel, experiments, files
from .experiments import SweepSpec
from .poa import SolverConfig
from .qos import synth_table
from .schemes import MT_CONFIG, SCHEMES, solve_noma_mt, solve_oma, solve_proposed

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_CAP = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    # usage errors share the invalid-input code; 2 is reserved for infeasible
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _schemes(text: str) -> tuple[str, ...]:
    names = tuple(v.strip() for v in text.split(",") if v.strip())
    bad = [n for n in names if n not in SCHEMES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown scheme(s) {bad}; choose from {', '.join(SCHEMES)}")
    return names


def _solver_flags(p):
    p.add_argument("--delta", type=float, default=None, help="termination gap (default 1e-3)")
    p.add_argument("--max-iter", type=int, default=None, help="iteration cap (default 10000)")


def _sweep_flags(p, devices_type=int):
    p.add_argument("spec", nargs="?", help="YAML sweep spec; flags override its fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--schemes", type=_schemes)
    p.add_argument("--devices", type=devices_type)
    p.add_argument("--radius-m", type=_floats, help="radius, or comma list to sweep")
    p.add_argument("--pmax-dbm", type=_floats, help="power cap, or comma list to sweep")
    p.add_argument("--ee-min", type=float, help="EE floor in bit/s per mW")
    p.add_argument("--workers", type=int, help="parallel trial workers (default 1)")
    p.add_argument("--out", help="output CSV (default stdout)")
    _solver_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="svcnoma", description="QoS-driven uplink NOMA power allocation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one scenario")
    p.add_argument("scenario", help="YAML scenario file")
    p.add_argument("tables", help="YAML layer-table file, one document per device")
    p.add_argument("--schemes", type=_schemes, default=("proposed",))
    p.add_argument("--pmax-dbm", type=float, help="override every device's power cap")
    p.add_argument("--ee-min", type=float, help="override every device's EE floor")
    _solver_flags(p)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over power cap or radius")
    p.add_argument(
        "--kind",
        choices=("power", "coverage"),
        default=None,
        help="default sweep: power caps 10-30 dBm at 1000 m, or radii 600-1400 m at 22 dBm",
    )
    _sweep_flags(p)

    p = sub.add_parser("convergence", help="per-iteration bounds for several device counts")
    _sweep_flags(p, devices_type=_ints)

    p = sub.add_parser("gen-tables", help="write synthetic layer tables as YAML")
    p.add_argument("--devices", type=int, default=3)
    p.add_argument("--a", type=float, help="curve offset in dB")
    p.add_argument("--b", type=float, help="curve slope in dB")
    p.add_argument("--c", type=float, help="rate scale in 1/(bit/s)")
    p.add_argument("--base-rate", type=float, help="base-layer rate in bit/s")
    p.add_argument("--layers", type=int, help="number of layers")
    p.add_argument("--ratio", type=float, help="geometric rate spacing")
    p.add_argument("--out", help="output YAML (default stdout)")
    return parser


def _solver_config(args, base: SolverConfig, overrides: dict | None = None) -> SolverConfig:
    kw = {k: getattr(base, k) for k in ("delta", "max_iter", "max_vertices", "value_tol")}
    kw.update(overrides or {})
    if args.delta is not None:
        kw["delta"] = args.delta
        kw.pop("eps_proj", None)
    if args.max_iter is not None:
        kw["max_iter"] = args.max_iter
    return SolverConfig(**kw)


def _write(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _exit_code(status: str) -> int:
    if status == "converged":
        return EXIT_OK
    if status == "infeasible":
        return EXIT_INFEASIBLE
    return EXIT_CAP


def cmd_solve(args) -> int:
    tables = files.load_tables(args.tables)
    scenario = files.load_scenario(args.scenario, tables)
    if args.pmax_dbm is not None:
        scenario = scenario.with_p_max(channel.dbm_to_mw(args.pmax_dbm))
    if args.ee_min is not None:
        scenario = scenario.with_ee_min(args.ee_min)
    config = _solver_config(args, SolverConfig())
    mt_config = _solver_config(args, MT_CONFIG)
    codes = []
    for scheme in args.schemes:
        if scheme == "proposed":
            alloc = solve_proposed(scenario, config)
        elif scheme == "noma_mt":
            alloc = solve_noma_mt(scenario, mt_config)
        else:
            alloc = solve_oma(scenario)
        _print_allocation(scenario, alloc)
        codes.append(_exit_code(alloc.status))
    return codes[0]


def _print_allocation(scenario, alloc):
    criterion = alloc.outcome.criterion if alloc.outcome is not None else None
    how = f" ({criterion})" if criterion else ""
    print(f"scheme {alloc.scheme}: status {alloc.status}{how}, {alloc.iterations} iterations")
    print("device  input  power_dbm  power_mw  rate_bps  layer  psnr_db  ee_bps_per_mw")
    for k, d in enumerate(scenario.devices):
        p = float(alloc.powers[k])
        dbm = channel.mw_to_dbm(p) if p > 0 else -math.inf
        print(
            f"{k:6d}  {scenario.source_index[k]:5d}  {dbm:9.3f}  {p:8.3f}  {alloc.rates[k]:8.0f}"
            f"  {int(alloc.layers[k]):2d}/{d.table.num_layers:<2d}  {alloc.qos[k]:7.3f}  {alloc.ee[k]:.6g}"
        )
    print(f"avg_psnr_db {alloc.avg_qos:.6g}  avg_ee {alloc.avg_ee:.6g}")


def _spec_from_args(args, command: str) -> tuple[SweepSpec, list[int]]:
    kw = files.load_sweep_spec(args.spec) if args.spec else {}
    device_counts = kw.pop("device_counts", [2, 3, 4])
    solver_kw = kw.pop("solver", {}) or {}
    for flag, key in (("seed", "seed"), ("trials", "trials"), ("schemes", "schemes"),
                      ("ee_min", "ee_min"), ("workers", "workers")):
        v = getattr(args, flag)
        if v is not None:
            kw[key] = v
    for flag, key in (("radius_m", "radius_m"), ("pmax_dbm", "p_max_dbm")):
        v = getattr(args, flag)
        if v is not None:
            kw[key] = v
    if args.devices is not None:
        if command == "convergence":
            device_counts = args.devices
        else:
            kw["num_devices"] = args.devices
    if command == "convergence":
        kw.setdefault("p_max_dbm", 23.0)
        kw.setdefault("radius_m", 1000.0)
        fixed = ("radius_m", "p_max_dbm")
    else:
        kind = args.kind
        if kind is None:
            r = kw.get("radius_m")
            kind = "coverage" if isinstance(r, list) and len(r) > 1 else "power"
        defaults = experiments.coverage_sweep_spec() if kind == "coverage" else experiments.power_sweep_spec()
        kw.setdefault("radius_m", defaults.radius_m)
        kw.setdefault("p_max_dbm", defaults.p_max_dbm)
        fixed = ("p_max_dbm",) if kind == "coverage" else ("radius_m",)
    for key in fixed:
        # a one-element list for a fixed parameter is just a value
        if isinstance(kw[key], list) and len(kw[key]) == 1:
            kw[key] = kw[key][0]
    kw["solver"] = _solver_config(args, SolverConfig(), solver_kw)
    return SweepSpec(**kw), list(device_counts)


def cmd_sweep(args) -> int:
    spec, _ = _spec_from_args(args, "sweep")
    rows = experiments.run_sweep(spec)
    config = {"command": "sweep", **spec.to_dict()}
    _write(experiments.write_sweep_csv(rows, config), args.out)
    return EXIT_OK


def cmd_convergence(args) -> int:
    spec, counts = _spec_from_args(args, "convergence")
    rows = experiments.run_convergence(spec, counts)
    config = {"command": "convergence", "device_counts": counts, **spec.to_dict()}
    _write(experiments.write_convergence_csv(rows, config), args.out)
    return EXIT_OK


def cmd_gen_tables(args) -> int:
    if args.devices < 1:
        raise ValueError(f"--devices must be >= 1, got {args.devices}")
    custom = {
        k: getattr(args, k)
        for k in ("a", "b", "c", "base_rate", "ratio")
        if getattr(args, k) is not None
    }
    if args.layers is not None:
        custom["num_layers"] = args.layers
    tables = []
    for i in range(args.devices):
        preset = dict(experiments.TABLE_PRESETS[i % len(experiments.TABLE_PRESETS)])
        preset.update(custom)
        tables.append(synth_table(**preset))
    _write(files.dump_tables(tables), args.out)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "convergence": cmd_convergence,
    "gen-tables": cmd_gen_tables,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
