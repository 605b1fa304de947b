"""YAML loaders for layer tables, scenarios and sweep specs.

Layer-table file: one YAML document per device, in device order::

    layers:
      - {rate_bps: 192000, psnr_db: 33.1}
      - {rate_bps: 288000, psnr_db: 34.3}
    ---
    layers:
      - {rate_bps: 256000, psnr_db: 31.4}

Scenario file (device ``k`` uses table document ``k``)::

    bandwidth_hz: 180000          # optional
    noise_psd_dbm_per_hz: -174    # optional; or give noise_mw directly
    devices:
      - {gain_sq: 2.1e-13, p_max_mw: 200, ee_min: 1000}
      - {gain_sq: 6.4e-14, p_max_mw: 200, ee_min: 1000}

Sweep-spec file: any of the :class:`~svcnoma.experiments.SweepSpec` fields
(``schemes``, ``num_devices``, ``radius_m``, ``p_max_dbm``, ``ee_min``,
``trials``, ``seed``, ``placement``, ``min_distance_m``, ``workers``), a
``solver`` mapping with ``delta``, ``eps_proj``, ``max_iter`` and
``max_vertices``, ``tables_file`` (relative to the sweep-spec file) and
``device_counts`` for convergence runs.

Every loader raises :class:`InputError` naming the first violation.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from . import channel
from .noma import Device, UplinkScenario
from .qos import SvcLayerTable

__all__ = ["InputError", "load_tables", "dump_tables", "load_scenario", "load_sweep_spec"]

SPEC_KEYS = {
    "schemes",
    "num_devices",
    "radius_m",
    "p_max_dbm",
    "ee_min",
    "trials",
    "seed",
    "placement",
    "min_distance_m",
    "workers",
    "solver",
    "tables_file",
    "device_counts",
}
SOLVER_KEYS = {"delta", "eps_proj", "max_iter", "max_vertices"}


class InputError(ValueError):
    """Malformed or invalid input file."""


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from e


def parse_tables(text: str) -> list[SvcLayerTable]:
    try:
        docs = [d for d in yaml.safe_load_all(text) if d is not None]
    except yaml.YAMLError as e:
        raise InputError(f"layer tables: {e}") from e
    if not docs:
        raise InputError("layer tables: no documents")
    tables = []
    for i, doc in enumerate(docs):
        if not isinstance(doc, dict) or not isinstance(doc.get("layers"), list):
            raise InputError(f"device {i}: expected a mapping with a 'layers' list")
        pairs = []
        for l, layer in enumerate(doc["layers"], start=1):
            if not isinstance(layer, dict) or set(layer) != {"rate_bps", "psnr_db"}:
                raise InputError(f"device {i}: layer {l}: expected exactly rate_bps and psnr_db")
            try:
                pairs.append((float(layer["rate_bps"]), float(layer["psnr_db"])))
            except (TypeError, ValueError) as e:
                raise InputError(f"device {i}: layer {l}: {e}") from e
        try:
            tables.append(SvcLayerTable.from_pairs(pairs))
        except ValueError as e:
            raise InputError(f"device {i}: {e}") from e
    return tables


def load_tables(path) -> list[SvcLayerTable]:
    return parse_tables(_read(path))


def dump_tables(tables, stream=None) -> str:
    text = yaml.safe_dump_all([t.to_dict() for t in tables], sort_keys=False)
    if stream is not None:
        stream.write(text)
    return text


def _mapping(text: str, what: str) -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise InputError(f"{what}: {e}") from e
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise InputError(f"{what}: expected a mapping at the top level")
    return doc


def parse_scenario(text: str, tables) -> UplinkScenario:
    doc = _mapping(text, "scenario")
    unknown = set(doc) - {"bandwidth_hz", "noise_mw", "noise_psd_dbm_per_hz", "devices"}
    if unknown:
        raise InputError(f"scenario: unknown keys {sorted(unknown)}")
    devices = doc.get("devices")
    if not isinstance(devices, list) or not devices:
        raise InputError("scenario: 'devices' must be a non-empty list")
    if len(devices) != len(tables):
        raise InputError(f"scenario has {len(devices)} devices but {len(tables)} layer tables")
    try:
        params = channel.ChannelParams(
            bandwidth_hz=float(doc.get("bandwidth_hz", 180e3)),
            noise_psd_dbm_per_hz=float(doc.get("noise_psd_dbm_per_hz", -174.0)),
        )
    except (TypeError, ValueError) as e:
        raise InputError(f"scenario: {e}") from e
    noise = doc.get("noise_mw")
    noise = channel.noise_power_mw(params) if noise is None else noise
    built = []
    for i, (d, table) in enumerate(zip(devices, tables)):
        if not isinstance(d, dict) or set(d) != {"gain_sq", "p_max_mw", "ee_min"}:
            raise InputError(f"device {i}: expected exactly gain_sq, p_max_mw and ee_min")
        try:
            built.append(
                Device(float(d["gain_sq"]), float(d["p_max_mw"]), float(d["ee_min"]), table, f"dev{i}")
            )
        except (TypeError, ValueError) as e:
            raise InputError(f"device {i}: {e}") from e
    try:
        return UplinkScenario.build(built, params.bandwidth_hz, float(noise))
    except (TypeError, ValueError) as e:
        raise InputError(f"scenario: {e}") from e


def load_scenario(path, tables) -> UplinkScenario:
    return parse_scenario(_read(path), tables)


def load_sweep_spec(path) -> dict:
    """Keyword arguments for ``SweepSpec`` plus ``device_counts`` if given.

    The ``solver`` mapping is returned as a dict; ``tables_file`` is loaded
    and replaced by ``tables``.
    """
    doc = _mapping(_read(path), "sweep spec")
    unknown = set(doc) - SPEC_KEYS
    if unknown:
        raise InputError(f"sweep spec: unknown keys {sorted(unknown)}")
    solver = doc.get("solver", {}) or {}
    if not isinstance(solver, dict) or set(solver) - SOLVER_KEYS:
        raise InputError(f"sweep spec: solver accepts only {sorted(SOLVER_KEYS)}")
    if "tables_file" in doc:
        doc["tables"] = load_tables(Path(path).parent / doc.pop("tables_file"))
    return doc
