"""Problem data model: network, thermal units, forecasts, and file ingestion.

Instances are frozen dataclasses; after :func:`load_instance` validates a
file the resulting object is immutable and safe to share across solves.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

PTDF_MAGNITUDE_WARN = 1.0 + 1e-6

RELAXATION_MODES = ("full-drop", "paper-literal")


class InstanceError(Exception):
    """Base class for instance ingestion failures."""


class InstanceFormatError(InstanceError):
    """The file could not be parsed as an instance document."""


class ValidationError(InstanceError):
    """A type invariant is violated; the message names the offending entity."""


@dataclass(frozen=True)
class FuelCost:
    """Quadratic fuel cost a + b*p + c*p**2 (currency/h, currency/MWh, currency/MW^2 h)."""

    a: float
    b: float
    c: float


@dataclass(frozen=True)
class ThermalUnit:
    id: str
    bus: str
    p_min: float
    p_max: float
    ramp_up: float
    ramp_down: float
    startup_cap: float
    shutdown_cap: float
    min_up: int
    min_down: int
    no_load_cost: float
    shutdown_cost: float
    fuel_cost: FuelCost
    # ordered (offline_threshold_hours, cost) pairs; first threshold == min_down
    startup_segments: tuple[tuple[int, float], ...]
    reserve_up_max: float
    reserve_dn_max: float
    reserve_up_cost: float
    reserve_dn_cost: float
    initial_on: bool
    initial_hours_in_state: int
    initial_output: float


@dataclass(frozen=True)
class Line:
    id: str
    capacity: float
    ptdf_row: dict[str, float]

    def ptdf(self, bus: str) -> float:
        # missing entries read as 0
        return self.ptdf_row.get(bus, 0.0)


@dataclass(frozen=True)
class Network:
    buses: tuple[str, ...]
    lines: tuple[Line, ...]


@dataclass(frozen=True)
class WindFarm:
    id: str
    bus: str
    forecast: tuple[float, ...]


@dataclass(frozen=True)
class LoadPoint:
    id: str
    bus: str
    forecast: tuple[float, ...]


@dataclass(frozen=True)
class SolveConfig:
    big_m_override: float | None = None
    fuel_segments: int = 3
    mip_gap: float = 1e-4
    benders_tolerance: float = 1e-4
    feasibility_threshold: float = 0.0
    time_limit: float | None = None
    relaxation_mode: str = "full-drop"
    rng_seed: int = 0
    max_iterations: int = 100


@dataclass(frozen=True)
class UCInstance:
    network: Network
    units: tuple[ThermalUnit, ...]
    wind_farms: tuple[WindFarm, ...]
    loads: tuple[LoadPoint, ...]
    horizon: int
    risk_level: float
    config: SolveConfig
    name: str = field(default="instance", compare=False)

    # -- index helpers used throughout the model builders ------------------

    def unit_index(self, unit_id: str) -> int:
        for i, u in enumerate(self.units):
            if u.id == unit_id:
                return i
        raise KeyError(unit_id)

    def bus_index(self, bus: str) -> int:
        return self.network.buses.index(bus)

    def units_at_bus(self, bus: str) -> list[ThermalUnit]:
        return [u for u in self.units if u.bus == bus]

    def wind_at_bus(self, bus: str) -> list[WindFarm]:
        return [w for w in self.wind_farms if w.bus == bus]

    def loads_at_bus(self, bus: str) -> list[LoadPoint]:
        return [d for d in self.loads if d.bus == bus]

    def bus_load_forecast(self, bus: str, t: int) -> float:
        """Total forecast load at a bus in period t (1-based)."""
        return sum(d.forecast[t - 1] for d in self.loads_at_bus(bus))

    def bus_wind_forecast(self, bus: str, t: int) -> float:
        return sum(w.forecast[t - 1] for w in self.wind_at_bus(bus))

    def total_load_forecast(self, t: int) -> float:
        return sum(d.forecast[t - 1] for d in self.loads)

    def total_wind_forecast(self, t: int) -> float:
        return sum(w.forecast[t - 1] for w in self.wind_farms)


# ---------------------------------------------------------------------------
# validation


def _check(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)


def validate_unit(u: ThermalUnit) -> None:
    tag = f"unit {u.id}"
    _check(0 <= u.p_min <= u.p_max, f"{tag}: requires 0 <= p_min <= p_max, got p_min={u.p_min}, p_max={u.p_max}")
    _check(u.startup_cap >= u.p_min, f"{tag}: startup_cap ({u.startup_cap}) < p_min ({u.p_min})")
    _check(u.shutdown_cap >= u.p_min, f"{tag}: shutdown_cap ({u.shutdown_cap}) < p_min ({u.p_min})")
    _check(u.ramp_up >= 0 and u.ramp_down >= 0, f"{tag}: ramp rates must be non-negative")
    _check(int(u.min_up) == u.min_up and u.min_up >= 1, f"{tag}: min_up must be an integer >= 1, got {u.min_up}")
    _check(int(u.min_down) == u.min_down and u.min_down >= 1, f"{tag}: min_down must be an integer >= 1, got {u.min_down}")
    _check(len(u.startup_segments) >= 1, f"{tag}: needs at least one startup segment")
    thresholds = [s[0] for s in u.startup_segments]
    _check(all(int(h) == h for h in thresholds), f"{tag}: startup thresholds must be integers")
    _check(
        all(a < b for a, b in zip(thresholds, thresholds[1:])),
        f"{tag}: startup segment thresholds must be strictly increasing, got {thresholds}",
    )
    _check(
        thresholds[0] == u.min_down,
        f"{tag}: first startup threshold ({thresholds[0]}) must equal min_down ({u.min_down})",
    )
    _check(u.reserve_up_max >= 0 and u.reserve_dn_max >= 0, f"{tag}: reserve capability bounds must be >= 0")
    if u.initial_on:
        _check(
            u.p_min <= u.initial_output <= u.p_max,
            f"{tag}: initial_output ({u.initial_output}) outside [p_min, p_max] while initially on",
        )
    else:
        _check(u.initial_output == 0, f"{tag}: initial_output must be 0 while initially off, got {u.initial_output}")
    _check(u.initial_hours_in_state >= 0, f"{tag}: initial_hours_in_state must be >= 0")


def validate_instance(inst: UCInstance) -> UCInstance:
    """Check every type invariant; raises ValidationError naming the violation."""
    _check(inst.horizon >= 1, f"horizon must be >= 1, got {inst.horizon}")
    _check(0.0 <= inst.risk_level <= 1.0, f"risk_level must lie in [0, 1], got {inst.risk_level}")
    _check(len(inst.units) >= 1, "instance needs at least one thermal unit")
    _check(inst.config.benders_tolerance > 0, "config: benders_tolerance must be > 0")
    _check(inst.config.fuel_segments >= 1, "config: fuel_segments must be >= 1")
    _check(
        inst.config.relaxation_mode in RELAXATION_MODES,
        f"config: relaxation_mode must be one of {RELAXATION_MODES}, got {inst.config.relaxation_mode!r}",
    )

    buses = inst.network.buses
    _check(len(set(buses)) == len(buses), "network: duplicate bus identifiers")
    seen_lines: set[str] = set()
    for line in inst.network.lines:
        _check(line.id not in seen_lines, f"network: duplicate line id {line.id}")
        seen_lines.add(line.id)
        _check(line.capacity > 0, f"line {line.id}: capacity must be > 0, got {line.capacity}")
        for bus, k in line.ptdf_row.items():
            _check(bus in buses, f"line {line.id}: ptdf references unknown bus {bus}")
            if abs(k) > PTDF_MAGNITUDE_WARN:
                warnings.warn(f"line {line.id}: |ptdf[{bus}]| = {abs(k):.4f} exceeds 1", stacklevel=2)

    seen: set[str] = set()
    for u in inst.units:
        _check(u.id not in seen, f"duplicate unit id {u.id}")
        seen.add(u.id)
        _check(u.bus in buses, f"unit {u.id}: unknown bus {u.bus}")
        validate_unit(u)
    for w in inst.wind_farms:
        _check(w.id not in seen, f"duplicate entity id {w.id}")
        seen.add(w.id)
        _check(w.bus in buses, f"wind farm {w.id}: unknown bus {w.bus}")
        _check(
            len(w.forecast) == inst.horizon,
            f"wind farm {w.id}: forecast length {len(w.forecast)} != horizon {inst.horizon}",
        )
        _check(all(v >= 0 for v in w.forecast), f"wind farm {w.id}: forecast values must be >= 0")
    for d in inst.loads:
        _check(d.id not in seen, f"duplicate entity id {d.id}")
        seen.add(d.id)
        _check(d.bus in buses, f"load {d.id}: unknown bus {d.bus}")
        _check(
            len(d.forecast) == inst.horizon,
            f"load {d.id}: forecast length {len(d.forecast)} != horizon {inst.horizon}",
        )
        _check(all(v >= 0 for v in d.forecast), f"load {d.id}: forecast values must be >= 0")
    return inst


# ---------------------------------------------------------------------------
# defaults


def default_reserve_costs(unit: ThermalUnit) -> tuple[float, float]:
    """Reserve cost rates derived from the linear fuel coefficient: 10% up, 7% down."""
    b = unit.fuel_cost.b
    if b < 0:
        raise ValidationError(f"unit {unit.id}: linear fuel coefficient must be >= 0 to derive reserve costs")
    return 0.10 * b, 0.07 * b


def default_big_m(inst: UCInstance, t: int, scenarios=None) -> float:
    """Activation constant for period t: sum of bounds of everything in the balance residual.

    Uses scenario maxima when a scenario set is supplied, otherwise the point
    forecasts.  A config override wins unconditionally.
    """
    if inst.config.big_m_override is not None:
        return inst.config.big_m_override
    total = sum(u.p_max for u in inst.units)
    if scenarios is not None:
        for qi in range(scenarios.wind.shape[0]):
            total += float(scenarios.wind[qi, t - 1, :].max()) if scenarios.count else 0.0
        for bi in range(scenarios.load.shape[0]):
            total += float(scenarios.load[bi, t - 1, :].max()) if scenarios.count else 0.0
    else:
        total += inst.total_wind_forecast(t)
        total += inst.total_load_forecast(t)
    return total


# ---------------------------------------------------------------------------
# file format (JSON document with sections network/units/wind/loads/config)


def _unit_from_dict(raw: dict) -> ThermalUnit:
    fuel = raw["fuel_cost"]
    has_up = "reserve_up_cost" in raw
    has_dn = "reserve_dn_cost" in raw
    unit = ThermalUnit(
        id=str(raw["id"]),
        bus=str(raw["bus"]),
        p_min=float(raw["p_min"]),
        p_max=float(raw["p_max"]),
        ramp_up=float(raw["ramp_up"]),
        ramp_down=float(raw["ramp_down"]),
        startup_cap=float(raw["startup_cap"]),
        shutdown_cap=float(raw["shutdown_cap"]),
        min_up=int(raw["min_up"]),
        min_down=int(raw["min_down"]),
        no_load_cost=float(raw["no_load_cost"]),
        shutdown_cost=float(raw["shutdown_cost"]),
        fuel_cost=FuelCost(a=float(fuel["a"]), b=float(fuel["b"]), c=float(fuel["c"])),
        startup_segments=tuple((int(h), float(c)) for h, c in raw["startup_segments"]),
        reserve_up_max=float(raw["reserve_up_max"]),
        reserve_dn_max=float(raw["reserve_dn_max"]),
        reserve_up_cost=float(raw["reserve_up_cost"]) if has_up else 0.0,
        reserve_dn_cost=float(raw["reserve_dn_cost"]) if has_dn else 0.0,
        initial_on=bool(raw["initial_on"]),
        initial_hours_in_state=int(raw["initial_hours_in_state"]),
        initial_output=float(raw["initial_output"]),
    )
    if not (has_up and has_dn):
        up, dn = default_reserve_costs(unit)
        unit = replace(
            unit,
            reserve_up_cost=unit.reserve_up_cost if has_up else up,
            reserve_dn_cost=unit.reserve_dn_cost if has_dn else dn,
        )
    return unit


def instance_from_dict(doc: dict, name: str = "instance") -> UCInstance:
    try:
        net_raw = doc["network"]
        network = Network(
            buses=tuple(str(b) for b in net_raw["buses"]),
            lines=tuple(
                Line(
                    id=str(l["id"]),
                    capacity=float(l["capacity"]),
                    ptdf_row={str(b): float(k) for b, k in l["ptdf_row"].items()},
                )
                for l in net_raw.get("lines", [])
            ),
        )
        units = tuple(_unit_from_dict(u) for u in doc["units"])
        wind = tuple(
            WindFarm(id=str(w["id"]), bus=str(w["bus"]), forecast=tuple(float(v) for v in w["forecast"]))
            for w in doc.get("wind", [])
        )
        loads = tuple(
            LoadPoint(id=str(d["id"]), bus=str(d["bus"]), forecast=tuple(float(v) for v in d["forecast"]))
            for d in doc.get("loads", [])
        )
        cfg_raw = doc.get("config", {})
        config = SolveConfig(
            big_m_override=cfg_raw.get("big_m_override"),
            fuel_segments=int(cfg_raw.get("fuel_segments", 3)),
            mip_gap=float(cfg_raw.get("mip_gap", 1e-4)),
            benders_tolerance=float(cfg_raw.get("benders_tolerance", 1e-4)),
            feasibility_threshold=float(cfg_raw.get("feasibility_threshold", 0.0)),
            time_limit=cfg_raw.get("time_limit"),
            relaxation_mode=str(cfg_raw.get("relaxation_mode", "full-drop")),
            rng_seed=int(cfg_raw.get("rng_seed", 0)),
            max_iterations=int(cfg_raw.get("max_iterations", 100)),
        )
        inst = UCInstance(
            network=network,
            units=units,
            wind_farms=wind,
            loads=loads,
            horizon=int(doc["horizon"]),
            risk_level=float(doc["risk_level"]),
            config=config,
            name=name,
        )
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"malformed instance document: {exc!r}") from exc
    return validate_instance(inst)


def instance_to_dict(inst: UCInstance) -> dict:
    return {
        "horizon": inst.horizon,
        "risk_level": inst.risk_level,
        "network": {
            "buses": list(inst.network.buses),
            "lines": [
                {"id": l.id, "capacity": l.capacity, "ptdf_row": dict(l.ptdf_row)} for l in inst.network.lines
            ],
        },
        "units": [
            {
                "id": u.id,
                "bus": u.bus,
                "p_min": u.p_min,
                "p_max": u.p_max,
                "ramp_up": u.ramp_up,
                "ramp_down": u.ramp_down,
                "startup_cap": u.startup_cap,
                "shutdown_cap": u.shutdown_cap,
                "min_up": u.min_up,
                "min_down": u.min_down,
                "no_load_cost": u.no_load_cost,
                "shutdown_cost": u.shutdown_cost,
                "fuel_cost": {"a": u.fuel_cost.a, "b": u.fuel_cost.b, "c": u.fuel_cost.c},
                "startup_segments": [[h, c] for h, c in u.startup_segments],
                "reserve_up_max": u.reserve_up_max,
                "reserve_dn_max": u.reserve_dn_max,
                "reserve_up_cost": u.reserve_up_cost,
                "reserve_dn_cost": u.reserve_dn_cost,
                "initial_on": u.initial_on,
                "initial_hours_in_state": u.initial_hours_in_state,
                "initial_output": u.initial_output,
            }
            for u in inst.units
        ],
        "wind": [{"id": w.id, "bus": w.bus, "forecast": list(w.forecast)} for w in inst.wind_farms],
        "loads": [{"id": d.id, "bus": d.bus, "forecast": list(d.forecast)} for d in inst.loads],
        "config": {
            "big_m_override": inst.config.big_m_override,
            "fuel_segments": inst.config.fuel_segments,
            "mip_gap": inst.config.mip_gap,
            "benders_tolerance": inst.config.benders_tolerance,
            "feasibility_threshold": inst.config.feasibility_threshold,
            "time_limit": inst.config.time_limit,
            "relaxation_mode": inst.config.relaxation_mode,
            "rng_seed": inst.config.rng_seed,
            "max_iterations": inst.config.max_iterations,
        },
    }


def load_instance(path) -> UCInstance:
    """Parse and validate an instance file; raises InstanceFormatError or ValidationError."""
    path = Path(path)
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InstanceFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"{path}: top level must be an object")
    return instance_from_dict(doc, name=path.stem)


def save_instance(inst: UCInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh, indent=2)
        fh.write("\n")
