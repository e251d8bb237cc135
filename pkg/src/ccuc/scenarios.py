"""Finite scenario sets for uncertain wind and load: sampling and file ingestion.

A scenario set holds equiprobable realizations as dense tensors aligned with
the instance: wind is (farm, period, scenario), load is (bus, period,
scenario) with load points aggregated onto their buses.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .instance import UCInstance

PROBABILITY_TOL = 1e-12


class ScenarioError(Exception):
    """Scenario data is missing, inconsistent with the instance, or malformed."""


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    probabilities: np.ndarray  # (N,)
    wind: np.ndarray  # (Q, T, N)
    load: np.ndarray  # (B, T, N)
    farm_ids: tuple[str, ...]
    bus_ids: tuple[str, ...]

    def __post_init__(self):
        for arr in (self.probabilities, self.wind, self.load):
            arr.setflags(write=False)
        total = float(np.sum(self.probabilities))
        if abs(total - 1.0) > PROBABILITY_TOL:
            raise ScenarioError(f"scenario probabilities sum to {total!r}, not 1")
        if np.any(self.wind < 0) or np.any(self.load < 0):
            raise ScenarioError("scenario values must be non-negative")

    @property
    def count(self) -> int:
        return int(self.probabilities.shape[0])

    @property
    def horizon(self) -> int:
        return int(self.load.shape[1])

    def total_wind(self, t: int, n: int) -> float:
        """Aggregate wind output in period t (1-based) under scenario n (0-based)."""
        return float(self.wind[:, t - 1, n].sum()) if self.wind.size else 0.0

    def total_load(self, t: int, n: int) -> float:
        return float(self.load[:, t - 1, n].sum()) if self.load.size else 0.0


def from_forecasts(inst: UCInstance) -> ScenarioSet:
    """Single scenario reproducing the instance point forecasts."""
    T = inst.horizon
    wind = np.zeros((len(inst.wind_farms), T, 1))
    for qi, farm in enumerate(inst.wind_farms):
        wind[qi, :, 0] = farm.forecast
    load = np.zeros((len(inst.network.buses), T, 1))
    for bi, bus in enumerate(inst.network.buses):
        load[bi, :, 0] = [inst.bus_load_forecast(bus, t) for t in range(1, T + 1)]
    return ScenarioSet(
        probabilities=np.array([1.0]),
        wind=wind,
        load=load,
        farm_ids=tuple(f.id for f in inst.wind_farms),
        bus_ids=tuple(inst.network.buses),
    )


# ---------------------------------------------------------------------------
# marginal forecasts and inverse-transform sampling


@dataclass(frozen=True)
class MarginalForecast:
    """Per-period quantile curves for one entity (a wind farm or a load bus)."""

    entity_kind: str  # "wind" | "load"
    entity_id: str
    curves: tuple[tuple[tuple[float, float], ...], ...]  # per period: ((level, value), ...)

    def __post_init__(self):
        if self.entity_kind not in ("wind", "load"):
            raise ScenarioError(f"{self.entity_id}: entity_kind must be 'wind' or 'load'")
        for t, curve in enumerate(self.curves, start=1):
            levels = [p for p, _ in curve]
            values = [v for _, v in curve]
            if not levels:
                raise ScenarioError(f"{self.entity_id}: empty quantile curve for period {t}")
            if not all(0.0 < p < 1.0 for p in levels):
                raise ScenarioError(f"{self.entity_id}, period {t}: quantile levels must lie in (0, 1)")
            if not all(a < b for a, b in zip(levels, levels[1:])):
                raise ScenarioError(f"{self.entity_id}, period {t}: quantile levels must be strictly increasing")
            if not all(a <= b for a, b in zip(values, values[1:])):
                raise ScenarioError(f"{self.entity_id}, period {t}: quantile values must be non-decreasing")


def inverse_cdf(curve, u: float) -> float:
    """Evaluate the quantile curve at probability u: linear between knots, flat beyond."""
    levels = np.array([p for p, _ in curve], dtype=float)
    values = np.array([v for _, v in curve], dtype=float)
    return float(np.interp(u, levels, values))


def forecast_from_instance(
    inst: UCInstance,
    wind_spread: float = 0.30,
    load_spread: float = 0.08,
    levels: tuple[float, ...] = (0.05, 0.5, 0.95),
) -> list[MarginalForecast]:
    """Marginal curves centred on the point forecasts with a symmetric relative spread.

    This stands in when no probabilistic forecast file is available; values
    are clamped at zero.
    """
    lo, mid, hi = levels

    def curve(value: float, spread: float):
        return (
            (lo, max(0.0, value * (1.0 - spread))),
            (mid, value),
            (hi, value * (1.0 + spread)),
        )

    out = []
    for farm in inst.wind_farms:
        out.append(
            MarginalForecast("wind", farm.id, tuple(curve(v, wind_spread) for v in farm.forecast))
        )
    for bus in inst.network.buses:
        if not inst.loads_at_bus(bus):
            continue
        totals = [inst.bus_load_forecast(bus, t) for t in range(1, inst.horizon + 1)]
        out.append(MarginalForecast("load", bus, tuple(curve(v, load_spread) for v in totals)))
    return out


def sample_scenarios(
    inst: UCInstance,
    forecasts: list[MarginalForecast],
    count: int,
    seed: int,
) -> ScenarioSet:
    """Draw `count` equiprobable scenarios by inverse-transform sampling of each marginal.

    Each (entity, period) marginal is sampled independently; the draw order is
    fixed so identical (forecasts, count, seed) reproduce the set bit for bit.
    """
    if count < 1:
        raise ScenarioError(f"scenario count must be >= 1, got {count}")
    T = inst.horizon
    by_key = {(f.entity_kind, f.entity_id): f for f in forecasts}

    def curves_for(kind: str, entity_id: str):
        fc = by_key.get((kind, entity_id))
        if fc is None:
            raise ScenarioError(f"missing forecast for {kind} entity {entity_id}")
        if len(fc.curves) != T:
            raise ScenarioError(
                f"{kind} entity {entity_id}: forecast covers {len(fc.curves)} periods, horizon is {T}"
            )
        return fc.curves

    rng = np.random.default_rng(seed)
    wind = np.zeros((len(inst.wind_farms), T, count))
    for qi, farm in enumerate(inst.wind_farms):
        curves = curves_for("wind", farm.id)
        for t in range(T):
            draws = rng.random(count)
            wind[qi, t, :] = [max(0.0, inverse_cdf(curves[t], u)) for u in draws]
    load = np.zeros((len(inst.network.buses), T, count))
    for bi, bus in enumerate(inst.network.buses):
        if not inst.loads_at_bus(bus):
            continue
        curves = curves_for("load", bus)
        for t in range(T):
            draws = rng.random(count)
            load[bi, t, :] = [max(0.0, inverse_cdf(curves[t], u)) for u in draws]
    return ScenarioSet(
        probabilities=np.full(count, 1.0 / count),
        wind=wind,
        load=load,
        farm_ids=tuple(f.id for f in inst.wind_farms),
        bus_ids=tuple(inst.network.buses),
    )


def windowed_scenarios(
    inst: UCInstance,
    count: int,
    seed: int,
    *,
    wind_amp: float = 0.30,
    load_amp: float = 0.05,
    window_hours: tuple[int, int] = (3, 6),
    windows_per_scenario: int = 2,
) -> ScenarioSet:
    """Equiprobable realizations perturbing the point forecasts in a few
    contiguous-hour windows per scenario.

    A simple correlated family: each scenario applies one multiplicative bump
    per drawn window (system-wide for load, farm-wide for wind) and matches
    the forecasts elsewhere.  Deterministic for a given (count, seed).
    """
    if count < 1:
        raise ScenarioError(f"scenario count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    T = inst.horizon
    base = from_forecasts(inst)
    wind = np.repeat(base.wind, count, axis=2).reshape(base.wind.shape[0], T, count)
    load = np.repeat(base.load, count, axis=2).reshape(base.load.shape[0], T, count)

    def bumps() -> np.ndarray:
        profile = np.ones(T)
        for _ in range(int(rng.integers(1, windows_per_scenario + 1))):
            width = int(rng.integers(window_hours[0], window_hours[1] + 1))
            start = int(rng.integers(0, max(1, T - width + 1)))
            profile[start : start + width] *= 1.0 + rng.uniform(-1.0, 1.0)
        return profile

    for n in range(count):
        wind_profile = 1.0 + (bumps() - 1.0) * wind_amp
        load_profile = 1.0 + (bumps() - 1.0) * load_amp
        wind[:, :, n] *= np.clip(wind_profile, 0.0, None)
        load[:, :, n] *= np.clip(load_profile, 0.0, None)
    return ScenarioSet(
        probabilities=np.full(count, 1.0 / count),
        wind=wind,
        load=load,
        farm_ids=base.farm_ids,
        bus_ids=base.bus_ids,
    )


# ---------------------------------------------------------------------------
# scenario files (delimited text: scenario_index, period, entity_kind, entity_id, value_mw)

SCENARIO_COLUMNS = ("scenario_index", "period", "entity_kind", "entity_id", "value_mw")


def load_scenarios(path, inst: UCInstance) -> ScenarioSet:
    """Read a dense scenario table; missing cells and dimension mismatches are errors.

    Wind rows use farm ids; load rows use bus ids.  Every wind farm and every
    bus hosting load must be covered for all (scenario, period) cells.
    """
    path = Path(path)
    farm_ids = tuple(f.id for f in inst.wind_farms)
    load_buses = tuple(b for b in inst.network.buses if inst.loads_at_bus(b))
    T = inst.horizon

    cells: dict[tuple[str, str], dict[tuple[int, int], float]] = {}
    max_n = 0
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != SCENARIO_COLUMNS:
            raise ScenarioError(
                f"{path}: expected header {','.join(SCENARIO_COLUMNS)}, got {reader.fieldnames}"
            )
        for rownum, row in enumerate(reader, start=2):
            try:
                n = int(row["scenario_index"])
                t = int(row["period"])
                kind = row["entity_kind"].strip()
                entity = row["entity_id"].strip()
                value = float(row["value_mw"])
            except (TypeError, ValueError, AttributeError) as exc:
                raise ScenarioError(f"{path}:{rownum}: malformed row: {exc}") from exc
            if kind not in ("wind", "load"):
                raise ScenarioError(f"{path}:{rownum}: unknown entity_kind {kind!r}")
            if kind == "wind" and entity not in farm_ids:
                raise ScenarioError(f"{path}:{rownum}: unknown wind farm {entity!r}")
            if kind == "load" and entity not in inst.network.buses:
                raise ScenarioError(f"{path}:{rownum}: unknown bus {entity!r}")
            if not 1 <= t <= T:
                raise ScenarioError(f"{path}:{rownum}: period {t} outside horizon 1..{T}")
            if n < 1:
                raise ScenarioError(f"{path}:{rownum}: scenario_index must be >= 1")
            if value < 0:
                raise ScenarioError(f"{path}:{rownum}: negative value for {kind} {entity}")
            cells.setdefault((kind, entity), {})[(n, t)] = value
            max_n = max(max_n, n)

    if max_n == 0:
        raise ScenarioError(f"{path}: no scenario rows")

    required = [("wind", f) for f in farm_ids] + [("load", b) for b in load_buses]
    for key in required:
        got = cells.get(key, {})
        for n in range(1, max_n + 1):
            for t in range(1, T + 1):
                if (n, t) not in got:
                    raise ScenarioError(
                        f"{path}: missing cell (scenario {n}, period {t}, {key[0]} {key[1]})"
                    )

    wind = np.zeros((len(farm_ids), T, max_n))
    for qi, fid in enumerate(farm_ids):
        for (n, t), v in cells.get(("wind", fid), {}).items():
            wind[qi, t - 1, n - 1] = v
    load = np.zeros((len(inst.network.buses), T, max_n))
    for bi, bus in enumerate(inst.network.buses):
        for (n, t), v in cells.get(("load", bus), {}).items():
            load[bi, t - 1, n - 1] = v
    return ScenarioSet(
        probabilities=np.full(max_n, 1.0 / max_n),
        wind=wind,
        load=load,
        farm_ids=farm_ids,
        bus_ids=tuple(inst.network.buses),
    )


def save_scenarios(scenarios: ScenarioSet, path) -> None:
    """Write the dense scenario table (wind farms, then load-bearing buses)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCENARIO_COLUMNS)
        for qi, fid in enumerate(scenarios.farm_ids):
            for n in range(scenarios.count):
                for t in range(scenarios.horizon):
                    writer.writerow([n + 1, t + 1, "wind", fid, repr(float(scenarios.wind[qi, t, n]))])
        for bi, bus in enumerate(scenarios.bus_ids):
            if not scenarios.load[bi].any():
                continue
            for n in range(scenarios.count):
                for t in range(scenarios.horizon):
                    writer.writerow([n + 1, t + 1, "load", bus, repr(float(scenarios.load[bi, t, n]))])
