"""Model builders: deterministic first stage, per-scenario second stage, the
stochastic extensive form, and both chance-constrained reformulations
(indicator big-M and the McCormick-linearized bilinear form).

Builders are pure functions of (instance, scenarios) and produce models with
deterministic variable/constraint ordering.

Two relaxation modes control what a non-responsive scenario keeps:

* ``full-drop``   -- the scenario's balance *and* line rows are deactivated,
  so setting its indicator removes the scenario entirely.
* ``paper-literal`` -- only the balance rows are deactivated; line limits and
  the dispatch-linking rows stay binding for every scenario.

Initial conditions extend every lookback: a unit that has been in its current
state for H hours enters the horizon with its last transition at period 1-H.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import ThermalUnit, UCInstance, default_big_m
from .model_ir import BINARY, EQ, GE, LE, LinearModel, Solution
from .scenarios import ScenarioSet

BALANCE_STRICT = "strict"
BALANCE_SLACKED = "slacked"
BALANCE_INDICATOR = "indicator"


# ---------------------------------------------------------------------------
# piecewise fuel cost


@dataclass(frozen=True)
class PiecewiseCost:
    """Secant linearization of the fuel cost on [p_min, p_max]."""

    slopes: tuple[float, ...]
    widths: tuple[float, ...]
    base_cost: float  # fuel cost at p_min

    @property
    def segments(self) -> int:
        return len(self.slopes)


def fuel_value(unit: ThermalUnit, p: float) -> float:
    f = unit.fuel_cost
    return f.a + f.b * p + f.c * p * p


def piecewise_linearize(unit: ThermalUnit, segments: int) -> PiecewiseCost:
    """Equal-width secant segments; exact at every breakpoint, convex for c >= 0."""
    if segments < 1:
        raise ValueError(f"segments must be >= 1, got {segments}")
    if unit.fuel_cost.c < 0:
        raise ValueError(f"unit {unit.id}: concave fuel cost (c < 0) cannot be linearized convexly")
    span = unit.p_max - unit.p_min
    if span == 0:
        return PiecewiseCost(slopes=(unit.fuel_cost.b,), widths=(0.0,), base_cost=fuel_value(unit, unit.p_min))
    width = span / segments
    points = [unit.p_min + k * width for k in range(segments + 1)]
    slopes = tuple(
        (fuel_value(unit, points[k + 1]) - fuel_value(unit, points[k])) / width for k in range(segments)
    )
    return PiecewiseCost(slopes=slopes, widths=(width,) * segments, base_cost=fuel_value(unit, unit.p_min))


def piecewise_value(pw: PiecewiseCost, unit: ThermalUnit, p: float, committed: bool = True) -> float:
    """Cost of output p under the linearization (greedy segment fill)."""
    if not committed:
        return 0.0
    rest = p - unit.p_min
    cost = pw.base_cost
    for slope, width in zip(pw.slopes, pw.widths):
        take = min(max(rest, 0.0), width)
        cost += slope * take
        rest -= take
    return cost


def piecewise_for(inst: UCInstance) -> dict[str, PiecewiseCost]:
    return {u.id: piecewise_linearize(u, inst.config.fuel_segments) for u in inst.units}


# ---------------------------------------------------------------------------
# initial-condition history

def _hist_start(unit: ThermalUnit, i: int) -> int:
    """Startup indicator for a pre-horizon period i <= 0."""
    return 1 if unit.initial_on and i == 1 - unit.initial_hours_in_state else 0


def _hist_stop(unit: ThermalUnit, i: int) -> int:
    """Shutdown indicator for a pre-horizon period i <= 0."""
    return 1 if (not unit.initial_on) and i == 1 - unit.initial_hours_in_state else 0


# ---------------------------------------------------------------------------
# per-scenario constants


class _ScenarioTotals:
    """Precomputed per-bus and aggregate wind/load values for one scenario set."""

    def __init__(self, inst: UCInstance, scenarios: ScenarioSet):
        B = len(inst.network.buses)
        T, N = scenarios.horizon, scenarios.count
        self.bus_wind = np.zeros((B, T, N))
        for qi, farm in enumerate(inst.wind_farms):
            bi = inst.bus_index(farm.bus)
            self.bus_wind[bi] += scenarios.wind[qi]
        self.bus_load = np.asarray(scenarios.load)
        self.total_wind = self.bus_wind.sum(axis=0)  # (T, N)
        self.total_load = self.bus_load.sum(axis=0)

    def line_constant(self, inst: UCInstance, line, t: int, n: int) -> float:
        """Fixed injection term of the line-flow expression (wind minus load)."""
        total = 0.0
        for bus, k in line.ptdf_row.items():
            bi = inst.bus_index(bus)
            total += k * (self.bus_wind[bi, t - 1, n] - self.bus_load[bi, t - 1, n])
        return total

    def line_relax_bound(self, inst: UCInstance, line, t: int) -> float:
        """Deactivation constant for a line row: sum of per-bus injection bounds."""
        total = 0.0
        for bus, k in line.ptdf_row.items():
            bi = inst.bus_index(bus)
            bound = sum(u.p_max for u in inst.units_at_bus(bus))
            bound += float(self.bus_wind[bi, t - 1, :].max(initial=0.0))
            bound += float(self.bus_load[bi, t - 1, :].max(initial=0.0))
            total += abs(k) * bound
        return total


# ---------------------------------------------------------------------------
# first stage


def _add_first_stage(model: LinearModel, inst: UCInstance, pw: dict[str, PiecewiseCost]) -> None:
    T = inst.horizon

    for u in inst.units:
        for t in range(1, T + 1):
            model.add_variable(f"on[{u.id},{t}]", 0.0, 1.0, BINARY)
            model.add_variable(f"start[{u.id},{t}]", 0.0, 1.0, BINARY)
            model.add_variable(f"stop[{u.id},{t}]", 0.0, 1.0, BINARY)
            for s in range(1, len(u.startup_segments) + 1):
                model.add_variable(f"stype[{u.id},{s},{t}]", 0.0, 1.0, BINARY)
            model.add_variable(f"p[{u.id},{t}]", 0.0, u.p_max)
            for k, width in enumerate(pw[u.id].widths, start=1):
                model.add_variable(f"pseg[{u.id},{k},{t}]", 0.0, width)
            # reserve capability caps enter as variable bounds
            model.add_variable(f"rup[{u.id},{t}]", 0.0, u.reserve_up_max)
            model.add_variable(f"rdn[{u.id},{t}]", 0.0, u.reserve_dn_max)

    for u in inst.units:
        cost = pw[u.id]
        for t in range(1, T + 1):
            model.add_objective(f"on[{u.id},{t}]", u.no_load_cost + cost.base_cost)
            for s, (_, seg_cost) in enumerate(u.startup_segments, start=1):
                model.add_objective(f"stype[{u.id},{s},{t}]", seg_cost)
            model.add_objective(f"stop[{u.id},{t}]", u.shutdown_cost)
            for k, slope in enumerate(cost.slopes, start=1):
                model.add_objective(f"pseg[{u.id},{k},{t}]", slope)
            model.add_objective(f"rup[{u.id},{t}]", u.reserve_up_cost)
            model.add_objective(f"rdn[{u.id},{t}]", u.reserve_dn_cost)

    for u in inst.units:
        cost = pw[u.id]
        thresholds = [h for h, _ in u.startup_segments]
        n_seg = len(u.startup_segments)
        u0 = 1 if u.initial_on else 0
        p0 = u.initial_output
        for t in range(1, T + 1):
            # output decomposition onto cost segments
            coeffs = {f"p[{u.id},{t}]": 1.0, f"on[{u.id},{t}]": -u.p_min}
            for k in range(1, cost.segments + 1):
                coeffs[f"pseg[{u.id},{k},{t}]"] = -1.0
            model.add_constraint(f"pw_link[{u.id},{t}]", coeffs, EQ, 0.0)

            # startup-type windows: type s allowed only if the last shutdown
            # falls in [threshold_s, threshold_{s+1}) hours before t
            for s in range(1, n_seg):
                lo_h, hi_h = thresholds[s - 1], thresholds[s] - 1
                coeffs = {f"stype[{u.id},{s},{t}]": 1.0}
                rhs = 0.0
                for i in range(lo_h, hi_h + 1):
                    ti = t - i
                    if ti >= 1:
                        coeffs[f"stop[{u.id},{ti}]"] = coeffs.get(f"stop[{u.id},{ti}]", 0.0) - 1.0
                    else:
                        rhs += _hist_stop(u, ti)
                model.add_constraint(f"stype_window[{u.id},{s},{t}]", coeffs, LE, rhs)

            # exactly one startup type per startup
            coeffs = {f"stype[{u.id},{s},{t}]": 1.0 for s in range(1, n_seg + 1)}
            coeffs[f"start[{u.id},{t}]"] = -1.0
            model.add_constraint(f"stype_pick[{u.id},{t}]", coeffs, EQ, 0.0)

            # min up: any startup in the trailing window keeps the unit on
            coeffs = {}
            rhs = 0.0
            for i in range(t - u.min_up + 1, t + 1):
                if i >= 1:
                    coeffs[f"start[{u.id},{i}]"] = 1.0
                else:
                    rhs -= _hist_start(u, i)
            coeffs[f"on[{u.id},{t}]"] = -1.0
            model.add_constraint(f"min_up[{u.id},{t}]", coeffs, LE, rhs)

            # min down: any shutdown in the trailing window keeps the unit off
            coeffs = {}
            rhs = 1.0
            for i in range(t - u.min_down + 1, t + 1):
                if i >= 1:
                    coeffs[f"stop[{u.id},{i}]"] = 1.0
                else:
                    rhs -= _hist_stop(u, i)
            coeffs[f"on[{u.id},{t}]"] = 1.0
            model.add_constraint(f"min_down[{u.id},{t}]", coeffs, LE, rhs)

            # commitment state transition
            coeffs = {f"on[{u.id},{t}]": 1.0, f"start[{u.id},{t}]": -1.0, f"stop[{u.id},{t}]": 1.0}
            if t >= 2:
                coeffs[f"on[{u.id},{t - 1}]"] = -1.0
                model.add_constraint(f"logic[{u.id},{t}]", coeffs, EQ, 0.0)
            else:
                model.add_constraint(f"logic[{u.id},{t}]", coeffs, EQ, float(u0))

            # ramp up with reserve headroom
            coeffs = {f"p[{u.id},{t}]": 1.0, f"rup[{u.id},{t}]": 1.0, f"start[{u.id},{t}]": -u.startup_cap}
            if t >= 2:
                coeffs[f"p[{u.id},{t - 1}]"] = -1.0
                coeffs[f"on[{u.id},{t - 1}]"] = -u.ramp_up
                model.add_constraint(f"ramp_up[{u.id},{t}]", coeffs, LE, 0.0)
            else:
                model.add_constraint(f"ramp_up[{u.id},{t}]", coeffs, LE, p0 + u.ramp_up * u0)

            # ramp down with reserve headroom
            coeffs = {
                f"p[{u.id},{t}]": -1.0,
                f"rdn[{u.id},{t}]": 1.0,
                f"on[{u.id},{t}]": -u.ramp_down,
                f"stop[{u.id},{t}]": -u.shutdown_cap,
            }
            if t >= 2:
                coeffs[f"p[{u.id},{t - 1}]"] = 1.0
                model.add_constraint(f"ramp_dn[{u.id},{t}]", coeffs, LE, 0.0)
            else:
                model.add_constraint(f"ramp_dn[{u.id},{t}]", coeffs, LE, -p0)

            # capacity with reserves
            model.add_constraint(
                f"cap_hi[{u.id},{t}]",
                {f"p[{u.id},{t}]": 1.0, f"rup[{u.id},{t}]": 1.0, f"on[{u.id},{t}]": -u.p_max},
                LE,
                0.0,
            )
            model.add_constraint(
                f"cap_lo[{u.id},{t}]",
                {f"p[{u.id},{t}]": 1.0, f"rdn[{u.id},{t}]": -1.0, f"on[{u.id},{t}]": -u.p_min},
                GE,
                0.0,
            )

    # forecast power balance
    for t in range(1, T + 1):
        coeffs = {f"p[{u.id},{t}]": 1.0 for u in inst.units}
        rhs = inst.total_load_forecast(t) - inst.total_wind_forecast(t)
        model.add_constraint(f"balance[{t}]", coeffs, EQ, rhs)

    # line flows under the shift-factor approximation
    for line in inst.network.lines:
        for t in range(1, T + 1):
            coeffs = {}
            const = 0.0
            for bus, k in line.ptdf_row.items():
                if k == 0.0:
                    continue
                for u in inst.units_at_bus(bus):
                    coeffs[f"p[{u.id},{t}]"] = coeffs.get(f"p[{u.id},{t}]", 0.0) + k
                const += k * (inst.bus_wind_forecast(bus, t) - inst.bus_load_forecast(bus, t))
            model.add_constraint(f"line_hi[{line.id},{t}]", dict(coeffs), LE, line.capacity - const)
            model.add_constraint(f"line_lo[{line.id},{t}]", dict(coeffs), GE, -line.capacity - const)


def build_first_stage(inst: UCInstance) -> LinearModel:
    """Day-ahead commitment/dispatch model under the point forecasts."""
    model = LinearModel(name=f"{inst.name}:det")
    _add_first_stage(model, inst, piecewise_for(inst))
    return model


# ---------------------------------------------------------------------------
# second-stage blocks


def _add_scenario_block(
    model: LinearModel,
    inst: UCInstance,
    scenarios: ScenarioSet,
    totals: _ScenarioTotals,
    n: int,
    balance: str,
    *,
    line_skip_var: str | None = None,
    line_slack: bool = False,
    skip_var: str | None = None,
) -> None:
    """Append redispatch variables and rows for scenario n (0-based).

    ``balance`` picks the balance treatment: strict equality, slack variables,
    or "indicator" (handled by the caller through big-M / product rows).
    ``line_skip_var`` deactivates line rows via the scenario indicator;
    ``line_slack`` relaxes them with overflow slacks instead.
    """
    T = inst.horizon

    for u in inst.units:
        for t in range(1, T + 1):
            model.add_variable(f"sp[{u.id},{t},{n}]", 0.0, u.p_max)
            model.add_variable(f"dup[{u.id},{t},{n}]", 0.0, u.reserve_up_max)
            model.add_variable(f"ddn[{u.id},{t},{n}]", 0.0, u.reserve_dn_max)

    for u in inst.units:
        u0 = 1 if u.initial_on else 0
        p0 = u.initial_output
        for t in range(1, T + 1):
            # redispatch = schedule plus deployed reserves
            model.add_constraint(
                f"s_link[{u.id},{t},{n}]",
                {
                    f"sp[{u.id},{t},{n}]": 1.0,
                    f"p[{u.id},{t}]": -1.0,
                    f"dup[{u.id},{t},{n}]": -1.0,
                    f"ddn[{u.id},{t},{n}]": 1.0,
                },
                EQ,
                0.0,
            )
            # deployment cannot exceed the scheduled reserve
            model.add_constraint(
                f"s_dup_cap[{u.id},{t},{n}]",
                {f"dup[{u.id},{t},{n}]": 1.0, f"rup[{u.id},{t}]": -1.0},
                LE,
                0.0,
            )
            model.add_constraint(
                f"s_ddn_cap[{u.id},{t},{n}]",
                {f"ddn[{u.id},{t},{n}]": 1.0, f"rdn[{u.id},{t}]": -1.0},
                LE,
                0.0,
            )
            # scenario ramps against the committed trajectory
            coeffs = {f"sp[{u.id},{t},{n}]": 1.0, f"start[{u.id},{t}]": -u.startup_cap}
            if t >= 2:
                coeffs[f"sp[{u.id},{t - 1},{n}]"] = -1.0
                coeffs[f"on[{u.id},{t - 1}]"] = -u.ramp_up
                model.add_constraint(f"s_ramp_up[{u.id},{t},{n}]", coeffs, LE, 0.0)
            else:
                model.add_constraint(f"s_ramp_up[{u.id},{t},{n}]", coeffs, LE, p0 + u.ramp_up * u0)
            coeffs = {
                f"sp[{u.id},{t},{n}]": -1.0,
                f"on[{u.id},{t}]": -u.ramp_down,
                f"stop[{u.id},{t}]": -u.shutdown_cap,
            }
            if t >= 2:
                coeffs[f"sp[{u.id},{t - 1},{n}]"] = 1.0
                model.add_constraint(f"s_ramp_dn[{u.id},{t},{n}]", coeffs, LE, 0.0)
            else:
                model.add_constraint(f"s_ramp_dn[{u.id},{t},{n}]", coeffs, LE, -p0)
            # capacity under commitment
            model.add_constraint(
                f"s_cap_hi[{u.id},{t},{n}]",
                {f"sp[{u.id},{t},{n}]": 1.0, f"on[{u.id},{t}]": -u.p_max},
                LE,
                0.0,
            )
            model.add_constraint(
                f"s_cap_lo[{u.id},{t},{n}]",
                {f"sp[{u.id},{t},{n}]": 1.0, f"on[{u.id},{t}]": -u.p_min},
                GE,
                0.0,
            )

    # line limits under the scenario injections
    for line in inst.network.lines:
        for t in range(1, T + 1):
            coeffs = {}
            for bus, k in line.ptdf_row.items():
                if k == 0.0:
                    continue
                for u in inst.units_at_bus(bus):
                    coeffs[f"sp[{u.id},{t},{n}]"] = coeffs.get(f"sp[{u.id},{t},{n}]", 0.0) + k
            const = totals.line_constant(inst, line, t, n)
            hi = dict(coeffs)
            lo = dict(coeffs)
            if line_skip_var is not None:
                m_line = totals.line_relax_bound(inst, line, t)
                hi[line_skip_var] = -m_line
                lo[line_skip_var] = m_line
            if line_slack:
                slack = f"overflow[{line.id},{t},{n}]"
                if not model.has_variable(slack):
                    model.add_variable(slack, 0.0)
                hi[slack] = -1.0
                lo[slack] = 1.0
            model.add_constraint(f"s_line_hi[{line.id},{t},{n}]", hi, LE, line.capacity - const)
            model.add_constraint(f"s_line_lo[{line.id},{t},{n}]", lo, GE, -line.capacity - const)

    # balance treatment
    for t in range(1, T + 1):
        net = float(totals.total_load[t - 1, n] - totals.total_wind[t - 1, n])
        gen = {f"sp[{u.id},{t},{n}]": 1.0 for u in inst.units}
        if balance == BALANCE_STRICT:
            model.add_constraint(f"s_balance[{t},{n}]", gen, EQ, net)
        elif balance == BALANCE_SLACKED:
            surplus = f"surplus[{t},{n}]"
            deficit = f"deficit[{t},{n}]"
            model.add_variable(surplus, 0.0)
            model.add_variable(deficit, 0.0)
            coeffs = dict(gen)
            coeffs[surplus] = -1.0
            coeffs[deficit] = 1.0
            model.add_constraint(f"s_balance[{t},{n}]", coeffs, EQ, net)
        elif balance == "bilinear":
            assert skip_var is not None
            coeffs = dict(gen)
            for u in inst.units:
                prod = f"sp_skip[{u.id},{t},{n}]"
                model.add_variable(prod, 0.0, u.p_max)
                coeffs[prod] = -1.0
                # exact envelope of the product of scenario output and the indicator
                model.add_constraint(
                    f"mc_cap[{u.id},{t},{n}]", {prod: 1.0, skip_var: -u.p_max}, LE, 0.0
                )
                model.add_constraint(
                    f"mc_le[{u.id},{t},{n}]", {prod: 1.0, f"sp[{u.id},{t},{n}]": -1.0}, LE, 0.0
                )
                model.add_constraint(
                    f"mc_ge[{u.id},{t},{n}]",
                    {prod: 1.0, f"sp[{u.id},{t},{n}]": -1.0, skip_var: -u.p_max},
                    GE,
                    -u.p_max,
                )
            wl = float(totals.total_wind[t - 1, n] - totals.total_load[t - 1, n])
            coeffs[skip_var] = coeffs.get(skip_var, 0.0) - wl
            model.add_constraint(f"s_bal_prod[{t},{n}]", coeffs, EQ, -wl)
        elif balance == "none":
            pass
        else:
            raise ValueError(f"unknown balance treatment {balance!r}")


def add_second_stage_scenario(
    model: LinearModel,
    inst: UCInstance,
    scenarios: ScenarioSet,
    n: int,
    mode: str = BALANCE_STRICT,
) -> LinearModel:
    """Extend a model containing the first stage with scenario n's block.

    ``mode`` is strict (equality balance), slacked (balance slack variables,
    used by feasibility checks), or indicator (balance left to the
    chance-constraint builders).
    """
    if not 0 <= n < scenarios.count:
        raise IndexError(f"scenario index {n} outside 0..{scenarios.count - 1}")
    totals = _ScenarioTotals(inst, scenarios)
    balance = {BALANCE_STRICT: BALANCE_STRICT, BALANCE_SLACKED: BALANCE_SLACKED, BALANCE_INDICATOR: "none"}[mode]
    _add_scenario_block(model, inst, scenarios, totals, n, balance)
    return model


# ---------------------------------------------------------------------------
# extensive forms


def build_suc(inst: UCInstance, scenarios: ScenarioSet, include=None) -> LinearModel:
    """Stochastic extensive form: every included scenario must be met exactly."""
    model = LinearModel(name=f"{inst.name}:suc")
    pw = piecewise_for(inst)
    _add_first_stage(model, inst, pw)
    totals = _ScenarioTotals(inst, scenarios)
    indices = range(scenarios.count) if include is None else include
    for n in indices:
        _add_scenario_block(model, inst, scenarios, totals, n, BALANCE_STRICT)
    return model


def _add_budget(model: LinearModel, scenarios: ScenarioSet, epsilon: float) -> None:
    coeffs = {f"skip[{n}]": float(scenarios.probabilities[n]) for n in range(scenarios.count)}
    model.add_constraint("skip_budget", coeffs, LE, epsilon)


def build_cc_bigm(
    inst: UCInstance,
    scenarios: ScenarioSet,
    *,
    epsilon: float | None = None,
    mode: str | None = None,
) -> LinearModel:
    """Chance-constrained extensive form with big-M indicator rows."""
    epsilon = inst.risk_level if epsilon is None else epsilon
    mode = inst.config.relaxation_mode if mode is None else mode
    model = LinearModel(name=f"{inst.name}:cc-bigm")
    pw = piecewise_for(inst)
    _add_first_stage(model, inst, pw)
    totals = _ScenarioTotals(inst, scenarios)
    for n in range(scenarios.count):
        model.add_variable(f"skip[{n}]", 0.0, 1.0, BINARY)
    for n in range(scenarios.count):
        skip = f"skip[{n}]"
        line_skip = skip if mode == "full-drop" else None
        _add_scenario_block(model, inst, scenarios, totals, n, "none", line_skip_var=line_skip)
        for t in range(1, inst.horizon + 1):
            m_t = default_big_m(inst, t, scenarios)
            net = float(totals.total_load[t - 1, n] - totals.total_wind[t - 1, n])
            gen = {f"sp[{u.id},{t},{n}]": 1.0 for u in inst.units}
            hi = dict(gen)
            hi[skip] = -m_t
            model.add_constraint(f"s_bal_hi[{t},{n}]", hi, LE, net)
            lo = dict(gen)
            lo[skip] = m_t
            model.add_constraint(f"s_bal_lo[{t},{n}]", lo, GE, net)
    _add_budget(model, scenarios, epsilon)
    return model


def build_cc_bilinear(
    inst: UCInstance,
    scenarios: ScenarioSet,
    *,
    epsilon: float | None = None,
    mode: str | None = None,
) -> LinearModel:
    """Chance-constrained extensive form with McCormick-linearized product rows."""
    epsilon = inst.risk_level if epsilon is None else epsilon
    mode = inst.config.relaxation_mode if mode is None else mode
    model = LinearModel(name=f"{inst.name}:cc-bilinear")
    pw = piecewise_for(inst)
    _add_first_stage(model, inst, pw)
    totals = _ScenarioTotals(inst, scenarios)
    for n in range(scenarios.count):
        model.add_variable(f"skip[{n}]", 0.0, 1.0, BINARY)
    for n in range(scenarios.count):
        skip = f"skip[{n}]"
        line_skip = skip if mode == "full-drop" else None
        _add_scenario_block(
            model,
            inst,
            scenarios,
            totals,
            n,
            "bilinear",
            skip_var=skip,
            line_skip_var=line_skip,
        )
    _add_budget(model, scenarios, epsilon)
    return model


# ---------------------------------------------------------------------------
# first-stage solution record


@dataclass
class FirstStageSolution:
    u: np.ndarray  # (G, T) 0/1
    v: np.ndarray
    y: np.ndarray
    delta: tuple[np.ndarray, ...]  # per unit: (S_g, T) 0/1
    p: np.ndarray  # (G, T) MW
    r_up: np.ndarray
    r_dn: np.ndarray
    z: np.ndarray | None  # (N,) 0/1 when the model carried indicators
    objective: float


def extract_first_stage(inst: UCInstance, solution: Solution, n_scenarios: int = 0) -> FirstStageSolution:
    T = inst.horizon
    G = len(inst.units)

    def binary(name: str) -> int:
        return 1 if solution.values[name] > 0.5 else 0

    u = np.zeros((G, T), dtype=np.int8)
    v = np.zeros((G, T), dtype=np.int8)
    y = np.zeros((G, T), dtype=np.int8)
    p = np.zeros((G, T))
    r_up = np.zeros((G, T))
    r_dn = np.zeros((G, T))
    delta = []
    for gi, unit in enumerate(inst.units):
        d = np.zeros((len(unit.startup_segments), T), dtype=np.int8)
        for t in range(1, T + 1):
            u[gi, t - 1] = binary(f"on[{unit.id},{t}]")
            v[gi, t - 1] = binary(f"start[{unit.id},{t}]")
            y[gi, t - 1] = binary(f"stop[{unit.id},{t}]")
            p[gi, t - 1] = solution.values[f"p[{unit.id},{t}]"]
            r_up[gi, t - 1] = solution.values[f"rup[{unit.id},{t}]"]
            r_dn[gi, t - 1] = solution.values[f"rdn[{unit.id},{t}]"]
            for s in range(1, len(unit.startup_segments) + 1):
                d[s - 1, t - 1] = binary(f"stype[{unit.id},{s},{t}]")
        delta.append(d)
    z = None
    if n_scenarios and solution.values and "skip[0]" in solution.values:
        z = np.array([1 if solution.values[f"skip[{n}]"] > 0.5 else 0 for n in range(n_scenarios)], dtype=np.int8)
    return FirstStageSolution(
        u=u, v=v, y=y, delta=tuple(delta), p=p, r_up=r_up, r_dn=r_dn, z=z,
        objective=solution.objective if solution.objective is not None else float("nan"),
    )


def first_stage_cost(inst: UCInstance, fss: FirstStageSolution, pw: dict[str, PiecewiseCost] | None = None) -> float:
    """Re-evaluate the day-ahead cost of a first-stage schedule."""
    pw = pw or piecewise_for(inst)
    total = 0.0
    for gi, unit in enumerate(inst.units):
        cost = pw[unit.id]
        for ti in range(inst.horizon):
            if fss.u[gi, ti]:
                total += unit.no_load_cost + piecewise_value(cost, unit, float(fss.p[gi, ti]))
            total += unit.shutdown_cost * float(fss.y[gi, ti])
            for s, (_, seg_cost) in enumerate(unit.startup_segments):
                total += seg_cost * float(fss.delta[gi][s, ti])
            total += unit.reserve_up_cost * float(fss.r_up[gi, ti])
            total += unit.reserve_dn_cost * float(fss.r_dn[gi, ti])
    return total


def check_commitment_logic(inst: UCInstance, fss: FirstStageSolution, tol: float = 1e-6) -> list[str]:
    """Scan a schedule for logic violations (transition chain, min up/down,
    startup typing, output bounds).  Returns human-readable findings."""
    problems = []
    T = inst.horizon
    for gi, unit in enumerate(inst.units):
        u_prev = 1 if unit.initial_on else 0
        for ti in range(T):
            lhs = fss.u[gi, ti] - u_prev
            rhs = fss.v[gi, ti] - fss.y[gi, ti]
            if lhs != rhs:
                problems.append(f"unit {unit.id}, t={ti + 1}: transition chain broken ({lhs} != {rhs})")
            if fss.v[gi, ti] and fss.y[gi, ti]:
                problems.append(f"unit {unit.id}, t={ti + 1}: simultaneous startup and shutdown")
            u_prev = fss.u[gi, ti]

        # minimum up time, including served history
        if unit.initial_on and unit.initial_hours_in_state < unit.min_up:
            owed = unit.min_up - unit.initial_hours_in_state
            if any(fss.u[gi, ti] == 0 for ti in range(min(owed, T))):
                problems.append(f"unit {unit.id}: initial minimum up time not served")
        if (not unit.initial_on) and unit.initial_hours_in_state < unit.min_down:
            owed = unit.min_down - unit.initial_hours_in_state
            if any(fss.u[gi, ti] == 1 for ti in range(min(owed, T))):
                problems.append(f"unit {unit.id}: initial minimum down time not served")
        for ti in range(T):
            if fss.v[gi, ti]:
                for j in range(ti, min(T, ti + unit.min_up)):
                    if fss.u[gi, j] == 0:
                        problems.append(f"unit {unit.id}: min up violated after startup at t={ti + 1}")
                        break
            if fss.y[gi, ti]:
                for j in range(ti, min(T, ti + unit.min_down)):
                    if fss.u[gi, j] == 1:
                        problems.append(f"unit {unit.id}: min down violated after shutdown at t={ti + 1}")
                        break

        # startup typing: one type per startup, within its offline window
        thresholds = [h for h, _ in unit.startup_segments]
        for ti in range(T):
            picked = int(fss.delta[gi][:, ti].sum())
            if picked != fss.v[gi, ti]:
                problems.append(f"unit {unit.id}, t={ti + 1}: startup types picked {picked} != startup {fss.v[gi, ti]}")
            if fss.v[gi, ti]:
                # offline duration before this startup
                off = None
                for back in range(1, ti + 1):
                    if fss.y[gi, ti - back]:
                        off = back
                        break
                if off is None and not any(fss.u[gi, :ti]) and not unit.initial_on:
                    off = ti + unit.initial_hours_in_state
                picked_types = np.nonzero(fss.delta[gi][:, ti])[0]
                if off is not None and len(picked_types) == 1:
                    s_idx = int(picked_types[0])
                    lo = thresholds[s_idx]
                    hi = thresholds[s_idx + 1] - 1 if s_idx + 1 < len(thresholds) else None
                    if off < lo or (hi is not None and off > hi):
                        problems.append(
                            f"unit {unit.id}, t={ti + 1}: startup type {s_idx + 1} outside its offline window"
                        )

        for ti in range(T):
            p_val = fss.p[gi, ti]
            if fss.u[gi, ti]:
                if p_val < unit.p_min - tol or p_val > unit.p_max + tol:
                    problems.append(f"unit {unit.id}, t={ti + 1}: output {p_val} outside [p_min, p_max]")
            elif abs(p_val) > tol:
                problems.append(f"unit {unit.id}, t={ti + 1}: output {p_val} while offline")
    return problems
