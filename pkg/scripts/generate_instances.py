#!/usr/bin/env python3
"""Regenerate the bundled desk-scale instances and scenario files.

Everything here is deterministic: shift factors come from the reactance
table below (slack at the first bus), scenario files from fixed hourly
multipliers.  Run with --check to also solve the deterministic and
stochastic models and confirm the data are self-consistent.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "instances"


def ptdf_table(buses: list[str], branches: list[tuple[str, str, str, float]], slack: str):
    """Shift factors for a DC network: branches are (id, from, to, reactance)."""
    n = len(buses)
    idx = {b: i for i, b in enumerate(buses)}
    b_diag = np.zeros((len(branches), len(branches)))
    incidence = np.zeros((len(branches), n))
    for li, (_, f, t, x) in enumerate(branches):
        b_diag[li, li] = 1.0 / x
        incidence[li, idx[f]] = 1.0
        incidence[li, idx[t]] = -1.0
    b_bus = incidence.T @ b_diag @ incidence
    keep = [i for i in range(n) if i != idx[slack]]
    b_red = b_bus[np.ix_(keep, keep)]
    flows = b_diag @ incidence[:, keep]
    shift = flows @ np.linalg.inv(b_red)
    table = {}
    for li, (line_id, _, _, _) in enumerate(branches):
        row = {}
        for j, bi in enumerate(keep):
            value = float(shift[li, j])
            if abs(value) > 1e-12:
                row[buses[bi]] = round(value, 6)
        row[slack] = 0.0
        table[line_id] = row
    return table


def unit(uid, bus, p_min, p_max, ru, rd, su, sd, up, dn, nl, csd, a, b, c,
         segs, rmax_up, rmax_dn, on0, h0, p0):
    return {
        "id": uid, "bus": bus, "p_min": p_min, "p_max": p_max,
        "ramp_up": ru, "ramp_down": rd, "startup_cap": su, "shutdown_cap": sd,
        "min_up": up, "min_down": dn, "no_load_cost": nl, "shutdown_cost": csd,
        "fuel_cost": {"a": a, "b": b, "c": c},
        "startup_segments": segs,
        "reserve_up_max": rmax_up, "reserve_dn_max": rmax_dn,
        "initial_on": on0, "initial_hours_in_state": h0, "initial_output": p0,
    }


def micro1() -> dict:
    return {
        "horizon": 4,
        "risk_level": 0.25,
        "network": {"buses": ["b1"], "lines": []},
        "units": [
            unit("G1", "b1", 20.0, 100.0, 100.0, 100.0, 100.0, 100.0, 1, 1,
                 10.0, 0.0, 0.0, 20.0, 0.0, [[1, 50.0]], 30.0, 30.0, True, 8, 60.0),
        ],
        "wind": [],
        "loads": [{"id": "D1", "bus": "b1", "forecast": [60.0, 80.0, 100.0, 70.0]}],
        "config": {"rng_seed": 7},
    }


def micro1_scenarios() -> list[list]:
    profiles = {
        1: [60.0, 80.0, 100.0, 70.0],   # the point forecast itself
        2: [70.0, 90.0, 95.0, 80.0],
        3: [50.0, 70.0, 90.0, 60.0],
        4: [65.0, 85.0, 100.0, 75.0],
    }
    rows = []
    for n, values in profiles.items():
        for t, v in enumerate(values, start=1):
            rows.append([n, t, "load", "b1", v])
    return rows


def micro2() -> dict:
    buses = ["b1", "b2"]
    branches = [("L1", "b1", "b2", 0.1)]
    table = ptdf_table(buses, branches, slack="b1")
    return {
        "horizon": 4,
        "risk_level": 0.2,
        "network": {
            "buses": buses,
            "lines": [{"id": "L1", "capacity": 40.0, "ptdf_row": table["L1"]}],
        },
        "units": [
            unit("G1", "b1", 30.0, 150.0, 80.0, 80.0, 90.0, 90.0, 2, 2,
                 60.0, 5.0, 40.0, 18.0, 0.004, [[2, 120.0], [5, 260.0]], 35.0, 35.0, True, 6, 90.0),
            unit("G2", "b2", 10.0, 40.0, 40.0, 40.0, 40.0, 40.0, 1, 1,
                 15.0, 2.0, 10.0, 28.0, 0.01, [[1, 40.0]], 20.0, 20.0, False, 4, 0.0),
        ],
        "wind": [{"id": "W1", "bus": "b2", "forecast": [10.0, 15.0, 20.0, 10.0]}],
        "loads": [{"id": "D1", "bus": "b1", "forecast": [90.0, 110.0, 130.0, 100.0]}],
        "config": {"rng_seed": 11},
    }


def micro2_scenarios() -> list[list]:
    wind_fc = [10.0, 15.0, 20.0, 10.0]
    load_fc = [90.0, 110.0, 130.0, 100.0]
    cases = {
        1: (1.0, 1.0),    # point forecast
        2: (0.0, 1.12),   # calm and heavy: the expensive outlier
        3: (0.7, 1.05),
        4: (1.2, 0.93),
        5: (0.9, 1.02),
    }
    rows = []
    for n, (wf, lf) in cases.items():
        for t in range(1, 5):
            rows.append([n, t, "wind", "W1", round(wind_fc[t - 1] * wf, 3)])
        for t in range(1, 5):
            rows.append([n, t, "load", "b1", round(load_fc[t - 1] * lf, 3)])
    return rows


SIX_TOTAL_LOAD = [
    240, 230, 225, 220, 225, 240, 265, 290, 310, 325, 335, 340,
    338, 332, 325, 320, 322, 330, 345, 350, 340, 315, 285, 255,
]
SIX_WIND = [
    85, 88, 90, 87, 82, 75, 65, 55, 48, 45, 42, 40,
    42, 45, 50, 55, 60, 66, 72, 78, 82, 85, 87, 86,
]
SIX_LOAD_SHARES = {"D1": ("b3", 0.2), "D2": ("b4", 0.4), "D3": ("b5", 0.4)}


def six_shape() -> dict:
    buses = ["b1", "b2", "b3", "b4", "b5", "b6"]
    branches = [
        ("L1", "b1", "b2", 0.20),
        ("L2", "b1", "b4", 0.25),
        ("L3", "b2", "b3", 0.10),
        ("L4", "b2", "b4", 0.20),
        ("L5", "b3", "b6", 0.08),
        ("L6", "b4", "b5", 0.10),
        ("L7", "b5", "b6", 0.15),
    ]
    capacities = {"L1": 170.0, "L2": 130.0, "L3": 130.0, "L4": 120.0, "L5": 130.0, "L6": 120.0, "L7": 120.0}
    table = ptdf_table(buses, branches, slack="b1")
    loads = [
        {"id": did, "bus": bus, "forecast": [round(total * share, 3) for total in SIX_TOTAL_LOAD]}
        for did, (bus, share) in SIX_LOAD_SHARES.items()
    ]
    return {
        "horizon": 24,
        "risk_level": 0.2,
        "network": {
            "buses": buses,
            "lines": [
                {"id": lid, "capacity": capacities[lid], "ptdf_row": table[lid]}
                for lid, *_ in branches
            ],
        },
        "units": [
            unit("G1", "b1", 90.0, 250.0, 60.0, 60.0, 120.0, 120.0, 4, 4,
                 200.0, 50.0, 150.0, 17.0, 0.012, [[4, 500.0], [8, 1100.0]], 40.0, 40.0, True, 10, 180.0),
            unit("G2", "b2", 40.0, 120.0, 50.0, 50.0, 60.0, 60.0, 3, 2,
                 120.0, 25.0, 80.0, 24.0, 0.02, [[2, 250.0], [6, 520.0]], 35.0, 35.0, False, 6, 0.0),
            unit("G3", "b6", 10.0, 60.0, 60.0, 60.0, 60.0, 60.0, 1, 1,
                 40.0, 10.0, 30.0, 32.0, 0.03, [[1, 90.0], [4, 180.0]], 25.0, 25.0, False, 12, 0.0),
        ],
        "wind": [{"id": "W1", "bus": "b4", "forecast": [float(v) for v in SIX_WIND]}],
        "loads": loads,
        "config": {"rng_seed": 23},
    }


def six_scenarios() -> list[list]:
    """Five realizations: the forecast, one expensive outlier (calm and
    heavy, ramping in over the first six hours so the initial state can
    follow), and three mild variations whose deviations live in a few-hour
    window each (an afternoon lull, a night surge, an evening spike)."""

    def ramp(t: int) -> float:
        return min(1.0, t / 6.0)

    def window(t: int, lo: int, hi: int, factor: float) -> float:
        return factor if lo <= t <= hi else 1.0

    cases = {
        1: lambda t: (1.0, 1.0),
        2: lambda t: (1.0 - 0.50 * ramp(t), 1.0 + 0.09 * ramp(t)),
        3: lambda t: (window(t, 10, 14, 0.72), window(t, 10, 15, 1.02)),
        4: lambda t: (window(t, 2, 6, 1.25), window(t, 1, 6, 0.98)),
        5: lambda t: (window(t, 18, 21, 0.90), window(t, 18, 21, 1.04)),
    }
    rows = []
    for n, factors in cases.items():
        for t in range(1, 25):
            wf, lf = factors(t)
            rows.append([n, t, "wind", "W1", round(SIX_WIND[t - 1] * wf, 3)])
        for did, (bus, share) in SIX_LOAD_SHARES.items():
            for t in range(1, 25):
                wf, lf = factors(t)
                rows.append([n, t, "load", bus, round(SIX_TOTAL_LOAD[t - 1] * share * lf, 3)])
    return rows


def write_json(doc: dict, path: Path) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {path}")


def write_csv(rows: list[list], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario_index", "period", "entity_kind", "entity_id", "value_mw"])
        writer.writerows(rows)
    print(f"wrote {path}")


def check() -> int:
    sys.path.insert(0, str(ROOT / "src"))
    from ccuc.formulations import build_first_stage, build_suc
    from ccuc.instance import load_instance
    from ccuc.model_ir import solve_mip
    from ccuc.scenarios import load_scenarios

    failures = 0
    for name in ("micro1", "micro2", "six_shape"):
        inst = load_instance(OUT / f"{name}.json")
        scen = load_scenarios(OUT / f"{name}_scenarios.csv", inst)
        det = solve_mip(build_first_stage(inst), gap=1e-6)
        suc = solve_mip(build_suc(inst, scen), gap=1e-6)
        ok = det.status == "optimal" and suc.status == "optimal"
        print(f"{name}: det={det.status} ({det.objective and round(det.objective, 2)}), "
              f"suc={suc.status} ({suc.objective and round(suc.objective, 2)})")
        if not ok:
            failures += 1
        elif suc.objective < det.objective - 1e-6:
            print(f"  WARNING: stochastic objective below deterministic")
            failures += 1
    return failures


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--check", action="store_true", help="solve the generated instances")
    args = parser.parse_args()

    OUT.mkdir(exist_ok=True)
    write_json(micro1(), OUT / "micro1.json")
    write_csv(micro1_scenarios(), OUT / "micro1_scenarios.csv")
    write_json(micro2(), OUT / "micro2.json")
    write_csv(micro2_scenarios(), OUT / "micro2_scenarios.csv")
    write_json(six_shape(), OUT / "six_shape.json")
    write_csv(six_scenarios(), OUT / "six_shape_scenarios.csv")
    if args.check:
        return check()
    return 0


if __name__ == "__main__":
    sys.exit(main())
