"""Chance-constrained two-stage unit commitment toolkit.

Builds deterministic, stochastic, and chance-constrained commitment models
over a pluggable LP/MIP backend, solves them directly or through bilinear
Benders decomposition, and ships a benchmark harness with an exhaustive
indicator-combination oracle.
"""

from .benders import (
    BendersState,
    ConvergenceError,
    FeasibilityCut,
    FeasibilityResult,
    FirstStagePoint,
    MasterInfeasibleError,
    benders_solve,
    build_fsp,
    build_master,
    first_stage_point,
    make_cut,
    solve_fsp,
    upper_bound_step,
)
from .formulations import (
    FirstStageSolution,
    PiecewiseCost,
    add_second_stage_scenario,
    build_cc_bigm,
    build_cc_bilinear,
    build_first_stage,
    build_suc,
    check_commitment_logic,
    extract_first_stage,
    first_stage_cost,
    piecewise_linearize,
    piecewise_value,
)
from .harness import (
    OracleResult,
    RunReport,
    benchmark,
    enumerate_admissible_z,
    exhaustive_oracle,
    integrality_gap_study,
    run_method,
    sweep,
)
from .instance import (
    FuelCost,
    InstanceError,
    InstanceFormatError,
    Line,
    LoadPoint,
    Network,
    SolveConfig,
    ThermalUnit,
    UCInstance,
    ValidationError,
    WindFarm,
    default_big_m,
    default_reserve_costs,
    load_instance,
    save_instance,
)
from .model_ir import (
    BINARY,
    CONTINUOUS,
    LinearModel,
    ModelError,
    Solution,
    SolverError,
    relax_binaries,
    solve_lp,
    solve_mip,
    write_lp,
)
from .scenarios import (
    MarginalForecast,
    ScenarioError,
    ScenarioSet,
    forecast_from_instance,
    from_forecasts,
    inverse_cdf,
    load_scenarios,
    sample_scenarios,
    save_scenarios,
)

__version__ = "0.1.0"
