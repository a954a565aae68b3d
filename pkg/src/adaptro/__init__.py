"""Two-stage adaptive robust linear optimization with feasibility-safe decomposition."""

from .adversary import AdversaryOutcome, default_bigM, solve_alpha_oracle, solve_tildeZ
from .am import f1_oracle, run_am
from .bench import gen_capacity_linked, gen_location_transportation, gen_lotsizing
from .config import DEFAULT_TOL, Tolerances
from .dbc import PartitionTree, dbc_solve, f2_oracle
from .drivers import ccg, ddbd
from .master import MasterInfeasible, eval_underZ, solve_master
from .model import (
    FirstStageSet,
    ScenarioSet,
    TwoStageInstance,
    UncertaintyPolytope,
    second_stage_value,
    tiny1,
    tiny2,
    validate_instance,
)
from .reference import enumerate_vertices, exact_solve, exact_worst_case
from .report import RunReport, Termination, ul_gap
from .serialize import load_instance, save_instance

__all__ = [
    "AdversaryOutcome", "default_bigM", "solve_alpha_oracle", "solve_tildeZ",
    "f1_oracle", "run_am",
    "gen_capacity_linked", "gen_location_transportation", "gen_lotsizing",
    "DEFAULT_TOL", "Tolerances",
    "PartitionTree", "dbc_solve", "f2_oracle",
    "ccg", "ddbd",
    "MasterInfeasible", "eval_underZ", "solve_master",
    "FirstStageSet", "ScenarioSet", "TwoStageInstance", "UncertaintyPolytope",
    "second_stage_value", "tiny1", "tiny2", "validate_instance",
    "enumerate_vertices", "exact_solve", "exact_worst_case",
    "RunReport", "Termination", "ul_gap",
    "load_instance", "save_instance",
]
