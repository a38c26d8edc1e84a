"""Finite-volume central-upwind solver for a two-phase traffic flow model."""

__version__ = "0.1.0"

from .grid import CellField, ExtendedField, Grid
from .model import (
    Membership,
    ModelError,
    ModelParams,
    Phase,
    State,
    classify,
    eigen_congested,
    flux,
    q_free,
    speed,
    state_from_density_speed,
)
from .projection import project, project_field, project_values
from .scenarios import Scenario, ScenarioError, builtin_scenarios, \
    parse_scenario, serialize_scenario
from .stepper import BoundaryCondition, NumericsError, run, ssp_rk3_step

__all__ = [
    "BoundaryCondition", "CellField", "ExtendedField", "Grid", "Membership",
    "ModelError", "ModelParams", "NumericsError", "Phase", "Scenario",
    "ScenarioError", "State", "builtin_scenarios", "classify",
    "eigen_congested", "flux", "parse_scenario", "project", "project_field",
    "project_values", "q_free", "run", "serialize_scenario", "speed",
    "ssp_rk3_step", "state_from_density_speed", "__version__",
]
