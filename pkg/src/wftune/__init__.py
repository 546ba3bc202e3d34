"""Five-phase induction motor drive under predictive current control with
closed-loop tuning of the cost-function weighting factors."""

from .config import Config, ConfigError, load_config
from .cost import SelectionResult, WeightVector, cost, select
from .harness import RunLog, Scenario, SimulationFault, pareto_sweep, reversal_test, run, step_wf_test
from .machine import MachineParams, PlantState, clarke_5, park, plant_derivative, plant_step

__version__ = "0.1.0"

__all__ = [
    "Config", "ConfigError", "load_config",
    "SelectionResult", "WeightVector", "cost", "select",
    "RunLog", "Scenario", "SimulationFault", "pareto_sweep", "reversal_test", "run", "step_wf_test",
    "MachineParams", "PlantState", "clarke_5", "park", "plant_derivative", "plant_step",
]
