"""Joint beamforming and deployment design for an ISAC-enabled high-altitude platform."""

__version__ = "0.1.0"

from .scenario import Scenario, load_scenario, builtin_scenario, validate  # noqa: E402
from .channel import Placement3D  # noqa: E402
from .comm import BeamformingSolution, weighted_sum_rate  # noqa: E402
from .beamforming import InfeasibleError, SolverFailure, solve_beamforming, slot_problem  # noqa: E402
from .placement import StaticDesign, enumerate_grid, solve_static  # noqa: E402
from .trajectory import DynamicDesign, Trajectory, circular_init, solve_dynamic  # noqa: E402
from .baselines import BaselineKind, solve_baseline, circle_flight_design  # noqa: E402

__all__ = [
    "Scenario", "load_scenario", "builtin_scenario", "validate", "Placement3D",
    "BeamformingSolution", "weighted_sum_rate", "InfeasibleError", "SolverFailure",
    "solve_beamforming", "slot_problem", "StaticDesign", "enumerate_grid", "solve_static",
    "DynamicDesign", "Trajectory", "circular_init", "solve_dynamic", "BaselineKind",
    "solve_baseline", "circle_flight_design",
]
