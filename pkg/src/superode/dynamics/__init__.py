"""Real-coordinate integration, difference schemes and Riccati tools."""
from .abel import AbelReport, WindowSplitError, abel_correspondence_check, lienard_residual
from .discrete import DiscreteTrajectory, collinearity, delta, delta_product_rule_check, difference_iterate, shift
from .integrate import DivergenceError, Trajectory, euler_iterate, rk4_integrate
from .realsys import RealSystem, expand_to_real, hierarchy_check, real_initial
from .riccati import (
    RiccatiSpec,
    StepFailure,
    riccati_difference,
    riccati_linearize,
    riccati_solve,
    riccati_system,
)

__all__ = [
    "AbelReport", "WindowSplitError", "abel_correspondence_check", "lienard_residual",
    "DiscreteTrajectory", "collinearity", "delta", "delta_product_rule_check", "difference_iterate", "shift",
    "DivergenceError", "Trajectory", "euler_iterate", "rk4_integrate",
    "RealSystem", "expand_to_real", "hierarchy_check", "real_initial",
    "RiccatiSpec", "StepFailure", "riccati_difference", "riccati_linearize", "riccati_solve", "riccati_system",
]
