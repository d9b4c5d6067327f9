"""Discrete optimal transport for the Lorentzian cost ``c = -d^p`` on Minkowski space."""
from .geometry import CausalClass, CostParams, SpacetimePoint, cost, cost_t, lorentz_distance
from .kernels import BACKEND
from .measures import Coupling, DiscreteMeasure
from .transport import build_cost_matrix, solve_primal

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CausalClass",
    "CostParams",
    "Coupling",
    "DiscreteMeasure",
    "SpacetimePoint",
    "build_cost_matrix",
    "cost",
    "cost_t",
    "lorentz_distance",
    "solve_primal",
]
