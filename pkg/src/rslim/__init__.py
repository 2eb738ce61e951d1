"""Asymptotic limits of symmetric low-rank matrix estimation under Gaussian noise."""
from .prior import Prior, builtin, make_discrete, moment, parse_prior
from .rs_potential import RsSolution, solve
from .state_evolution import SeTrace, q_tilde

__version__ = "0.1.0"

__all__ = ["Prior", "RsSolution", "SeTrace", "builtin", "make_discrete", "moment", "parse_prior",
           "q_tilde", "solve"]
