"""Separability decisions for bipartite density matrices via concurrence matrices."""

from .config import DEFAULT_TOLERANCES, RunConfig, Tolerances
from .pipeline import Verdict, decide, fallback_minimize_g0
from .state import BipartiteDims, DensityMatrix, Decomposition, load_state, validate_state

__version__ = "0.1.0"

__all__ = [
    "BipartiteDims",
    "DEFAULT_TOLERANCES",
    "Decomposition",
    "DensityMatrix",
    "RunConfig",
    "Tolerances",
    "Verdict",
    "decide",
    "fallback_minimize_g0",
    "load_state",
    "validate_state",
]
