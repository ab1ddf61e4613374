"""Coercion semantics for subtyping calculi with and without delimited control."""

from .surface import ParseError, Skeleton, parse, parse_env, show
from .syntax import alpha_eq, free_vars, subst
from .target import (
    Converged, Flavor, FuelExhausted, Stuck, coercion_check, erase, evaluate, step,
    target_check,
)

__all__ = [
    "ParseError", "Skeleton", "parse", "parse_env", "show", "alpha_eq", "free_vars", "subst",
    "Converged", "Flavor", "FuelExhausted", "Stuck", "coercion_check", "erase", "evaluate",
    "step", "target_check",
]
