"""Evolution algebra of a bisexual population with Wolbachia infection."""

from .algebra import StructureTensor, multiply, square
from .dynamics import (Extinction, StateVector, absolute_nilpotents, apply_V, fixed_points,
                       iterate, oracle_fixed_points)
from .model import ParameterDomainError, WolbachiaParams, build_algebra, build_inheritance_table

__all__ = [
    "Extinction", "ParameterDomainError", "StateVector", "StructureTensor", "WolbachiaParams",
    "absolute_nilpotents", "apply_V", "build_algebra", "build_inheritance_table", "fixed_points",
    "iterate", "multiply", "oracle_fixed_points", "square",
]
