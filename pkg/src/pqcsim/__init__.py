"""Distributed state-vector simulator for gate-model quantum computers."""
from . import kernels
from .circuit import Program, count_operations, insert_swaps, parse_program, serialize_program, validate_locality
from .errors import SimulatorError
from .layout import QubitPermutation, locate
from .runner import RunReport, execute_program, simulate

__version__ = "0.1.0"

__all__ = [
    "Program",
    "QubitPermutation",
    "RunReport",
    "SimulatorError",
    "count_operations",
    "execute_program",
    "insert_swaps",
    "kernels",
    "locate",
    "parse_program",
    "serialize_program",
    "simulate",
    "validate_locality",
]
