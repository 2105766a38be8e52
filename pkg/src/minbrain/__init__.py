"""Minimal sufficient information transition systems for robot brains."""

from .errors import MinbrainError
from .history import EMPTY, NO_ACTION, PENDING, HistoryITS, HistoryState, TaskMachine, unroll
from .model import DisturbanceModel, ExternalSystem, MooreMachine, ProbModel
from .refine import RefinementResult, minimal_sufficient_refinement, verify_minimality
from .ts import (
    Partition,
    StateRelabeledTS,
    TransitionSystem,
    Witness,
    common_refinement,
    find_insufficiency,
    is_deterministic,
    is_full,
    is_sufficient,
    isomorphic,
    quotient,
    refines,
)

__all__ = [
    "EMPTY",
    "NO_ACTION",
    "PENDING",
    "DisturbanceModel",
    "ExternalSystem",
    "HistoryITS",
    "HistoryState",
    "MinbrainError",
    "MooreMachine",
    "Partition",
    "ProbModel",
    "RefinementResult",
    "StateRelabeledTS",
    "TaskMachine",
    "TransitionSystem",
    "Witness",
    "common_refinement",
    "find_insufficiency",
    "is_deterministic",
    "is_full",
    "is_sufficient",
    "isomorphic",
    "minimal_sufficient_refinement",
    "quotient",
    "refines",
    "unroll",
    "verify_minimality",
]
