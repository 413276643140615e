"""Stabilizer-circuit laboratory for coherence-controlled dynamics."""
from .pauli import CNOT, HADAMARD, PHASE, LocalPauliBasis, PauliString, commute, multiply, weight
from .stabilizer import (
    ForcedRecord,
    MeasurementCase,
    MeasurementRecord,
    Postselect,
    PostselectionError,
    RandomOutcome,
    StabilizerTableau,
)

__all__ = [
    "CNOT",
    "HADAMARD",
    "PHASE",
    "LocalPauliBasis",
    "PauliString",
    "commute",
    "multiply",
    "weight",
    "ForcedRecord",
    "MeasurementCase",
    "MeasurementRecord",
    "Postselect",
    "PostselectionError",
    "RandomOutcome",
    "StabilizerTableau",
]
__version__ = "0.1.0"
