"""Wold-type decompositions and BCL models for q-commutative pairs and tuples of isometries."""

from .core import Phase, QMatrix, TruncationWindow
from .opalg import LazyOperator, SpaceSignature, TruncatedMatrix, densify
from .bcl import BCLTuple, build_model, extract_bcl1, tuples_equivalent
from .report import Check, VerificationReport

__version__ = "0.1.0"

__all__ = [
    "BCLTuple",
    "Check",
    "LazyOperator",
    "Phase",
    "QMatrix",
    "SpaceSignature",
    "TruncatedMatrix",
    "TruncationWindow",
    "VerificationReport",
    "build_model",
    "densify",
    "extract_bcl1",
    "tuples_equivalent",
]
