"""Network model, result and settings types."""

from .library import builtin
from .maxplus import BOTTOM, MaxPlusMatrix
from .network import ArrivalSpec, EntryExpression, NetworkModel
from .reports import DecayReport, MGFCurve, StructureReport, TailFit
from .settings import EstimationSettings

__all__ = [
    "BOTTOM",
    "MaxPlusMatrix",
    "ArrivalSpec",
    "EntryExpression",
    "NetworkModel",
    "DecayReport",
    "MGFCurve",
    "StructureReport",
    "TailFit",
    "EstimationSettings",
    "builtin",
]
