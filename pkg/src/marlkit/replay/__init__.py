from .adders import AdderError, SequenceAdder, TransitionAdder
from .table import NotReadyError, ReplayTable, SAMPLERS

__all__ = [
    "AdderError",
    "NotReadyError",
    "ReplayTable",
    "SAMPLERS",
    "SequenceAdder",
    "TransitionAdder",
]
