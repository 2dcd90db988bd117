"""Conversational machine reading with explicit bipartite alignment and
many-to-many entailment: corpus handling, segmentation, weak supervision,
a lightweight decision core, follow-up question generation, training and
evaluation, and an interactive dialogue service.
"""

__version__ = "0.1.0"

from .corpus import Answer, DecisionLabel, DialogueInstance, HistoryTurn
from .core import BiAEParameters, DecisionOutcome, parameter_count
from .pipeline import PipelinePredictor
from .weak_labels import EntailmentState

__all__ = [
    "Answer",
    "BiAEParameters",
    "DecisionLabel",
    "DecisionOutcome",
    "DialogueInstance",
    "EntailmentState",
    "HistoryTurn",
    "PipelinePredictor",
    "parameter_count",
    "__version__",
]
