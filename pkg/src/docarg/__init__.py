"""Document-level event argument extraction with two-stream encoding and
semantic-graph interaction."""

__version__ = "0.1.0"

from .config import RunConfig
from .corpus import (
    Argument,
    Document,
    EventInstance,
    Schema,
    Span,
    load_corpus,
    save_corpus,
)
from .errors import DocargError
from .fusion_head import EventPrediction, RolePrediction
from .model import ArgumentExtractor
from .training import Trainer, load_checkpoint, save_checkpoint

__all__ = [
    "__version__",
    "Argument",
    "ArgumentExtractor",
    "DocargError",
    "Document",
    "EventInstance",
    "EventPrediction",
    "RolePrediction",
    "RunConfig",
    "Schema",
    "Span",
    "Trainer",
    "load_checkpoint",
    "load_corpus",
    "save_checkpoint",
    "save_corpus",
]
