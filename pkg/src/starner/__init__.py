"""Nested named-entity recognition over a star-shaped heterogeneous graph.

Subpackages build on each other: ``entities`` (spans and the nested BIOES
codec), ``numerics`` (reverse-mode autodiff), ``kernels`` (compiled/NumPy hot
loops), ``encoder`` (hybrid token embedding), ``stargraph`` (windowed text
nodes plus global type nodes under hybrid attention), ``labeler`` (per-type
constrained CRF), and the data/training/evaluation pipeline with its CLI.
"""

__version__ = "0.1.0"

from .config import Config, ConfigError
from .corpus import GrammarSpec, Sentence, generate_corpus, read_jsonl, write_jsonl
from .entities import EntitySpan, TagSequence, decode_nested, encode_nested
from .metrics import EvalReport, evaluate
from .model import NestedNerModel
from .checkpoint import load_checkpoint, save_checkpoint
from .training import TrainResult, train

__all__ = [
    "Config",
    "ConfigError",
    "EntitySpan",
    "EvalReport",
    "GrammarSpec",
    "NestedNerModel",
    "Sentence",
    "TagSequence",
    "TrainResult",
    "decode_nested",
    "encode_nested",
    "evaluate",
    "generate_corpus",
    "load_checkpoint",
    "read_jsonl",
    "save_checkpoint",
    "train",
    "write_jsonl",
]
