"""Word embeddings from three kinds of global co-occurrence statistics.

The pipeline builds a sparse word-word co-occurrence matrix from one of
three sources -- harmonic local-window counts, counts distilled from
transformer self-attention weights, or counts distilled from masked-LM
logits -- then fits GloVe-style vectors to it with parallel AdaGrad and
evaluates them on word-similarity benchmarks.
"""

__version__ = "0.1.0"

from semglove.errors import (
    ConfigError,
    DataError,
    FormatError,
    ParseError,
    RecordError,
    SemGloveError,
    TrainingDiverged,
)

__all__ = [
    "ConfigError",
    "DataError",
    "FormatError",
    "ParseError",
    "RecordError",
    "SemGloveError",
    "TrainingDiverged",
]
