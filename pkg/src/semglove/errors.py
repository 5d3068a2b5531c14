"""Exception taxonomy shared by all modules.

Each class carries a short ``category`` used by the CLI to emit one-line
machine-parseable errors (``error: <category>: <message>``).
"""


class SemGloveError(Exception):
    """Base class for all pipeline errors."""

    category = "data"


class ParseError(SemGloveError):
    """Malformed text input (vocab files, lexicons, datasets, configs)."""

    category = "format"


class FormatError(SemGloveError):
    """Structurally invalid binary input (bad magic, truncation, size)."""

    category = "format"


class RecordError(SemGloveError):
    """A single record violates its invariants; carries the record index."""

    category = "record"

    def __init__(self, index: int, message: str):
        super().__init__(f"record {index}: {message}")
        self.index = index


class ConfigError(SemGloveError):
    """Invalid configuration: unknown keys, mode mismatches, bad ranges."""

    category = "config"


class DataError(SemGloveError):
    """Semantically invalid data (zero vectors, missing words, bad counts)."""

    category = "data"


class TrainingDiverged(SemGloveError):
    """A non-finite parameter or residual was hit during training."""

    category = "training"

    def __init__(self, record_index: int, epoch: int):
        super().__init__(
            f"non-finite residual at record {record_index} in epoch {epoch}; "
            "lower the learning rate or enable gradient clamping"
        )
        self.record_index = record_index
        self.epoch = epoch
