"""Sparse co-occurrence accumulator and its binary record serialization.

The on-disk format is a headerless little-endian stream of 16-byte records
(i: u32, j: u32, x: f64), one per nonzero entry.  All three builders write
it and the trainer consumes it.
"""

from __future__ import annotations

import os
from typing import Iterator

import numpy as np

from semglove.errors import DataError, FormatError

_PathLike = str | os.PathLike

#: dtype of one serialized co-occurrence record.
RECORD_DTYPE = np.dtype([("i", "<u4"), ("j", "<u4"), ("x", "<f8")])
RECORD_SIZE = RECORD_DTYPE.itemsize  # 16 bytes


class CoocMatrix:
    """Sparse map (i, j) -> x with x > 0, i != j, ids < vocab_size.

    A write-then-read accumulator: builders add weighted pairs, the trainer
    reads the serialized records.  No matrix algebra lives here.
    """

    def __init__(self, vocab_size: int):
        if vocab_size < 0:
            raise ValueError("vocab_size must be >= 0")
        self.vocab_size = vocab_size
        self.entries: dict[tuple[int, int], float] = {}

    def accumulate(self, i: int, j: int, w: float) -> None:
        """Add w to entry (i, j), creating it if absent.

        Self pairs and non-positive weights are rejected outright; either
        signals a builder bug rather than bad input data.
        """
        if i == j:
            raise DataError(f"self co-occurrence ({i}, {i}) is not allowed")
        if not w > 0:
            raise DataError(f"non-positive weight {w!r} for pair ({i}, {j})")
        if not (0 <= i < self.vocab_size and 0 <= j < self.vocab_size):
            raise DataError(
                f"pair ({i}, {j}) out of range for vocab_size {self.vocab_size}"
            )
        key = (i, j)
        self.entries[key] = self.entries.get(key, 0.0) + w

    def get(self, i: int, j: int) -> float:
        return self.entries.get((i, j), 0.0)

    def items(self) -> Iterator[tuple[tuple[int, int], float]]:
        return iter(self.entries.items())

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CoocMatrix)
            and self.vocab_size == other.vocab_size
            and self.entries == other.entries
        )

    def merge(self, other: "CoocMatrix") -> None:
        """Fold another shard into this one (associative and commutative)."""
        if other.vocab_size != self.vocab_size:
            raise DataError("cannot merge matrices with different vocab sizes")
        for (i, j), w in other.entries.items():
            key = (i, j)
            self.entries[key] = self.entries.get(key, 0.0) + w

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Entries as parallel (i, j, x) arrays in insertion order."""
        n = len(self.entries)
        ii = np.empty(n, dtype=np.uint32)
        jj = np.empty(n, dtype=np.uint32)
        xx = np.empty(n, dtype=np.float64)
        for k, ((i, j), x) in enumerate(self.entries.items()):
            ii[k] = i
            jj[k] = j
            xx[k] = x
        return ii, jj, xx

    @classmethod
    def from_arrays(
        cls, ii: np.ndarray, jj: np.ndarray, xx: np.ndarray, vocab_size: int
    ) -> "CoocMatrix":
        m = cls(vocab_size)
        for i, j, x in zip(ii.tolist(), jj.tolist(), xx.tolist()):
            m.accumulate(i, j, x)
        return m


def save_records(path: _PathLike, ii: np.ndarray, jj: np.ndarray, xx: np.ndarray) -> None:
    """Write parallel (i, j, x) arrays as a binary record stream."""
    rec = np.empty(len(xx), dtype=RECORD_DTYPE)
    rec["i"] = ii
    rec["j"] = jj
    rec["x"] = xx
    with open(path, "wb") as f:
        f.write(rec.tobytes())


def load_records(path: _PathLike) -> np.ndarray:
    """Read a binary record stream into a structured array.

    Only structural validity is checked here (whole records); semantic
    checks belong to load_bin / the trainer's loader.
    """
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) % RECORD_SIZE != 0:
        raise FormatError(
            f"{path}: size {len(raw)} is not a multiple of the "
            f"{RECORD_SIZE}-byte record (trailing partial record)"
        )
    return np.frombuffer(raw, dtype=RECORD_DTYPE)


def save_bin(matrix: CoocMatrix, path: _PathLike) -> None:
    """Serialize a matrix, one record per entry, in insertion order."""
    ii, jj, xx = matrix.to_arrays()
    save_records(path, ii, jj, xx)


def load_bin(path: _PathLike, vocab_size: int | None = None) -> CoocMatrix:
    """Deserialize a record stream; round-trip identity up to entry order.

    vocab_size defaults to max(i, j) + 1 over the records when not given.
    """
    rec = load_records(path)
    if vocab_size is None:
        vocab_size = int(max(rec["i"].max(), rec["j"].max())) + 1 if len(rec) else 0
    if len(rec):
        if rec["i"].max() >= vocab_size or rec["j"].max() >= vocab_size:
            raise DataError(f"{path}: word id exceeds vocab_size {vocab_size}")
        if (rec["i"] == rec["j"]).any():
            raise DataError(f"{path}: contains a self co-occurrence record")
        if not (rec["x"] > 0).all() or not np.isfinite(rec["x"]).all():
            raise DataError(f"{path}: contains a non-positive or non-finite count")
    m = CoocMatrix(vocab_size)
    for i, j, x in zip(rec["i"].tolist(), rec["j"].tolist(), rec["x"].tolist()):
        key = (i, j)
        m.entries[key] = m.entries.get(key, 0.0) + x
    return m


def shuffle(path_in: _PathLike, path_out: _PathLike, seed: int) -> None:
    """Write a seeded uniform permutation of the input records.

    Same seed, same input -> byte-identical output.
    """
    rec = load_records(path_in)
    perm = np.random.default_rng(seed).permutation(len(rec))
    with open(path_out, "wb") as f:
        f.write(rec[perm].tobytes())


def intersect(support: CoocMatrix, values: CoocMatrix) -> CoocMatrix:
    """Keep the support of one matrix with values taken from another.

    Pairs present in `support` but absent from `values` are dropped (a zero
    count cannot be stored).
    """
    size = max(support.vocab_size, values.vocab_size)
    out = CoocMatrix(size)
    for key in support.entries:
        v = values.entries.get(key)
        if v is not None:
            out.entries[key] = v
    return out
