"""SGDV wire format writer (see the pipeline repo's FORMATS.md).

Deliberately self-contained: the dump file is the contract between the
extractor and the embedding pipeline, so this module writes raw bytes
from the documented layout rather than importing the consumer's code.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"SGDV"
VERSION = 1
MODE_SAN = 1
MODE_MLM = 2

_HEADER = struct.Struct("<4sIBIII")
_PAIR = np.dtype([("id", "<u4"), ("logit", "<f4")])


@dataclass
class DumpWriter:
    """Sequential record writer; one instance per output file."""

    path: str
    mode: int
    top_k: int
    n_layers: int
    n_heads: int

    def __post_init__(self):
        if self.mode not in (MODE_SAN, MODE_MLM):
            raise ValueError(f"bad mode {self.mode}")
        if self.mode == MODE_SAN and self.top_k != 0:
            raise ValueError("SAN dumps carry top_k = 0")
        if self.mode == MODE_MLM and self.top_k < 1:
            raise ValueError("MLM dumps need top_k >= 1")
        self._f = open(self.path, "wb")
        self._f.write(
            _HEADER.pack(MAGIC, VERSION, self.mode, self.top_k,
                         self.n_layers, self.n_heads)
        )
        self.n_records = 0

    def _prefix(self, subword_counts, bpe_ids):
        counts = np.asarray(subword_counts, dtype="<u4")
        ids = np.asarray(bpe_ids, dtype="<u4")
        if len(ids) < 1 or len(counts) < 1:
            raise ValueError("empty record")
        if int(counts.sum()) != len(ids):
            raise ValueError(
                f"subword counts sum {int(counts.sum())} != {len(ids)} tokens"
            )
        self._f.write(struct.pack("<II", len(ids), len(counts)))
        self._f.write(counts.tobytes())
        self._f.write(ids.tobytes())
        return len(ids)

    def write_san(self, subword_counts, bpe_ids, attn) -> None:
        if self.mode != MODE_SAN:
            raise ValueError("not a SAN dump")
        L = self._prefix(subword_counts, bpe_ids)
        attn = np.ascontiguousarray(attn, dtype="<f4")
        if attn.shape != (L, L):
            raise ValueError(f"attention shape {attn.shape} != ({L}, {L})")
        self._f.write(attn.tobytes())
        self.n_records += 1

    def write_mlm(self, subword_counts, bpe_ids, pred_ids, pred_logits) -> None:
        if self.mode != MODE_MLM:
            raise ValueError("not an MLM dump")
        L = self._prefix(subword_counts, bpe_ids)
        ids = np.asarray(pred_ids, dtype="<u4")
        logits = np.asarray(pred_logits, dtype="<f4")
        if ids.shape != (L, self.top_k) or logits.shape != (L, self.top_k):
            raise ValueError(
                f"prediction shapes {ids.shape}/{logits.shape} != ({L}, {self.top_k})"
            )
        if (np.diff(logits, axis=1) > 0).any():
            raise ValueError("per-position logits must be non-increasing")
        pairs = np.empty((L, self.top_k), dtype=_PAIR)
        pairs["id"] = ids
        pairs["logit"] = logits
        self._f.write(pairs.tobytes())
        self.n_records += 1

    def close(self) -> None:
        self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_lexicon(path: str, lexicon: dict[str, list[int]]) -> None:
    """"word<TAB>id1 id2 ..." lines, one per word."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for word, ids in lexicon.items():
            if not ids:
                raise ValueError(f"word {word!r} has no subword ids")
            f.write(word + "\t" + " ".join(str(i) for i in ids) + "\n")
