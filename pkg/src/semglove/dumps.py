"""Reader, writer, and validator for the SGDV transformer score-dump format.

One dump file carries per-sentence records in one of two modes: SAN
(a summed self-attention matrix over all layers and heads) or MLM
(per-position top-K raw logits).  The byte layout is frozen in FORMATS.md;
the extractor component writes it and the builders here consume it.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from semglove.errors import FormatError, ParseError, RecordError

_PathLike = str | os.PathLike

MAGIC = b"SGDV"
VERSION = 1
MODE_SAN = 1
MODE_MLM = 2

_HEADER = struct.Struct("<4sIBIII")  # magic, version, mode, top_k, n_layers, n_heads
_U32 = np.dtype("<u4")
_F32 = np.dtype("<f4")
_PAIR = np.dtype([("id", "<u4"), ("logit", "<f4")])

#: Relative tolerance for the soft attention row-sum check (each of the
#: N*M heads contributes a probability row summing to 1).
ROW_SUM_RTOL = 1e-2

#: Mapping word -> BPE token-id sequence, shared with the extractor.
SubwordLexicon = dict[str, list[int]]


@dataclass(frozen=True)
class DumpHeader:
    mode: int
    top_k: int
    n_layers: int
    n_heads: int

    def __post_init__(self):
        if self.mode not in (MODE_SAN, MODE_MLM):
            raise FormatError(f"invalid dump mode {self.mode} (want 1=SAN or 2=MLM)")
        if self.mode == MODE_SAN and self.top_k != 0:
            raise FormatError("SAN dumps must carry top_k = 0")
        if self.mode == MODE_MLM and self.top_k < 1:
            raise FormatError("MLM dumps must carry top_k >= 1")
        if self.n_layers < 1 or self.n_heads < 1:
            raise FormatError("n_layers and n_heads must be >= 1")


@dataclass
class SanRecord:
    """One sentence: word boundaries plus the layer/head-summed attention."""

    subword_counts: np.ndarray  # (W,) u32, summing to L
    bpe_ids: np.ndarray  # (L,) u32
    attn: np.ndarray  # (L, L) f32, attn[k, l] = attention from token k to l

    @property
    def n_bpe(self) -> int:
        return len(self.bpe_ids)

    @property
    def n_words(self) -> int:
        return len(self.subword_counts)


@dataclass
class MlmRecord:
    """One sentence: word boundaries plus per-position top-K logit pairs."""

    subword_counts: np.ndarray  # (W,) u32, summing to L
    bpe_ids: np.ndarray  # (L,) u32
    pred_ids: np.ndarray  # (L, K) u32
    pred_logits: np.ndarray  # (L, K) f32, non-increasing along K

    @property
    def n_bpe(self) -> int:
        return len(self.bpe_ids)

    @property
    def n_words(self) -> int:
        return len(self.subword_counts)


def _check_record(rec: SanRecord | MlmRecord, header: DumpHeader, index: int) -> None:
    L = rec.n_bpe
    W = rec.n_words
    if L < 1 or W < 1:
        raise RecordError(index, "empty record (L and W must be >= 1)")
    counts = np.asarray(rec.subword_counts)
    if (counts < 1).any():
        raise RecordError(index, "subword count of 0 for a word")
    if int(counts.sum()) != L:
        raise RecordError(
            index, f"subword_counts sum {int(counts.sum())} does not match L={L}"
        )
    if isinstance(rec, SanRecord):
        if header.mode != MODE_SAN:
            raise RecordError(index, "SAN record in a non-SAN dump")
        if rec.attn.shape != (L, L):
            raise RecordError(index, f"attention shape {rec.attn.shape} != ({L}, {L})")
    else:
        if header.mode != MODE_MLM:
            raise RecordError(index, "MLM record in a non-MLM dump")
        if rec.pred_ids.shape != (L, header.top_k):
            raise RecordError(
                index, f"prediction shape {rec.pred_ids.shape} != ({L}, {header.top_k})"
            )
        if rec.pred_logits.shape != rec.pred_ids.shape:
            raise RecordError(index, "pred_ids and pred_logits shapes differ")
        if (np.diff(rec.pred_logits.astype(np.float64), axis=1) > 0).any():
            raise RecordError(index, "per-position logits are not non-increasing")


def _read_exact(f: io.BufferedReader, n: int, index: int) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated record {index}: wanted {n} bytes, got {len(buf)}")
    return buf


def _read_records(
    f: io.BufferedReader, header: DumpHeader
) -> Iterator[SanRecord | MlmRecord]:
    try:
        index = 0
        while True:
            head = f.read(8)
            if len(head) == 0:
                return
            if len(head) < 8:
                raise FormatError(f"truncated record {index}: partial length prefix")
            L, W = struct.unpack("<II", head)
            counts = np.frombuffer(_read_exact(f, 4 * W, index), dtype=_U32)
            bpe_ids = np.frombuffer(_read_exact(f, 4 * L, index), dtype=_U32)
            if header.mode == MODE_SAN:
                attn = np.frombuffer(_read_exact(f, 4 * L * L, index), dtype=_F32)
                rec: SanRecord | MlmRecord = SanRecord(
                    subword_counts=counts,
                    bpe_ids=bpe_ids,
                    attn=attn.reshape(L, L),
                )
            else:
                pairs = np.frombuffer(
                    _read_exact(f, 8 * L * header.top_k, index), dtype=_PAIR
                ).reshape(L, header.top_k)
                rec = MlmRecord(
                    subword_counts=counts,
                    bpe_ids=bpe_ids,
                    pred_ids=pairs["id"].copy(),
                    pred_logits=pairs["logit"].copy(),
                )
            _check_record(rec, header, index)
            yield rec
            index += 1
    finally:
        f.close()


def read_dump(path: _PathLike) -> tuple[DumpHeader, Iterator[SanRecord | MlmRecord]]:
    """Open a dump, validate its header, and stream validated records lazily."""
    f = open(path, "rb")
    try:
        raw = f.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, version, mode, top_k, n_layers, n_heads = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r} (want {MAGIC!r})")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        header = DumpHeader(mode=mode, top_k=top_k, n_layers=n_layers, n_heads=n_heads)
    except Exception:
        f.close()
        raise
    return header, _read_records(f, header)


def write_dump(
    path: _PathLike, header: DumpHeader, records: Iterable[SanRecord | MlmRecord]
) -> int:
    """Write a dump; every record is validated before any of it is written.

    Returns the number of records written.  read_dump(write_dump(x)) == x
    bit-exactly.
    """
    n = 0
    with open(path, "wb") as f:
        f.write(
            _HEADER.pack(MAGIC, VERSION, header.mode, header.top_k,
                         header.n_layers, header.n_heads)
        )
        for rec in records:
            _check_record(rec, header, n)
            L = rec.n_bpe
            W = rec.n_words
            f.write(struct.pack("<II", L, W))
            f.write(np.ascontiguousarray(rec.subword_counts, dtype=_U32).tobytes())
            f.write(np.ascontiguousarray(rec.bpe_ids, dtype=_U32).tobytes())
            if isinstance(rec, SanRecord):
                f.write(np.ascontiguousarray(rec.attn, dtype=_F32).tobytes())
            else:
                pairs = np.empty((L, header.top_k), dtype=_PAIR)
                pairs["id"] = rec.pred_ids
                pairs["logit"] = rec.pred_logits
                f.write(pairs.tobytes())
            n += 1
    return n


@dataclass
class DumpReport:
    """Summary from validate_dump: hard errors raise, soft checks count."""

    mode: int
    n_records: int
    row_sum_flags: int  # SAN records with any attention row off N*M by > 1e-2


def validate_dump(path: _PathLike) -> DumpReport:
    """Fully scan a dump, raising on hard errors and counting soft flags.

    The soft check: every attention row of a SAN record should sum to
    n_layers * n_heads (each head's row is a probability distribution);
    records deviating beyond ROW_SUM_RTOL relative are flagged, not fatal.
    """
    header, records = read_dump(path)
    n = 0
    flags = 0
    expected = None
    if header.mode == MODE_SAN:
        expected = float(header.n_layers * header.n_heads)
    for rec in records:
        if expected is not None:
            rows = rec.attn.astype(np.float64).sum(axis=1)
            if (np.abs(rows - expected) > ROW_SUM_RTOL * expected).any():
                flags += 1
        n += 1
    return DumpReport(mode=header.mode, n_records=n, row_sum_flags=flags)


def write_lexicon(path: _PathLike, lexicon: SubwordLexicon) -> None:
    """Write "word<TAB>id1 id2 ... idm" lines; round-trip is identity."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for word, ids in lexicon.items():
            if not ids:
                raise ParseError(f"word {word!r} has an empty subword id list")
            f.write(word + "\t" + " ".join(str(i) for i in ids) + "\n")


def read_lexicon(path: _PathLike) -> SubwordLexicon:
    """Parse a lexicon file written by write_lexicon."""
    lex: SubwordLexicon = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            word, sep, rest = line.partition("\t")
            if not sep or not word:
                raise ParseError(f"{path}: line {lineno}: expected 'word<TAB>ids'")
            if word in lex:
                raise ParseError(f"{path}: line {lineno}: duplicate word {word!r}")
            try:
                ids = [int(t) for t in rest.split()]
            except ValueError:
                raise ParseError(
                    f"{path}: line {lineno}: non-integer subword id"
                ) from None
            if not ids:
                raise ParseError(f"{path}: line {lineno}: empty subword id list")
            lex[word] = ids
    return lex
