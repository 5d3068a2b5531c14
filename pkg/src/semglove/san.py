"""Co-occurrence counts distilled from summed self-attention weights.

Per sentence, the BPE-level attention matrix is averaged into word-level
scores, the strongest in-window context words are kept, and each kept word
contributes its score divided by the row's top score (or 1/rank in rank
mode).  Direction is target -> context: a word's subword positions act as
the attention sources.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from semglove.cooc import CoocMatrix
from semglove.dumps import MODE_SAN, SanRecord, read_dump
from semglove.errors import ConfigError, DataError
from semglove.vocab import Sentence, Vocabulary, iter_sentences

_PathLike = str | os.PathLike

DIVISION = "division"
RANK = "rank"


@dataclass(frozen=True)
class SanConfig:
    """Window size, how many top candidates to keep, and the weighting.

    select_top defaults to the window size; doubling it keeps every
    in-window candidate.  distance="rank" swaps the score-ratio weights for
    harmonic 1/rank weights.
    """

    window: int = 5
    select_top: int | None = None
    distance: str = DIVISION

    def __post_init__(self):
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.select_top is None:
            object.__setattr__(self, "select_top", self.window)
        if not 1 <= self.select_top <= 2 * self.window:
            raise ConfigError(
                f"select_top must be in [1, {2 * self.window}], got {self.select_top}"
            )
        if self.distance not in (DIVISION, RANK):
            raise ConfigError(f"distance must be 'division' or 'rank', got {self.distance!r}")


@dataclass
class WordAttnRow:
    """Selected context words for one target occurrence, with final weights."""

    target: int
    candidates: list[tuple[int, float]]


#: A candidate context occurrence: (word id, positional distance, attention).
Candidate = tuple[int, int, float]


def bpe_to_word_attention(rec: SanRecord) -> np.ndarray:
    """Average the BPE-BPE attention matrix into a word-word matrix.

    Entry [i, j] is the mean of attn over word i's subword rows and word
    j's subword columns (m*n cells).  The full W x W matrix is returned;
    windowing and the diagonal are handled at candidate selection.
    """
    counts = np.asarray(rec.subword_counts, dtype=np.int64)
    starts = np.zeros(len(counts), dtype=np.intp)
    np.cumsum(counts[:-1], out=starts[1:])
    attn = rec.attn.astype(np.float64)
    by_row = np.add.reduceat(attn, starts, axis=0)
    block = np.add.reduceat(by_row, starts, axis=1)
    return block / np.outer(counts, counts)


def select_and_weight(
    target: int, candidates: Sequence[Candidate], cfg: SanConfig
) -> WordAttnRow:
    """Keep the top candidates by attention and turn scores into weights.

    Ordering: attention descending, then positional proximity, then lower
    word id (determinism).  Division mode emits score/top_score, so the
    best candidate always weighs 1.0; rank mode emits 1/rank.  Candidates
    with non-positive attention carry no signal and are dropped up front.
    """
    live = [c for c in candidates if c[2] > 0.0]
    live.sort(key=lambda c: (-c[2], c[1], c[0]))
    top = live[: cfg.select_top]
    if not top:
        return WordAttnRow(target=target, candidates=[])
    if cfg.distance == DIVISION:
        base = top[0][2]
        weights = [(wid, attn / base) for wid, _, attn in top]
    else:
        weights = [(wid, 1.0 / t) for t, (wid, _, _) in enumerate(top, start=1)]
    return WordAttnRow(target=target, candidates=weights)


def _sentence_rows(
    rec: SanRecord, sent: Sentence, cfg: SanConfig, index: int
) -> Iterator[WordAttnRow]:
    if rec.n_words != len(sent):
        raise DataError(
            f"record {index}: dump has {rec.n_words} words but the corpus "
            f"sentence has {len(sent)} tokens"
        )
    aw = bpe_to_word_attention(rec)
    ids = sent.ids
    n = len(ids)
    for p in range(n):
        wid = ids[p]
        if wid < 0:
            continue
        cands: list[Candidate] = []
        for q in range(max(0, p - cfg.window), min(n - 1, p + cfg.window) + 1):
            if q == p:
                continue
            cj = ids[q]
            # OOV and same-word occurrences leave the pool before top-k.
            if cj < 0 or cj == wid:
                continue
            cands.append((cj, abs(q - p), float(aw[p, q])))
        yield select_and_weight(wid, cands, cfg)


def build_san_cooc(
    records: Iterable[SanRecord],
    sentences: Iterable[Sentence],
    vocab: Vocabulary,
    cfg: SanConfig,
    matrix: CoocMatrix | None = None,
) -> CoocMatrix:
    """Accumulate selected attention weights over paired records/sentences.

    Record k must describe sentence k of the stream: the dump carries word
    boundaries and attention, the corpus carries word identities.
    """
    if matrix is None:
        matrix = CoocMatrix(vocab.size)
    sentinel = object()
    sent_iter = iter(sentences)
    index = 0
    for rec in records:
        sent = next(sent_iter, sentinel)
        if sent is sentinel:
            raise DataError(
                f"dump has more records than the corpus has sentences (at record {index})"
            )
        for row in _sentence_rows(rec, sent, cfg, index):
            for wid, weight in row.candidates:
                matrix.accumulate(row.target, wid, weight)
        index += 1
    if next(sent_iter, sentinel) is not sentinel:
        raise DataError(f"corpus has more sentences than the dump has records ({index})")
    return matrix


def san_cooc_from_files(
    dump_path: _PathLike,
    corpus: _PathLike | Iterable[str],
    vocab: Vocabulary,
    cfg: SanConfig,
) -> CoocMatrix:
    """File-level wrapper: checks the dump mode, pairs it with the corpus.

    Empty corpus lines are skipped, mirroring the extractor (which emits no
    record for them), so record k lines up with the k-th non-empty sentence.
    """
    header, records = read_dump(dump_path)
    if header.mode != MODE_SAN:
        raise ConfigError(f"{dump_path}: not a SAN dump (mode {header.mode})")
    sentences = (s for s in iter_sentences(corpus, vocab) if len(s) > 0)
    return build_san_cooc(records, sentences, vocab, cfg)
