"""Co-occurrence counts distilled from masked-LM top-K logits.

Two stages, exactly as the counts are defined: first a BPE-level matrix is
accumulated from each masked position's retained predictions (source = the
token actually at the position, context = a predicted token), then word
pairs are recovered by averaging over all subword pairs through the
lexicon, zeros included.
"""

from __future__ import annotations

import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

from semglove.cooc import CoocMatrix
from semglove.dumps import MODE_MLM, MlmRecord, SubwordLexicon, read_dump
from semglove.errors import ConfigError, DataError
from semglove.vocab import Vocabulary

_PathLike = str | os.PathLike

DIVISION = "division"
RANK = "rank"


@dataclass(frozen=True)
class MlmConfig:
    """How many top predictions to keep per position, and the weighting."""

    top_tokens: int = 10
    distance: str = DIVISION

    def __post_init__(self):
        if self.top_tokens < 1:
            raise ConfigError(f"top_tokens must be >= 1, got {self.top_tokens}")
        if self.distance not in (DIVISION, RANK):
            raise ConfigError(f"distance must be 'division' or 'rank', got {self.distance!r}")


class BpeCoocMatrix:
    """Sparse BPE-BPE counts, row-major: rows[source][context] = count > 0."""

    def __init__(self, bpe_vocab_size: int):
        self.bpe_vocab_size = bpe_vocab_size
        self.rows: dict[int, dict[int, float]] = {}

    def accumulate(self, s: int, t: int, w: float) -> None:
        if s == t:
            raise DataError(f"self BPE pair ({s}, {s}) is not allowed")
        if not w > 0:
            raise DataError(f"non-positive BPE count {w!r} for pair ({s}, {t})")
        if not (0 <= s < self.bpe_vocab_size and 0 <= t < self.bpe_vocab_size):
            raise DataError(
                f"BPE pair ({s}, {t}) out of range for size {self.bpe_vocab_size}"
            )
        row = self.rows.setdefault(s, {})
        row[t] = row.get(t, 0.0) + w

    def get(self, s: int, t: int) -> float:
        return self.rows.get(s, {}).get(t, 0.0)

    def __len__(self) -> int:
        return sum(len(r) for r in self.rows.values())

    def items(self):
        for s, row in self.rows.items():
            for t, w in row.items():
                yield (s, t), w


def accumulate_bpe_cooc(rec: MlmRecord, cfg: MlmConfig, acc: BpeCoocMatrix) -> None:
    """Fold one record's predictions into the BPE matrix.

    Per position: take the top cfg.top_tokens predictions, drop the
    position's own token (the mask usually tops its own list) and anything
    with a non-positive logit, then weight the retained list by
    logit/top_retained_logit (division) or 1/rank.  A position whose
    retained list is empty contributes nothing.
    """
    k_avail = rec.pred_ids.shape[1]
    if cfg.top_tokens > k_avail:
        raise ConfigError(
            f"top_tokens {cfg.top_tokens} exceeds the dump's top_k {k_avail}"
        )
    n = cfg.top_tokens
    ids = rec.pred_ids
    logits = rec.pred_logits
    for pos in range(rec.n_bpe):
        src = int(rec.bpe_ids[pos])
        retained = [
            (int(ids[pos, k]), float(logits[pos, k]))
            for k in range(n)
            if int(ids[pos, k]) != src and logits[pos, k] > 0
        ]
        if not retained:
            continue
        if cfg.distance == DIVISION:
            base = retained[0][1]  # logits are stored descending
            for tok, g in retained:
                acc.accumulate(src, tok, g / base)
        else:
            for rank, (tok, _) in enumerate(retained, start=1):
                acc.accumulate(src, tok, 1.0 / rank)


def bpe_to_word_cooc(
    m: BpeCoocMatrix, vocab: Vocabulary, lexicon: SubwordLexicon
) -> CoocMatrix:
    """Average BPE-BPE counts into word-word counts through the lexicon.

    X[i, j] = sum over all subword pairs (s of i, t of j) of m[s, t],
    divided by the full m_i * n_j pair count -- absent entries average in
    as zeros.  Pairs are found through an inverted context-subword index,
    so (i, j) appears iff some subword pair has a positive count.
    """
    pieces: list[list[int]] = []
    for w in vocab.words:
        ids = lexicon.get(w)
        if ids is None:
            raise DataError(f"word {w!r} is missing from the lexicon")
        pieces.append(ids)
    inverted: dict[int, list[int]] = defaultdict(list)
    for wid, ids in enumerate(pieces):
        for t in ids:  # one entry per occurrence; repeated subwords count twice
            inverted[t].append(wid)
    out = CoocMatrix(vocab.size)
    for wid, ids in enumerate(pieces):
        sums: dict[int, float] = defaultdict(float)
        for s in ids:
            row = m.rows.get(s)
            if not row:
                continue
            for t, v in row.items():
                for j in inverted.get(t, ()):
                    sums[j] += v
        m_i = len(ids)
        for j, total in sums.items():
            if j == wid or total <= 0:
                continue
            out.accumulate(wid, j, total / (m_i * len(pieces[j])))
    return out


def build_mlm_cooc(
    records: Iterable[MlmRecord],
    vocab: Vocabulary,
    lexicon: SubwordLexicon,
    cfg: MlmConfig,
    bpe_vocab_size: int = 2**32,
) -> CoocMatrix:
    """Accumulate all records into a BPE matrix, then recover word counts.

    bpe_vocab_size defaults to the format's structural bound (u32 ids);
    predictions outside the lexicon's id range are legal, they just never
    map back to a word.
    """
    acc = BpeCoocMatrix(bpe_vocab_size)
    for rec in records:
        accumulate_bpe_cooc(rec, cfg, acc)
    return bpe_to_word_cooc(acc, vocab, lexicon)


def mlm_cooc_from_files(
    dump_path: _PathLike,
    vocab: Vocabulary,
    lexicon: SubwordLexicon,
    cfg: MlmConfig,
) -> CoocMatrix:
    """File-level wrapper: checks mode and the configured top_tokens bound."""
    header, records = read_dump(dump_path)
    if header.mode != MODE_MLM:
        raise ConfigError(f"{dump_path}: not an MLM dump (mode {header.mode})")
    if cfg.top_tokens > header.top_k:
        raise ConfigError(
            f"top_tokens {cfg.top_tokens} exceeds the dump's top_k {header.top_k}"
        )
    return build_mlm_cooc(records, vocab, lexicon, cfg)
