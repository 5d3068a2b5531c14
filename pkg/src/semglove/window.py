"""Local-window co-occurrence builder with harmonic distance weighting.

Every ordered in-vocabulary pair (w_i, w_j) at positional distance
1 <= d <= window within one sentence contributes 1/d to X_ij.  Windows
clip at sentence (line) boundaries, OOV tokens consume a position without
generating pairs, and two occurrences of the same word never pair up
(self co-occurrences are excluded matrix-wide).

Weights are accumulated as exact integers: each contribution is stored as
lcm(1..window)/d, so per-pair totals are order-independent and the single
float division at the end makes results bit-identical across the pure
Python path, the compiled kernel path, and any sharded merge.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from semglove.cooc import CoocMatrix, save_records
from semglove.vocab import Sentence, Vocabulary, iter_sentences

_PathLike = str | os.PathLike

#: Largest window for which lcm(1..S) * realistic pair multiplicities stay
#: comfortably inside int64.  lcm(1..16) = 720720.
MAX_EXACT_WINDOW = 16


@dataclass(frozen=True)
class WindowConfig:
    """Symmetric local window of `window` words each side."""

    window: int = 5
    symmetric: bool = True

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.window > MAX_EXACT_WINDOW:
            raise ValueError(
                f"window must be <= {MAX_EXACT_WINDOW} "
                "(exact integer accumulation would overflow)"
            )


def _count_pairs(
    sentences: Iterable[Sentence], cfg: WindowConfig
) -> tuple[dict[tuple[int, int], int], int]:
    """Pure-Python accumulation of integer lcm/d numerators per pair."""
    lcm = math.lcm(*range(1, cfg.window + 1))
    numer: dict[tuple[int, int], int] = {}
    for sent in sentences:
        ids = sent.ids
        n = len(ids)
        for p in range(n):
            i = ids[p]
            if i < 0:
                continue
            lo = max(0, p - cfg.window)
            hi = min(n - 1, p + cfg.window) if cfg.symmetric else p - 1
            for q in range(lo, hi + 1):
                if q == p:
                    continue
                j = ids[q]
                if j < 0 or j == i:
                    continue
                key = (i, j)
                numer[key] = numer.get(key, 0) + lcm // abs(q - p)
    return numer, lcm


def build_window_cooc(
    sentences: Iterable[Sentence], vocab: Vocabulary, cfg: WindowConfig
) -> CoocMatrix:
    """Build the window co-occurrence matrix from a sentence stream."""
    numer, lcm = _count_pairs(sentences, cfg)
    m = CoocMatrix(vocab.size)
    for key, n in numer.items():
        m.entries[key] = n / lcm
    return m


def build_window_cooc_file(
    corpus: _PathLike | Iterable[str],
    vocab: Vocabulary,
    cfg: WindowConfig,
    out_path: _PathLike,
) -> int:
    """Stream a corpus through the compiled kernel and write cooccur records.

    Same arithmetic as build_window_cooc (and bit-identical results); this
    path avoids materializing a Python dict for large corpora.  Returns the
    number of records written.
    """
    from semglove import _kernels

    lcm = math.lcm(*range(1, cfg.window + 1))
    table = _kernels.new_pair_table()
    vsize = vocab.size
    for sent in iter_sentences(corpus, vocab):
        if len(sent) < 2:
            continue
        ids = np.asarray(sent.ids, dtype=np.int64)
        _kernels.accumulate_window(ids, vsize, cfg.window, lcm, cfg.symmetric, table)
    keys, numer = _kernels.pair_table_to_arrays(table)
    ii = (keys // vsize).astype(np.uint32)
    jj = (keys % vsize).astype(np.uint32)
    xx = numer / float(lcm)
    save_records(out_path, ii, jj, xx)
    return len(keys)
