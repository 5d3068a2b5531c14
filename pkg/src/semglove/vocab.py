"""Vocabulary construction and sentence tokenization.

The corpus is whitespace-tokenized plain text, one sentence per line.  No
normalization happens here; corpus preparation (lowercasing etc.) is a
separate, auditable step.
"""

from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from semglove.errors import ParseError

#: Sentinel id for tokens outside the vocabulary.  OOV tokens keep their
#: sentence position (window distances are positional) but generate no pairs.
OOV = -1

_PathLike = str | os.PathLike


@dataclass(eq=True)
class Vocabulary:
    """Word <-> id mapping with corpus frequencies.

    Words are ordered by descending count, ties broken by first occurrence
    in the corpus; ids are their positions in that order.
    """

    words: list[str]
    counts: dict[str, int]
    ids: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.ids = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.ids

    @property
    def size(self) -> int:
        return len(self.words)

    def id_of(self, word: str) -> int:
        """Return the word's id, or OOV when absent."""
        return self.ids.get(word, OOV)


@dataclass(eq=True)
class Sentence:
    """One corpus line: surface tokens plus their vocabulary ids (OOV = -1)."""

    tokens: list[str]
    ids: list[int]

    def __post_init__(self):
        assert len(self.tokens) == len(self.ids)

    def __len__(self) -> int:
        return len(self.tokens)


def _iter_lines(corpus: _PathLike | Iterable[str]) -> Iterator[str]:
    if isinstance(corpus, (str, os.PathLike)):
        with open(corpus, encoding="utf-8") as f:
            yield from f
    else:
        yield from corpus


def build_vocab(corpus: _PathLike | Iterable[str], min_count: int = 5) -> Vocabulary:
    """Count whitespace tokens and keep the words with frequency >= min_count.

    Deterministic given identical input: words are sorted by descending
    count, ties by first occurrence.  An empty corpus yields an empty
    vocabulary.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    for line in _iter_lines(corpus):
        counts.update(line.split())
    # Counter preserves first-encounter order, which settles ties.
    first_seen = {w: k for k, w in enumerate(counts)}
    kept = [w for w, c in counts.items() if c >= min_count]
    kept.sort(key=lambda w: (-counts[w], first_seen[w]))
    return Vocabulary(words=kept, counts={w: counts[w] for w in kept})


def tokenize_sentence(line: str, vocab: Vocabulary) -> Sentence:
    """Split a line on whitespace and map each token to its id or OOV."""
    tokens = line.split()
    return Sentence(tokens=tokens, ids=[vocab.id_of(t) for t in tokens])


def iter_sentences(
    corpus: _PathLike | Iterable[str], vocab: Vocabulary
) -> Iterator[Sentence]:
    """Stream tokenized sentences from a corpus, one per line."""
    for line in _iter_lines(corpus):
        yield tokenize_sentence(line, vocab)


def save_vocab(vocab: Vocabulary, path: _PathLike) -> None:
    """Write "word count" lines in id order (UTF-8, LF endings)."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for w in vocab.words:
            f.write(f"{w} {vocab.counts[w]}\n")


def load_vocab(path: _PathLike) -> Vocabulary:
    """Read a vocab file written by save_vocab; round-trip is identity."""
    words: list[str] = []
    counts: dict[str, int] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(
                    f"{path}: line {lineno}: expected 'word count', got {line.rstrip()!r}"
                )
            word, count_str = parts
            try:
                count = int(count_str)
            except ValueError:
                raise ParseError(
                    f"{path}: line {lineno}: count {count_str!r} is not an integer"
                ) from None
            if word in counts:
                raise ParseError(f"{path}: line {lineno}: duplicate word {word!r}")
            words.append(word)
            counts[word] = count
    return Vocabulary(words=words, counts=counts)
