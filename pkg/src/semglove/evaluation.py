"""Word-similarity evaluation: Spearman correlation of cosine similarities
against human judgments, with OOV pairs skipped and coverage reported.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from semglove.errors import DataError, ParseError
from semglove.trainer import WordVectors

_PathLike = str | os.PathLike


@dataclass
class SimilarityDataset:
    name: str
    pairs: list[tuple[str, str, float]]


@dataclass
class EvalReport:
    dataset: str
    spearman: float
    covered: int
    total: int

    def __str__(self) -> str:
        return f"{self.dataset} {self.spearman:.4f} {self.covered}/{self.total}"


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """u.v / (|u||v|); undefined for a zero vector."""
    nu = math.sqrt(float(u @ u))
    nv = math.sqrt(float(v @ v))
    if nu == 0.0 or nv == 0.0:
        raise DataError("cosine similarity is undefined for a zero vector")
    return float(u @ v) / (nu * nv)


def spearman(xs, ys) -> float:
    """Pearson correlation of average ranks (ties get the mean rank).

    Computed as cx.cy / sqrt((cx.cx)(cy.cy)) on mean-centered ranks; ranks
    and their center are exact quarter-integers in f64, so identical or
    exactly reversed orderings give exactly +/-1.0.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("spearman wants two equal-length 1-d sequences")
    if len(xs) < 2:
        raise ValueError("spearman needs at least 2 observations")
    cx = rankdata(xs)
    cy = rankdata(ys)
    cx -= cx.mean()
    cy -= cy.mean()
    sxx = float(cx @ cx)
    syy = float(cy @ cy)
    if sxx == 0.0 or syy == 0.0:
        raise DataError("spearman is undefined for a constant sequence")
    return float(cx @ cy) / math.sqrt(sxx * syy)


def load_dataset(path: _PathLike, name: str | None = None) -> SimilarityDataset:
    """Read tab-separated "word1 word2 score" lines; '#' starts a comment.

    Words are lowercased at ingest to match the uncased pipeline.
    """
    pairs: list[tuple[str, str, float]] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(
                    f"{path}: line {lineno}: expected 'word1<TAB>word2<TAB>score'"
                )
            w1, w2, score_str = parts
            try:
                score = float(score_str)
            except ValueError:
                raise ParseError(
                    f"{path}: line {lineno}: score {score_str!r} is not a number"
                ) from None
            if not math.isfinite(score):
                raise ParseError(f"{path}: line {lineno}: non-finite score")
            pairs.append((w1.strip().lower(), w2.strip().lower(), score))
    if not pairs:
        raise ParseError(f"{path}: dataset has no pairs")
    if name is None:
        name = os.path.splitext(os.path.basename(str(path)))[0]
    return SimilarityDataset(name=name, pairs=pairs)


def evaluate(vectors: WordVectors, dataset: SimilarityDataset) -> EvalReport:
    """Spearman over the covered pairs; pairs with any OOV word are skipped."""
    human: list[float] = []
    model: list[float] = []
    for w1, w2, score in dataset.pairs:
        if w1 not in vectors or w2 not in vectors:
            continue
        human.append(score)
        model.append(cosine(vectors[w1], vectors[w2]))
    if len(human) < 2:
        raise DataError(
            f"{dataset.name}: only {len(human)} of {len(dataset.pairs)} pairs "
            "covered; need at least 2"
        )
    return EvalReport(
        dataset=dataset.name,
        spearman=spearman(human, model),
        covered=len(human),
        total=len(dataset.pairs),
    )


def nearest(vectors: WordVectors, word: str, k: int = 10) -> list[tuple[str, float]]:
    """The k nearest words by cosine, excluding the query word itself."""
    if word not in vectors:
        raise DataError(f"word {word!r} is not in the vector table")
    q = vectors[word]
    nq = np.linalg.norm(q)
    if nq == 0.0:
        raise DataError(f"word {word!r} has a zero vector")
    norms = np.linalg.norm(vectors.matrix, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    sims = (vectors.matrix @ q) / (safe * nq)
    sims[norms == 0.0] = -np.inf
    sims[vectors.ids[word]] = -np.inf
    k = min(k, len(sims) - 1)
    top = np.argpartition(-sims, range(k))[:k]
    return [(vectors.words[int(i)], float(sims[int(i)])) for i in top]
