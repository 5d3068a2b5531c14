"""Fit embeddings to a co-occurrence matrix with parallel AdaGrad.

The objective per record (i, j, x) is f(x) * (w_i . c_j + b_i + b'_j -
ln x)^2 with the saturating weight f(x) = min(1, (x/x_max)^alpha).  Each
epoch takes one AdaGrad step per record in file order; with threads > 1
the epoch is split into contiguous offset ranges updated hogwild-style
(lock-free, benign races).  threads=1 is bit-reproducible given the seed
and record order.
"""

from __future__ import annotations

import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from semglove.cooc import load_records
from semglove.errors import DataError, ParseError, TrainingDiverged
from semglove.vocab import Vocabulary

_PathLike = str | os.PathLike


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 300
    x_max: float = 10.0
    alpha: float = 0.75
    lr: float = 0.05
    iterations: int = 100
    threads: int = 1
    seed: int = 1
    clamp: float = 100.0  # per-scalar gradient clamp; <= 0 disables

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if not self.x_max > 0:
            raise ValueError(f"x_max must be > 0, got {self.x_max}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not self.lr > 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")


@dataclass
class EmbeddingSet:
    """Target/context vectors, both bias arrays, and AdaGrad accumulators."""

    w: np.ndarray  # (V, d) target vectors
    c: np.ndarray  # (V, d) context vectors
    bw: np.ndarray  # (V,) target biases
    bc: np.ndarray  # (V,) context biases
    gw: np.ndarray = field(repr=False, default=None)
    gc: np.ndarray = field(repr=False, default=None)
    gbw: np.ndarray = field(repr=False, default=None)
    gbc: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.gw is None:
            self.gw = np.ones_like(self.w)
        if self.gc is None:
            self.gc = np.ones_like(self.c)
        if self.gbw is None:
            self.gbw = np.ones_like(self.bw)
        if self.gbc is None:
            self.gbc = np.ones_like(self.bc)

    def check_finite(self) -> None:
        for name in ("w", "c", "bw", "bc"):
            arr = getattr(self, name)
            if not np.isfinite(arr).all():
                bad = int(np.flatnonzero(~np.isfinite(arr).reshape(-1))[0])
                raise DataError(f"non-finite value in {name} at flat index {bad}")


def init_embeddings(vocab_size: int, cfg: TrainConfig) -> EmbeddingSet:
    """Vectors uniform in (-0.5/d, +0.5/d), biases zero, accumulators one."""
    rng = np.random.default_rng(cfg.seed)
    scale = 1.0 / cfg.dim
    shape = (vocab_size, cfg.dim)
    return EmbeddingSet(
        w=(rng.random(shape) - 0.5) * scale,
        c=(rng.random(shape) - 0.5) * scale,
        bw=np.zeros(vocab_size),
        bc=np.zeros(vocab_size),
    )


def weight_f(x: float, x_max: float, alpha: float) -> float:
    """Loss weight: (x/x_max)^alpha below the saturation point, else 1."""
    if not x > 0:
        raise DataError(f"co-occurrence count must be > 0, got {x!r}")
    if x >= x_max:
        return 1.0
    return (x / x_max) ** alpha


def loss_and_grad(
    e_i: np.ndarray,
    e_j: np.ndarray,
    b_i: float,
    b_j: float,
    x: float,
    cfg: TrainConfig,
) -> tuple[float, np.ndarray, np.ndarray, float, float]:
    """Single-pair loss term and its exact analytic gradients.

    With r = e_i . e_j + b_i + b_j - ln x and f = weight_f(x):
    loss = f r^2, d/de_i = 2 f r e_j, d/de_j = 2 f r e_i, d/db = 2 f r.
    """
    fx = weight_f(x, cfg.x_max, cfg.alpha)
    r = float(e_i @ e_j) + b_i + b_j - math.log(x)
    g = 2.0 * fx * r
    return fx * r * r, g * e_j, g * e_i, g, g


def _load_training_arrays(
    path: _PathLike, vocab_size: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rec = load_records(path)
    if len(rec) == 0:
        raise DataError(f"{path}: no co-occurrence records to train on")
    ii = rec["i"].astype(np.int32)
    jj = rec["j"].astype(np.int32)
    xx = np.ascontiguousarray(rec["x"])
    if int(rec["i"].max()) >= vocab_size or int(rec["j"].max()) >= vocab_size:
        raise DataError(f"{path}: word id exceeds the vocabulary size {vocab_size}")
    if (ii == jj).any():
        bad = int(np.flatnonzero(ii == jj)[0])
        raise DataError(f"{path}: record {bad} is a self co-occurrence")
    if not (np.isfinite(xx).all() and (xx > 0).all()):
        bad = int(np.flatnonzero(~(np.isfinite(xx) & (xx > 0)))[0])
        raise DataError(f"{path}: record {bad} has a non-positive or non-finite count")
    return ii, jj, xx


def train(
    cooc_path: _PathLike,
    vocab: Vocabulary | int,
    cfg: TrainConfig,
    init: EmbeddingSet | None = None,
    log=None,
) -> EmbeddingSet:
    """Run cfg.iterations epochs of AdaGrad over a (shuffled) record file.

    Reports the epoch-mean loss via `log` (default: stderr).  Aborts with
    TrainingDiverged naming the offending record if a residual goes
    non-finite.
    """
    vocab_size = vocab if isinstance(vocab, int) else vocab.size
    if log is None:
        log = lambda msg: print(msg, file=sys.stderr)
    ii, jj, xx = _load_training_arrays(cooc_path, vocab_size)
    emb = init if init is not None else init_embeddings(vocab_size, cfg)
    from semglove import _kernels

    n = len(xx)
    bounds = np.linspace(0, n, cfg.threads + 1).astype(np.int64)
    args = (emb.w, emb.c, emb.bw, emb.bc, emb.gw, emb.gc, emb.gbw, emb.gbc,
            cfg.lr, cfg.x_max, cfg.alpha, cfg.clamp)
    for epoch in range(1, cfg.iterations + 1):
        t0 = time.monotonic()
        if cfg.threads == 1:
            results = [_kernels.adagrad_epoch(ii, jj, xx, 0, n, *args)]
        else:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                futures = [
                    pool.submit(_kernels.adagrad_epoch, ii, jj, xx,
                                bounds[t], bounds[t + 1], *args)
                    for t in range(cfg.threads)
                ]
                results = [f.result() for f in futures]
        for _, err in results:
            if err >= 0:
                raise TrainingDiverged(record_index=int(err), epoch=epoch)
        mean_loss = sum(loss for loss, _ in results) / n
        log(f"epoch {epoch}/{cfg.iterations} loss {mean_loss:.6f} "
            f"({time.monotonic() - t0:.1f}s)")
    emb.check_finite()
    return emb


def mean_loss(cooc_path: _PathLike, vocab_size: int, emb: EmbeddingSet,
              cfg: TrainConfig) -> float:
    """Epoch-mean loss of a parameter set without updating it."""
    ii, jj, xx = _load_training_arrays(cooc_path, vocab_size)
    r = (np.einsum("nd,nd->n", emb.w[ii], emb.c[jj])
         + emb.bw[ii] + emb.bc[jj] - np.log(xx))
    fx = np.minimum(1.0, (xx / cfg.x_max) ** cfg.alpha)
    return float(np.mean(fx * r * r))


def finalize(emb: EmbeddingSet) -> np.ndarray:
    """Final word vector for word i is w_i + c_i."""
    return emb.w + emb.c


@dataclass
class WordVectors:
    """A word -> vector table in vocabulary id order."""

    words: list[str]
    matrix: np.ndarray  # (V, d)
    ids: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.ids = {w: i for i, w in enumerate(self.words)}

    def __contains__(self, word: str) -> bool:
        return word in self.ids

    def __getitem__(self, word: str) -> np.ndarray:
        return self.matrix[self.ids[word]]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


def save_vectors(table: np.ndarray, vocab: Vocabulary, path: _PathLike) -> None:
    """Write "word v1 ... vd" lines in id order.

    Values use the shortest decimal that round-trips the exact f64, so a
    reload recovers them bit-for-bit.
    """
    if len(table) != vocab.size:
        raise DataError(
            f"vector table has {len(table)} rows for a {vocab.size}-word vocabulary"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for i, word in enumerate(vocab.words):
            f.write(word)
            for v in table[i].tolist():
                f.write(" " + repr(v))
            f.write("\n")


def load_vectors(path: _PathLike) -> WordVectors:
    """Read a vectors file; rejects ragged or malformed lines."""
    words: list[str] = []
    rows: list[list[float]] = []
    dim = None
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 2:
                raise ParseError(f"{path}: line {lineno}: no vector components")
            try:
                row = [float(v) for v in parts[1:]]
            except ValueError:
                raise ParseError(
                    f"{path}: line {lineno}: non-numeric vector component"
                ) from None
            if dim is None:
                dim = len(row)
            elif len(row) != dim:
                raise ParseError(
                    f"{path}: line {lineno}: expected {dim} components, got {len(row)}"
                )
            words.append(parts[0])
            rows.append(row)
    if not words:
        raise ParseError(f"{path}: no vectors found")
    return WordVectors(words=words, matrix=np.array(rows, dtype=np.float64))
