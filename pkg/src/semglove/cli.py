"""Single command-line entry point wiring all pipeline stages.

Every subcommand accepts --config FILE (flat key=value lines, '#'
comments); explicit flags override file values, file values override the
built-in defaults.  --dry-run prints the resolved configuration for the
subcommand and exits.  Exit codes: 0 success, 1 data/runtime errors, 2
usage and configuration errors.  Failures print one line to stderr:
"error: <category>: <message>".
"""

from __future__ import annotations

import argparse
import os
import sys

import semglove
from semglove import cooc, dumps, evaluation, mlm, san, trainer, window
from semglove import vocab as vocab_mod
from semglove.errors import ConfigError, ParseError, SemGloveError

#: Known config keys: name -> (python type, default).  A None default means
#: the key is a path or value that must come from a flag or the config file.
KEY_SPECS: dict[str, tuple[type, object]] = {
    "corpus": (str, None),
    "vocab": (str, None),
    "dump": (str, None),
    "lexicon": (str, None),
    "cooc": (str, None),
    "input": (str, None),
    "out": (str, None),
    "out_dir": (str, None),
    "vectors": (str, None),
    "dataset": (str, None),
    "support": (str, None),
    "values": (str, None),
    "word": (str, None),
    "k": (int, 10),
    "min_count": (int, 5),
    "window": (int, 5),
    "symmetric": (bool, True),
    "select_top": (int, None),
    "distance": (str, "division"),
    "top_tokens": (int, 10),
    "builder": (str, "window"),
    "dim": (int, 300),
    "x_max": (float, 10.0),
    "alpha": (float, 0.75),
    "lr": (float, 0.05),
    "iterations": (int, 100),
    "threads": (int, 1),
    "seed": (int, 1),
    "clamp": (float, 100.0),
}

_BOOL_STRINGS = {"true": True, "1": True, "yes": True,
                 "false": False, "0": False, "no": False}

#: config keys whose CLI flag is not just the dashed key name
_FLAG_NAMES = {"input": "--in", "top_tokens": "--top", "x_max": "--xmax",
               "iterations": "--iters"}


def _coerce(key: str, raw: str):
    typ, _ = KEY_SPECS[key]
    if typ is bool:
        try:
            return _BOOL_STRINGS[raw.strip().lower()]
        except KeyError:
            raise ConfigError(f"key {key!r}: expected a boolean, got {raw!r}") from None
    try:
        return typ(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected {typ.__name__}, got {raw!r}") from None


def load_config_file(path: str) -> dict[str, object]:
    """Parse a flat key=value file, rejecting unknown keys by name."""
    values: dict[str, object] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, raw = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}: line {lineno}: expected key=value")
            key = key.strip()
            if key not in KEY_SPECS:
                raise ConfigError(f"{path}: unknown config key {key!r}")
            values[key] = _coerce(key, raw.strip())
    return values


class Resolved:
    """Per-subcommand view of the merged flag/file/default configuration."""

    def __init__(self, args: argparse.Namespace, keys: list[str]):
        self.keys = keys
        file_values = load_config_file(args.config) if args.config else {}
        self._values: dict[str, object] = {}
        for key in keys:
            flag = getattr(args, key, None)
            if flag is not None:
                self._values[key] = flag
            elif key in file_values:
                self._values[key] = file_values[key]
            else:
                self._values[key] = KEY_SPECS[key][1]

    def __getitem__(self, key: str):
        return self._values[key]

    def require(self, key: str):
        value = self._values[key]
        if value is None:
            flag = _FLAG_NAMES.get(key, "--" + key.replace("_", "-"))
            raise ConfigError(f"missing required value for {key!r} "
                              f"(set {flag} or a config entry)")
        return value

    def dump(self, out=None) -> None:
        for key in self.keys:
            v = self._values[key]
            if isinstance(v, bool):
                v = "true" if v else "false"
            print(f"{key}={v}", file=out if out is not None else sys.stdout)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="flat key=value config file")
    p.add_argument("--dry-run", action="store_true",
                   help="print the resolved configuration and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semglove",
        description="GloVe embeddings from window, attention-distilled, "
                    "and MLM-distilled co-occurrence counts.",
    )
    parser.add_argument("--version", action="version",
                        version=f"semglove {semglove.__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vocab", help="build the min-count filtered vocabulary")
    p.add_argument("--corpus")
    p.add_argument("--min-count", dest="min_count", type=int)
    p.add_argument("--out")
    _add_common(p)

    p = sub.add_parser("cooc-window", help="harmonic local-window co-occurrence counts")
    p.add_argument("--corpus")
    p.add_argument("--vocab")
    p.add_argument("--window", type=int)
    p.add_argument("--asymmetric", dest="symmetric", action="store_false", default=None)
    p.add_argument("--out")
    _add_common(p)

    p = sub.add_parser("cooc-san", help="co-occurrence counts from attention dumps")
    p.add_argument("--dump")
    p.add_argument("--corpus")
    p.add_argument("--vocab")
    p.add_argument("--window", type=int)
    p.add_argument("--select-top", dest="select_top", type=int)
    p.add_argument("--distance", choices=["division", "rank"])
    p.add_argument("--out")
    _add_common(p)

    p = sub.add_parser("cooc-mlm", help="co-occurrence counts from masked-LM dumps")
    p.add_argument("--dump")
    p.add_argument("--vocab")
    p.add_argument("--lexicon")
    p.add_argument("--top", dest="top_tokens", type=int)
    p.add_argument("--distance", choices=["division", "rank"])
    p.add_argument("--out")
    _add_common(p)

    p = sub.add_parser("cooc-intersect",
                       help="keep one matrix's support with another's values")
    p.add_argument("--support")
    p.add_argument("--values")
    p.add_argument("--out")
    _add_common(p)

    p = sub.add_parser("shuffle", help="seeded permutation of a record file")
    p.add_argument("--in", dest="input")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    _add_common(p)

    p = sub.add_parser("train", help="fit embeddings with parallel AdaGrad")
    p.add_argument("--cooc")
    p.add_argument("--vocab")
    p.add_argument("--dim", type=int)
    p.add_argument("--xmax", dest="x_max", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--iters", dest="iterations", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-clamp", dest="clamp", action="store_const", const=0.0,
                   default=None, help="disable the per-scalar gradient clamp")
    p.add_argument("--out")
    _add_common(p)

    p = sub.add_parser("eval", help="word-similarity evaluation")
    p.add_argument("--vectors")
    p.add_argument("--dataset")
    _add_common(p)

    p = sub.add_parser("nearest", help="nearest words by cosine")
    p.add_argument("--vectors")
    p.add_argument("--word")
    p.add_argument("--k", type=int)
    _add_common(p)

    p = sub.add_parser("validate-dump", help="scan a dump for format errors")
    p.add_argument("--dump")
    _add_common(p)

    p = sub.add_parser("pipeline",
                       help="vocab -> cooc -> shuffle -> train -> eval from one config")
    p.add_argument("--corpus")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--builder", choices=["window", "san", "mlm"])
    p.add_argument("--dump")
    p.add_argument("--lexicon")
    p.add_argument("--dataset")
    p.add_argument("--min-count", dest="min_count", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--select-top", dest="select_top", type=int)
    p.add_argument("--top", dest="top_tokens", type=int)
    p.add_argument("--distance", choices=["division", "rank"])
    p.add_argument("--dim", type=int)
    p.add_argument("--xmax", dest="x_max", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--iters", dest="iterations", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--seed", type=int)
    _add_common(p)

    return parser


_COMMAND_KEYS = {
    "vocab": ["corpus", "min_count", "out"],
    "cooc-window": ["corpus", "vocab", "window", "symmetric", "out"],
    "cooc-san": ["dump", "corpus", "vocab", "window", "select_top", "distance", "out"],
    "cooc-mlm": ["dump", "vocab", "lexicon", "top_tokens", "distance", "out"],
    "cooc-intersect": ["support", "values", "out"],
    "shuffle": ["input", "out", "seed"],
    "train": ["cooc", "vocab", "dim", "x_max", "alpha", "lr", "iterations",
              "threads", "seed", "clamp", "out"],
    "eval": ["vectors", "dataset"],
    "nearest": ["vectors", "word", "k"],
    "validate-dump": ["dump"],
    "pipeline": ["corpus", "out_dir", "builder", "dump", "lexicon", "dataset",
                 "min_count", "window", "symmetric", "select_top", "top_tokens",
                 "distance", "dim", "x_max", "alpha", "lr", "iterations",
                 "threads", "seed", "clamp"],
}


def _train_config(r: Resolved) -> trainer.TrainConfig:
    return trainer.TrainConfig(
        dim=r["dim"], x_max=r["x_max"], alpha=r["alpha"], lr=r["lr"],
        iterations=r["iterations"], threads=r["threads"], seed=r["seed"],
        clamp=r["clamp"],
    )


def _cmd_vocab(r: Resolved) -> int:
    v = vocab_mod.build_vocab(r.require("corpus"), min_count=r["min_count"])
    vocab_mod.save_vocab(v, r.require("out"))
    print(f"vocabulary: {v.size} words", file=sys.stderr)
    return 0


def _window_config(r: Resolved) -> window.WindowConfig:
    return window.WindowConfig(window=r["window"], symmetric=r["symmetric"])


def _cmd_cooc_window(r: Resolved) -> int:
    v = vocab_mod.load_vocab(r.require("vocab"))
    n = window.build_window_cooc_file(
        r.require("corpus"), v, _window_config(r), r.require("out")
    )
    print(f"cooc-window: {n} pairs", file=sys.stderr)
    return 0


def _cmd_cooc_san(r: Resolved) -> int:
    v = vocab_mod.load_vocab(r.require("vocab"))
    cfg = san.SanConfig(window=r["window"], select_top=r["select_top"],
                        distance=r["distance"])
    m = san.san_cooc_from_files(r.require("dump"), r.require("corpus"), v, cfg)
    cooc.save_bin(m, r.require("out"))
    print(f"cooc-san: {len(m)} pairs", file=sys.stderr)
    return 0


def _cmd_cooc_mlm(r: Resolved) -> int:
    v = vocab_mod.load_vocab(r.require("vocab"))
    lex = dumps.read_lexicon(r.require("lexicon"))
    cfg = mlm.MlmConfig(top_tokens=r["top_tokens"], distance=r["distance"])
    m = mlm.mlm_cooc_from_files(r.require("dump"), v, lex, cfg)
    cooc.save_bin(m, r.require("out"))
    print(f"cooc-mlm: {len(m)} pairs", file=sys.stderr)
    return 0


def _cmd_cooc_intersect(r: Resolved) -> int:
    support = cooc.load_bin(r.require("support"))
    values = cooc.load_bin(r.require("values"))
    out = cooc.intersect(support, values)
    cooc.save_bin(out, r.require("out"))
    print(f"cooc-intersect: {len(out)} of {len(support)} pairs kept", file=sys.stderr)
    return 0


def _cmd_shuffle(r: Resolved) -> int:
    cooc.shuffle(r.require("input"), r.require("out"), r["seed"])
    return 0


def _cmd_train(r: Resolved) -> int:
    v = vocab_mod.load_vocab(r.require("vocab"))
    emb = trainer.train(r.require("cooc"), v, _train_config(r))
    trainer.save_vectors(trainer.finalize(emb), v, r.require("out"))
    return 0


def _cmd_eval(r: Resolved) -> int:
    vectors = trainer.load_vectors(r.require("vectors"))
    dataset = evaluation.load_dataset(r.require("dataset"))
    print(evaluation.evaluate(vectors, dataset))
    return 0


def _cmd_nearest(r: Resolved) -> int:
    vectors = trainer.load_vectors(r.require("vectors"))
    for word, sim in evaluation.nearest(vectors, r.require("word"), r["k"]):
        print(f"{word} {sim:.4f}")
    return 0


def _cmd_validate_dump(r: Resolved) -> int:
    report = dumps.validate_dump(r.require("dump"))
    mode = "SAN" if report.mode == dumps.MODE_SAN else "MLM"
    print(f"{mode} dump: {report.n_records} records, "
          f"{report.row_sum_flags} row-sum flags")
    return 0


def _cmd_pipeline(r: Resolved) -> int:
    out_dir = r.require("out_dir")
    os.makedirs(out_dir, exist_ok=True)
    corpus = r.require("corpus")
    vocab_path = os.path.join(out_dir, "vocab.txt")
    cooc_path = os.path.join(out_dir, "cooccur.bin")
    shuf_path = os.path.join(out_dir, "shuf.bin")
    vec_path = os.path.join(out_dir, "vectors.txt")

    v = vocab_mod.build_vocab(corpus, min_count=r["min_count"])
    vocab_mod.save_vocab(v, vocab_path)
    print(f"pipeline: vocabulary {v.size} words", file=sys.stderr)

    builder = r["builder"]
    if builder == "window":
        n = window.build_window_cooc_file(corpus, v, _window_config(r), cooc_path)
    elif builder == "san":
        cfg = san.SanConfig(window=r["window"], select_top=r["select_top"],
                            distance=r["distance"])
        m = san.san_cooc_from_files(r.require("dump"), corpus, v, cfg)
        cooc.save_bin(m, cooc_path)
        n = len(m)
    elif builder == "mlm":
        lex = dumps.read_lexicon(r.require("lexicon"))
        cfg = mlm.MlmConfig(top_tokens=r["top_tokens"], distance=r["distance"])
        m = mlm.mlm_cooc_from_files(r.require("dump"), v, lex, cfg)
        cooc.save_bin(m, cooc_path)
        n = len(m)
    else:
        raise ConfigError(f"unknown builder {builder!r}")
    print(f"pipeline: {builder} builder wrote {n} pairs", file=sys.stderr)

    cooc.shuffle(cooc_path, shuf_path, r["seed"])
    emb = trainer.train(shuf_path, v, _train_config(r))
    trainer.save_vectors(trainer.finalize(emb), v, vec_path)
    print(f"pipeline: vectors at {vec_path}", file=sys.stderr)

    if r["dataset"] is not None:
        vectors = trainer.load_vectors(vec_path)
        for path in str(r["dataset"]).split(","):
            dataset = evaluation.load_dataset(path.strip())
            print(evaluation.evaluate(vectors, dataset))
    return 0


_HANDLERS = {
    "vocab": _cmd_vocab,
    "cooc-window": _cmd_cooc_window,
    "cooc-san": _cmd_cooc_san,
    "cooc-mlm": _cmd_cooc_mlm,
    "cooc-intersect": _cmd_cooc_intersect,
    "shuffle": _cmd_shuffle,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "nearest": _cmd_nearest,
    "validate-dump": _cmd_validate_dump,
    "pipeline": _cmd_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        resolved = Resolved(args, _COMMAND_KEYS[args.command])
        if args.dry_run:
            resolved.dump()
            return 0
        return _HANDLERS[args.command](resolved)
    except ConfigError as e:
        print(f"error: {e.category}: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        # config dataclasses validate with ValueError; same class of mistake
        print(f"error: config: {e}", file=sys.stderr)
        return 2
    except (ParseError, SemGloveError) as e:
        print(f"error: {e.category}: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: io: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
