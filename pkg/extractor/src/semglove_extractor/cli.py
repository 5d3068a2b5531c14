"""Command-line entry point for dump and lexicon extraction."""

from __future__ import annotations

import argparse
import sys

from semglove_extractor.extract import (
    DEFAULT_MODEL,
    ExtractorConfig,
    emit_lexicon,
    extract_mlm,
    extract_san,
    load_model,
)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="semglove-extract",
        description="Run a pretrained masked LM over a corpus and emit "
                    "SGDV score dumps and the subword lexicon.",
    )
    p.add_argument("--mode", choices=["san", "mlm"], required=True)
    p.add_argument("--corpus", required=True,
                   help="whitespace-tokenized text, one sentence per line")
    p.add_argument("--out", required=True, help="output .sgdv path")
    p.add_argument("--model", default=DEFAULT_MODEL)
    p.add_argument("--top-k", type=int, default=10,
                   help="predictions kept per position (MLM mode)")
    p.add_argument("--max-positions", type=int, default=None,
                   help="override the model's position limit")
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--device", default="cpu")
    p.add_argument("--vocab", help="vocabulary file ('word count' lines); "
                                   "required with --lexicon")
    p.add_argument("--lexicon", help="also write the word -> subword-id lexicon here")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.lexicon and not args.vocab:
        print("error: --lexicon needs --vocab", file=sys.stderr)
        return 2
    cfg = ExtractorConfig(
        model=args.model,
        mode=args.mode,
        top_k=args.top_k,
        max_positions=args.max_positions,
        batch_size=args.batch_size,
        device=args.device,
    )
    tokenizer, model = load_model(cfg)
    if args.mode == "san":
        stats = extract_san(args.corpus, cfg, args.out, tokenizer, model)
    else:
        stats = extract_mlm(args.corpus, cfg, args.out, tokenizer, model)
    print(
        f"{args.mode}: {stats.n_records} records from {stats.n_sentences} "
        f"sentences ({stats.n_truncated} truncated, {stats.n_skipped} skipped)",
        file=sys.stderr,
    )
    if args.lexicon:
        n = emit_lexicon(args.vocab, cfg, args.lexicon, tokenizer)
        print(f"lexicon: {n} words", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
