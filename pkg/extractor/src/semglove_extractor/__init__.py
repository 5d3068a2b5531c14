"""Transformer score-dump extractor.

Runs a pretrained masked language model over a tokenized corpus and emits
SGDV dumps (summed self-attention matrices or per-position top-K logits)
plus the word -> subword-id lexicon, in the wire formats documented by the
consuming pipeline's FORMATS.md.
"""

__version__ = "0.1.0"
