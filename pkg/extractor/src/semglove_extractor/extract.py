"""Attention and masked-logit extraction from a pretrained encoder.

SAN mode: one forward pass per sentence; the per-head attention matrices
are stripped of the boundary marker tokens, each remaining row is
renormalized to sum to 1, and everything is summed over layers and heads
into one L x L matrix.

MLM mode: L forward passes per sentence (batched internally, which does
not change the outputs) — position i is replaced by the mask token and
the raw pre-softmax logits at i are recorded as top-K (token id, logit)
pairs, sorted by logit descending with ties broken by ascending id.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np
import torch

from semglove_extractor.sgdv import MODE_MLM, MODE_SAN, DumpWriter, write_lexicon

DEFAULT_MODEL = "bert-large-uncased-whole-word-masking"


@dataclass
class ExtractorConfig:
    model: str = DEFAULT_MODEL
    mode: str = "mlm"  # "san" or "mlm"
    top_k: int = 10
    max_positions: int | None = None  # default: the model's position limit
    batch_size: int = 16
    device: str = "cpu"

    def __post_init__(self):
        if self.mode not in ("san", "mlm"):
            raise ValueError(f"mode must be 'san' or 'mlm', got {self.mode!r}")
        if self.mode == "mlm" and self.top_k < 1:
            raise ValueError("top_k must be >= 1 in MLM mode")


@dataclass
class ExtractStats:
    n_sentences: int = 0
    n_records: int = 0
    n_truncated: int = 0
    n_skipped: int = 0  # sentences where not even one word fit
    truncated_lines: list[int] = field(default_factory=list)


def load_model(cfg: ExtractorConfig):
    """Tokenizer + masked-LM model in eval mode.

    Attention implementation is forced to eager so per-head weights are
    available; top-K logits are unaffected by the choice.
    """
    from transformers import AutoModelForMaskedLM, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(cfg.model)
    model = AutoModelForMaskedLM.from_pretrained(
        cfg.model, attn_implementation="eager"
    )
    model.eval()
    model.to(cfg.device)
    return tokenizer, model


def encode_word(tokenizer, word: str) -> list[int]:
    """Subword ids for one word; unencodable words map to the unknown id."""
    pieces = tokenizer.tokenize(word)
    if not pieces:
        return [tokenizer.unk_token_id]
    return tokenizer.convert_tokens_to_ids(pieces)


def _encode_sentence(tokenizer, words, budget):
    """Per-word subword ids, truncated at a word boundary to fit `budget`
    BPE tokens.  Returns (per-word id lists, truncated?)."""
    encoded = []
    used = 0
    truncated = False
    for word in words:
        ids = encode_word(tokenizer, word)
        if used + len(ids) > budget:
            truncated = True
            break
        encoded.append(ids)
        used += len(ids)
    return encoded, truncated


def _iter_lines(corpus):
    if isinstance(corpus, str):
        with open(corpus, encoding="utf-8") as f:
            yield from f
    else:
        yield from corpus


def _model_dims(model):
    cfg = model.config
    return cfg.num_hidden_layers, cfg.num_attention_heads, cfg.max_position_embeddings


def _bpe_budget(cfg: ExtractorConfig, pos_limit: int) -> int:
    """BPE tokens available per sentence after the two boundary markers;
    a configured limit can only tighten the model's own."""
    limit = min(cfg.max_positions or pos_limit, pos_limit)
    return limit - 2


def extract_san(corpus, cfg: ExtractorConfig, out_path: str,
                tokenizer=None, model=None, log=None) -> ExtractStats:
    """Write a SAN-mode dump: one summed L x L attention matrix per sentence."""
    if log is None:
        log = lambda msg: print(msg, file=sys.stderr)
    if tokenizer is None or model is None:
        tokenizer, model = load_model(cfg)
    n_layers, n_heads, pos_limit = _model_dims(model)
    budget = _bpe_budget(cfg, pos_limit)
    stats = ExtractStats()
    cls_id = tokenizer.cls_token_id
    sep_id = tokenizer.sep_token_id
    with DumpWriter(out_path, mode=MODE_SAN, top_k=0,
                    n_layers=n_layers, n_heads=n_heads) as writer:
        for lineno, line in enumerate(_iter_lines(corpus), start=1):
            words = line.split()
            if not words:
                continue
            stats.n_sentences += 1
            encoded, truncated = _encode_sentence(tokenizer, words, budget)
            if truncated:
                stats.n_truncated += 1
                stats.truncated_lines.append(lineno)
                log(f"line {lineno}: truncated to {len(encoded)} of {len(words)} words")
            if not encoded:
                stats.n_skipped += 1
                continue
            bpe_ids = [i for ids in encoded for i in ids]
            input_ids = torch.tensor([[cls_id, *bpe_ids, sep_id]], device=cfg.device)
            with torch.no_grad():
                out = model(input_ids=input_ids, output_attentions=True)
            # (n_layers, n_heads, T, T) -> strip markers -> renormalize rows
            att = torch.stack(out.attentions)[:, 0][:, :, 1:-1, 1:-1]
            att = att / att.sum(-1, keepdim=True).clamp_min(1e-12)
            summed = att.sum(dim=(0, 1)).cpu().numpy()
            writer.write_san([len(ids) for ids in encoded], bpe_ids, summed)
            stats.n_records += 1
    return stats


def _top_k_desc(row: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-k (ids, logits) sorted by logit descending, ties by ascending id.

    A stable sort on the negated logits keeps equal-logit entries in their
    natural (ascending id) order.
    """
    order = np.argsort(-row, kind="stable")[:k]
    return order.astype(np.uint32), row[order]


def extract_mlm(corpus, cfg: ExtractorConfig, out_path: str,
                tokenizer=None, model=None, log=None) -> ExtractStats:
    """Write an MLM-mode dump: per position, top-K raw logits under masking."""
    if log is None:
        log = lambda msg: print(msg, file=sys.stderr)
    if tokenizer is None or model is None:
        tokenizer, model = load_model(cfg)
    n_layers, n_heads, pos_limit = _model_dims(model)
    budget = _bpe_budget(cfg, pos_limit)
    if cfg.top_k > model.config.vocab_size:
        raise ValueError(
            f"top_k {cfg.top_k} exceeds the model vocabulary {model.config.vocab_size}"
        )
    stats = ExtractStats()
    cls_id = tokenizer.cls_token_id
    sep_id = tokenizer.sep_token_id
    mask_id = tokenizer.mask_token_id
    with DumpWriter(out_path, mode=MODE_MLM, top_k=cfg.top_k,
                    n_layers=n_layers, n_heads=n_heads) as writer:
        for lineno, line in enumerate(_iter_lines(corpus), start=1):
            words = line.split()
            if not words:
                continue
            stats.n_sentences += 1
            encoded, truncated = _encode_sentence(tokenizer, words, budget)
            if truncated:
                stats.n_truncated += 1
                stats.truncated_lines.append(lineno)
                log(f"line {lineno}: truncated to {len(encoded)} of {len(words)} words")
            if not encoded:
                stats.n_skipped += 1
                continue
            bpe_ids = [i for ids in encoded for i in ids]
            L = len(bpe_ids)
            base = [cls_id, *bpe_ids, sep_id]
            # one masked variant per position, batched; outputs equal the
            # one-at-a-time forward passes
            variants = torch.tensor([base] * L, device=cfg.device)
            variants[torch.arange(L), torch.arange(1, L + 1)] = mask_id
            rows = []
            with torch.no_grad():
                for lo in range(0, L, cfg.batch_size):
                    chunk = variants[lo: lo + cfg.batch_size]
                    logits = model(input_ids=chunk).logits
                    for b in range(chunk.shape[0]):
                        pos = lo + b + 1
                        rows.append(logits[b, pos].float().cpu().numpy())
            pred_ids = np.empty((L, cfg.top_k), dtype=np.uint32)
            pred_logits = np.empty((L, cfg.top_k), dtype=np.float32)
            for i, row in enumerate(rows):
                ids, vals = _top_k_desc(row.astype(np.float32), cfg.top_k)
                pred_ids[i] = ids
                pred_logits[i] = vals
            writer.write_mlm([len(ids) for ids in encoded], bpe_ids,
                             pred_ids, pred_logits)
            stats.n_records += 1
    return stats


def emit_lexicon(vocab_path: str, cfg: ExtractorConfig, out_path: str,
                 tokenizer=None) -> int:
    """Map every vocabulary word to its subword ids ("word count" input)."""
    if tokenizer is None:
        tokenizer, _ = load_model(cfg)
    lexicon: dict[str, list[int]] = {}
    with open(vocab_path, encoding="utf-8") as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            word = parts[0]
            lexicon[word] = encode_word(tokenizer, word)
    write_lexicon(out_path, lexicon)
    return len(lexicon)
