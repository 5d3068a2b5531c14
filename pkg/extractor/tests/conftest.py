import numpy as np
import pytest
import torch

PIECES = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "king", "queen", "crown", "rules", "old", "cat", "dog",
    "sat", "mat", "on", "a", "egypt", "##ologist", "##s", "ran", "red",
]

WORDS = [
    "the", "king", "queen", "crown", "rules", "old", "cat", "dog",
    "sat", "mat", "on", "a", "egyptologist", "kings", "zzzqx",
]


@pytest.fixture(scope="session")
def tiny_model():
    """A small randomly initialized masked LM + WordPiece tokenizer.

    Random weights are fine for format-conformance tests; nothing here
    depends on the predictions being meaningful.
    """
    from transformers import BertConfig, BertForMaskedLM, BertTokenizer

    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=len(PIECES),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
        attn_implementation="eager",
    )
    model = BertForMaskedLM(config)
    model.eval()
    tokenizer = BertTokenizer({p: i for i, p in enumerate(PIECES)},
                              do_lower_case=True)
    return tokenizer, model


@pytest.fixture(scope="session")
def corpus_lines():
    """100 sentences over the toy vocabulary, a few with subword words."""
    rng = np.random.default_rng(99)
    lines = []
    for _ in range(100):
        n = int(rng.integers(2, 9))
        lines.append(" ".join(rng.choice(WORDS, n)))
    return lines


@pytest.fixture
def corpus_file(tmp_path, corpus_lines):
    p = tmp_path / "corpus.txt"
    p.write_text("\n".join(corpus_lines) + "\n")
    return p
