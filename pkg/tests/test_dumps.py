import struct

import numpy as np
import pytest

from semglove.dumps import (
    MODE_MLM,
    MODE_SAN,
    DumpHeader,
    MlmRecord,
    SanRecord,
    read_dump,
    read_lexicon,
    validate_dump,
    write_dump,
    write_lexicon,
)
from semglove.errors import FormatError, ParseError, RecordError


def random_san_record(rng, n_layers, n_heads, max_bpe=10):
    L = int(rng.integers(1, max_bpe + 1))
    counts = []
    remaining = L
    while remaining > 0:
        c = int(rng.integers(1, remaining + 1))
        counts.append(c)
        remaining -= c
    # rows sum to n_layers * n_heads like real summed attention
    attn = rng.random((L, L)).astype(np.float32) + 1e-3
    attn *= (n_layers * n_heads / attn.sum(axis=1, keepdims=True)).astype(np.float32)
    return SanRecord(
        subword_counts=np.array(counts, dtype=np.uint32),
        bpe_ids=rng.integers(0, 30000, L).astype(np.uint32),
        attn=attn,
    )


def random_mlm_record(rng, top_k, max_bpe=10, bpe_vocab=30000):
    L = int(rng.integers(1, max_bpe + 1))
    counts = []
    remaining = L
    while remaining > 0:
        c = int(rng.integers(1, remaining + 1))
        counts.append(c)
        remaining -= c
    logits = np.sort(rng.normal(0, 4, (L, top_k)).astype(np.float32), axis=1)[:, ::-1]
    return MlmRecord(
        subword_counts=np.array(counts, dtype=np.uint32),
        bpe_ids=rng.integers(0, bpe_vocab, L).astype(np.uint32),
        pred_ids=rng.integers(0, bpe_vocab, (L, top_k)).astype(np.uint32),
        pred_logits=np.ascontiguousarray(logits),
    )


def records_equal(a, b):
    if type(a) is not type(b):
        return False
    if not np.array_equal(a.subword_counts, b.subword_counts):
        return False
    if not np.array_equal(a.bpe_ids, b.bpe_ids):
        return False
    if isinstance(a, SanRecord):
        return np.array_equal(a.attn, b.attn)
    return np.array_equal(a.pred_ids, b.pred_ids) and np.array_equal(
        a.pred_logits, b.pred_logits
    )


class TestHeader:
    def test_example_header_bytes(self, tmp_path):
        path = tmp_path / "d.sgdv"
        path.write_bytes(struct.pack("<4sIBIII", b"SGDV", 1, 1, 0, 24, 16))
        header, records = read_dump(path)
        assert header.mode == MODE_SAN
        assert header.n_layers == 24
        assert header.n_heads == 16
        assert list(records) == []

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "d.sgdv"
        path.write_bytes(struct.pack("<4sIBIII", b"XXXX", 1, 1, 0, 2, 2))
        with pytest.raises(FormatError, match="magic"):
            read_dump(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "d.sgdv"
        path.write_bytes(struct.pack("<4sIBIII", b"SGDV", 9, 1, 0, 2, 2))
        with pytest.raises(FormatError, match="version"):
            read_dump(path)

    def test_bad_mode(self, tmp_path):
        path = tmp_path / "d.sgdv"
        path.write_bytes(struct.pack("<4sIBIII", b"SGDV", 1, 3, 0, 2, 2))
        with pytest.raises(FormatError, match="mode"):
            read_dump(path)

    def test_invalid_mode_rejected_before_writing(self):
        with pytest.raises(FormatError):
            DumpHeader(mode=3, top_k=0, n_layers=2, n_heads=2)

    def test_san_requires_zero_top_k(self):
        with pytest.raises(FormatError):
            DumpHeader(mode=MODE_SAN, top_k=5, n_layers=2, n_heads=2)

    def test_mlm_requires_positive_top_k(self):
        with pytest.raises(FormatError):
            DumpHeader(mode=MODE_MLM, top_k=0, n_layers=2, n_heads=2)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "d.sgdv"
        path.write_bytes(b"SGD")
        with pytest.raises(FormatError, match="header"):
            read_dump(path)


class TestRecords:
    def test_single_token_degenerate_record_valid(self, tmp_path):
        header = DumpHeader(mode=MODE_SAN, top_k=0, n_layers=2, n_heads=3)
        rec = SanRecord(
            subword_counts=np.array([1], dtype=np.uint32),
            bpe_ids=np.array([7], dtype=np.uint32),
            attn=np.array([[6.0]], dtype=np.float32),
        )
        path = tmp_path / "d.sgdv"
        write_dump(path, header, [rec])
        _, records = read_dump(path)
        assert records_equal(next(records), rec)

    def test_subword_sum_mismatch_names_record(self, tmp_path):
        header = DumpHeader(mode=MODE_SAN, top_k=0, n_layers=1, n_heads=1)
        good = random_san_record(np.random.default_rng(0), 1, 1)
        bad = SanRecord(
            subword_counts=np.array([2, 1], dtype=np.uint32),
            bpe_ids=np.array([1, 2], dtype=np.uint32),
            attn=np.ones((2, 2), dtype=np.float32),
        )
        with pytest.raises(RecordError, match="record 1"):
            write_dump(tmp_path / "d.sgdv", header, [good, bad])

    def test_read_side_subword_sum_mismatch(self, tmp_path):
        # forge the payload directly: L=2 but counts [2, 1]
        path = tmp_path / "d.sgdv"
        payload = struct.pack("<4sIBIII", b"SGDV", 1, 1, 0, 1, 1)
        payload += struct.pack("<II", 2, 2)
        payload += np.array([2, 1], dtype="<u4").tobytes()
        payload += np.array([5, 6], dtype="<u4").tobytes()
        payload += np.ones((2, 2), dtype="<f4").tobytes()
        path.write_bytes(payload)
        _, records = read_dump(path)
        with pytest.raises(RecordError, match="record 0"):
            list(records)

    def test_truncated_record_payload(self, tmp_path):
        header = DumpHeader(mode=MODE_SAN, top_k=0, n_layers=1, n_heads=1)
        rec = random_san_record(np.random.default_rng(1), 1, 1)
        path = tmp_path / "d.sgdv"
        write_dump(path, header, [rec])
        raw = path.read_bytes()
        path.write_bytes(raw[:-2])
        _, records = read_dump(path)
        with pytest.raises(FormatError, match="truncated"):
            list(records)

    def test_unsorted_mlm_logits_rejected(self, tmp_path):
        header = DumpHeader(mode=MODE_MLM, top_k=2, n_layers=1, n_heads=1)
        rec = MlmRecord(
            subword_counts=np.array([1], dtype=np.uint32),
            bpe_ids=np.array([0], dtype=np.uint32),
            pred_ids=np.array([[1, 2]], dtype=np.uint32),
            pred_logits=np.array([[1.0, 2.0]], dtype=np.float32),
        )
        with pytest.raises(RecordError, match="non-increasing"):
            write_dump(tmp_path / "d.sgdv", header, [rec])

    def test_mode_mismatched_record_rejected(self, tmp_path):
        header = DumpHeader(mode=MODE_MLM, top_k=2, n_layers=1, n_heads=1)
        rec = random_san_record(np.random.default_rng(2), 1, 1)
        with pytest.raises(RecordError):
            write_dump(tmp_path / "d.sgdv", header, [rec])

    def test_empty_stream_is_header_only(self, tmp_path):
        header = DumpHeader(mode=MODE_SAN, top_k=0, n_layers=4, n_heads=4)
        path = tmp_path / "d.sgdv"
        write_dump(path, header, [])
        assert path.stat().st_size == 21
        h2, records = read_dump(path)
        assert h2 == header
        assert list(records) == []

    @pytest.mark.parametrize("mode", [MODE_SAN, MODE_MLM])
    def test_round_trip_random_records(self, mode, tmp_path):
        rng = np.random.default_rng(42 + mode)
        if mode == MODE_SAN:
            header = DumpHeader(mode=mode, top_k=0, n_layers=2, n_heads=4)
            recs = [random_san_record(rng, 2, 4) for _ in range(50)]
        else:
            header = DumpHeader(mode=mode, top_k=6, n_layers=2, n_heads=4)
            recs = [random_mlm_record(rng, 6) for _ in range(50)]
        path = tmp_path / "d.sgdv"
        write_dump(path, header, recs)
        h2, out = read_dump(path)
        out = list(out)
        assert h2 == header
        assert len(out) == len(recs)
        assert all(records_equal(a, b) for a, b in zip(recs, out))
        # byte-level: rewriting what was read reproduces the file exactly
        path2 = tmp_path / "d2.sgdv"
        write_dump(path2, h2, out)
        assert path2.read_bytes() == path.read_bytes()


class TestValidator:
    def test_row_sum_flags_counted_not_fatal(self, tmp_path):
        header = DumpHeader(mode=MODE_SAN, top_k=0, n_layers=2, n_heads=3)
        rng = np.random.default_rng(9)
        good = random_san_record(rng, 2, 3)
        bad = SanRecord(
            subword_counts=np.array([1, 1], dtype=np.uint32),
            bpe_ids=np.array([1, 2], dtype=np.uint32),
            attn=np.full((2, 2), 0.5, dtype=np.float32),  # rows sum to 1, not 6
        )
        path = tmp_path / "d.sgdv"
        write_dump(path, header, [good, bad, good])
        report = validate_dump(path)
        assert report.n_records == 3
        assert report.row_sum_flags == 1

    def test_mlm_dump_has_no_row_flags(self, tmp_path):
        header = DumpHeader(mode=MODE_MLM, top_k=3, n_layers=2, n_heads=3)
        rng = np.random.default_rng(10)
        path = tmp_path / "d.sgdv"
        write_dump(path, header, [random_mlm_record(rng, 3) for _ in range(5)])
        report = validate_dump(path)
        assert report.n_records == 5
        assert report.row_sum_flags == 0


class TestLexicon:
    def test_format_example(self, tmp_path):
        path = tmp_path / "lex.tsv"
        write_lexicon(path, {"egyptologist": [4521, 14700]})
        assert path.read_text() == "egyptologist\t4521 14700\n"
        lex = read_lexicon(path)
        assert lex == {"egyptologist": [4521, 14700]}

    def test_round_trip_identity(self, tmp_path):
        rng = np.random.default_rng(4)
        lex = {
            "w%d" % k: [int(i) for i in rng.integers(0, 1000, rng.integers(1, 5))]
            for k in range(100)
        }
        path = tmp_path / "lex.tsv"
        write_lexicon(path, lex)
        assert read_lexicon(path) == lex

    def test_empty_id_list_rejected_on_write(self, tmp_path):
        with pytest.raises(ParseError):
            write_lexicon(tmp_path / "lex.tsv", {"w": []})

    def test_empty_id_list_rejected_on_read(self, tmp_text):
        p = tmp_text("w\t\n", "lex.tsv")
        with pytest.raises(ParseError, match="empty"):
            read_lexicon(p)

    def test_duplicate_word_rejected(self, tmp_text):
        p = tmp_text("w\t1\nw\t2\n", "lex.tsv")
        with pytest.raises(ParseError, match="duplicate"):
            read_lexicon(p)

    def test_non_integer_id_rejected(self, tmp_text):
        p = tmp_text("w\t1 x\n", "lex.tsv")
        with pytest.raises(ParseError, match="non-integer"):
            read_lexicon(p)
