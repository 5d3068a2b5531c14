import numpy as np
import pytest

from semglove import cli
from semglove.cooc import CoocMatrix, load_bin, save_bin
from semglove.dumps import MODE_MLM, DumpHeader, MlmRecord, write_dump
from semglove.trainer import load_vectors


def run(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


CORPUS = "\n".join(
    ["the cat sat on the mat", "the dog sat on the cat",
     "a cat and a dog met", "the mat was warm"] * 6
) + "\n"


@pytest.fixture
def corpus_file(tmp_path):
    p = tmp_path / "corpus.txt"
    p.write_text(CORPUS)
    return p


class TestUsage:
    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as e:
            cli.main(["train", "--help"])
        assert e.value.code == 0
        assert "usage" in capsys.readouterr().out

    def test_unknown_subcommand_exits_two(self, capsys):
        with pytest.raises(SystemExit) as e:
            cli.main(["frobnicate"])
        assert e.value.code == 2

    def test_unknown_flag_exits_two(self, capsys):
        with pytest.raises(SystemExit) as e:
            cli.main(["vocab", "--bogus", "x"])
        assert e.value.code == 2

    def test_version_prints_and_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as e:
            cli.main(["--version"])
        assert e.value.code == 0
        assert "semglove" in capsys.readouterr().out


class TestConfig:
    def test_dry_run_echoes_builtin_defaults(self, capsys):
        code, out, _ = run(["train", "--dry-run"], capsys)
        assert code == 0
        assert "x_max=10.0" in out
        assert "alpha=0.75" in out
        assert "dim=300" in out
        assert "iterations=100" in out
        assert "lr=0.05" in out

    def test_unknown_config_key_exits_two_naming_it(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.ini"
        cfg.write_text("x_max=5\nbogus_key=1\n")
        code, _, err = run(["train", "--config", str(cfg), "--dry-run"], capsys)
        assert code == 2
        assert "bogus_key" in err
        assert err.startswith("error: config:")

    def test_flag_overrides_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.ini"
        cfg.write_text("x_max=5\ndim=40\n")
        code, out, _ = run(
            ["train", "--config", str(cfg), "--xmax", "7", "--dry-run"], capsys
        )
        assert code == 0
        assert "x_max=7.0" in out
        assert "dim=40" in out  # file value survives where no flag given

    def test_config_comments_and_blank_lines_ignored(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.ini"
        cfg.write_text("# a comment\n\nseed=9\n")
        code, out, _ = run(["shuffle", "--config", str(cfg), "--dry-run"], capsys)
        assert code == 0
        assert "seed=9" in out

    def test_malformed_config_line_exits_two(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.ini"
        cfg.write_text("justakey\n")
        code, _, err = run(["train", "--config", str(cfg), "--dry-run"], capsys)
        assert code == 2

    def test_missing_required_value_exits_two(self, capsys):
        code, _, err = run(["vocab"], capsys)
        assert code == 2
        assert "corpus" in err

    def test_out_of_range_value_exits_two(self, tmp_path, capsys):
        corpus = tmp_path / "c.txt"
        corpus.write_text("a b\n")
        code, _, err = run(
            ["vocab", "--corpus", str(corpus), "--min-count", "0",
             "--out", str(tmp_path / "v.txt")],
            capsys,
        )
        assert code == 2
        assert err.startswith("error: config:")


class TestDataErrors:
    def test_missing_file_is_io_error_exit_one(self, tmp_path, capsys):
        code, _, err = run(
            ["vocab", "--corpus", str(tmp_path / "nope.txt"), "--out",
             str(tmp_path / "v.txt")],
            capsys,
        )
        assert code == 1
        assert err.startswith("error: io:")

    def test_bad_binary_exits_one_with_format_category(self, tmp_path, capsys):
        bad = tmp_path / "bad.bin"
        bad.write_bytes(b"\0" * 10)
        code, _, err = run(
            ["shuffle", "--in", str(bad), "--out", str(tmp_path / "o.bin")], capsys
        )
        assert code == 1
        assert err.startswith("error: format:")


class TestPipeline:
    def test_vocab_window_shuffle_train_eval(self, tmp_path, corpus_file, capsys):
        vocab_path = tmp_path / "vocab.txt"
        code, _, _ = run(
            ["vocab", "--corpus", str(corpus_file), "--min-count", "2",
             "--out", str(vocab_path)],
            capsys,
        )
        assert code == 0
        assert vocab_path.exists()

        cooc_path = tmp_path / "cooccur.bin"
        code, _, _ = run(
            ["cooc-window", "--corpus", str(corpus_file), "--vocab", str(vocab_path),
             "--window", "3", "--out", str(cooc_path)],
            capsys,
        )
        assert code == 0

        shuf_path = tmp_path / "shuf.bin"
        code, _, _ = run(
            ["shuffle", "--in", str(cooc_path), "--out", str(shuf_path), "--seed", "1"],
            capsys,
        )
        assert code == 0
        assert shuf_path.stat().st_size == cooc_path.stat().st_size

        vec_path = tmp_path / "vectors.txt"
        code, _, _ = run(
            ["train", "--cooc", str(shuf_path), "--vocab", str(vocab_path),
             "--dim", "8", "--iters", "20", "--out", str(vec_path)],
            capsys,
        )
        assert code == 0
        vectors = load_vectors(vec_path)
        assert vectors.dim == 8

        ds = tmp_path / "sim.tsv"
        ds.write_text("cat\tdog\t9.0\ncat\tmat\t3.0\nthe\ton\t1.0\n")
        code, out, _ = run(
            ["eval", "--vectors", str(vec_path), "--dataset", str(ds)], capsys
        )
        assert code == 0
        assert "sim" in out and "3/3" in out

        code, out, _ = run(
            ["nearest", "--vectors", str(vec_path), "--word", "cat", "--k", "3"],
            capsys,
        )
        assert code == 0
        assert len(out.strip().splitlines()) == 3

    def test_pipeline_meta_command(self, tmp_path, corpus_file, capsys):
        out_dir = tmp_path / "run"
        ds = tmp_path / "sim.tsv"
        ds.write_text("cat\tdog\t9.0\ncat\tmat\t3.0\n")
        code, out, err = run(
            ["pipeline", "--corpus", str(corpus_file), "--out-dir", str(out_dir),
             "--min-count", "2", "--window", "3", "--dim", "6", "--iters", "5",
             "--dataset", str(ds)],
            capsys,
        )
        assert code == 0
        for name in ("vocab.txt", "cooccur.bin", "shuf.bin", "vectors.txt"):
            assert (out_dir / name).exists()
        assert "sim" in out

    def test_pipeline_driven_entirely_from_a_config_file(
        self, tmp_path, corpus_file, capsys
    ):
        out_dir = tmp_path / "run"
        ds = tmp_path / "sim.tsv"
        ds.write_text("cat\tdog\t9.0\ncat\tmat\t3.0\n")
        conf = tmp_path / "run.conf"
        conf.write_text(
            f"corpus={corpus_file}\n"
            f"out_dir={out_dir}\n"
            "builder=window\n"
            "min_count=2\n"
            "window=3\n"
            "dim=6\n"
            "iterations=5\n"
            f"dataset={ds}\n"
        )
        code, out, _ = run(["pipeline", "--config", str(conf)], capsys)
        assert code == 0
        assert (out_dir / "vectors.txt").exists()
        assert "sim" in out

    def test_cooc_intersect(self, tmp_path, capsys):
        a = CoocMatrix(5)
        a.accumulate(0, 1, 7.0)
        a.accumulate(1, 2, 7.0)
        b = CoocMatrix(5)
        b.accumulate(0, 1, 2.0)
        pa, pb, po = (tmp_path / n for n in ("a.bin", "b.bin", "o.bin"))
        save_bin(a, pa)
        save_bin(b, pb)
        code, _, _ = run(
            ["cooc-intersect", "--support", str(pa), "--values", str(pb),
             "--out", str(po)],
            capsys,
        )
        assert code == 0
        assert dict(load_bin(po).items()) == {(0, 1): 2.0}

    def test_validate_dump_cli(self, tmp_path, capsys):
        path = tmp_path / "m.sgdv"
        header = DumpHeader(mode=MODE_MLM, top_k=2, n_layers=1, n_heads=1)
        rec = MlmRecord(
            subword_counts=np.array([1], dtype=np.uint32),
            bpe_ids=np.array([0], dtype=np.uint32),
            pred_ids=np.array([[1, 2]], dtype=np.uint32),
            pred_logits=np.array([[2.0, 1.0]], dtype=np.float32),
        )
        write_dump(path, header, [rec])
        code, out, _ = run(["validate-dump", "--dump", str(path)], capsys)
        assert code == 0
        assert "MLM dump: 1 records, 0 row-sum flags" in out

    def test_validate_dump_bad_magic_exits_one(self, tmp_path, capsys):
        path = tmp_path / "m.sgdv"
        path.write_bytes(b"JUNKJUNKJUNKJUNKJUNKJ")
        code, _, err = run(["validate-dump", "--dump", str(path)], capsys)
        assert code == 1
        assert err.startswith("error: format:")
