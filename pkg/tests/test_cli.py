import numpy as np
import pytest

from bwelex import (
    EmbeddingStore,
    format_probability,
    load_embeddings,
    load_model,
    precision_at_k,
    save_embeddings,
)
from bwelex.cli import main


def write_training_files(tmp_path, seed=5):
    rng = np.random.default_rng(seed)
    src = EmbeddingStore(
        "src", [f"s{i}" for i in range(8)], rng.standard_normal((8, 3))
    )
    tgt = EmbeddingStore(
        "tgt", [f"t{i}" for i in range(6)], rng.standard_normal((6, 3))
    )
    save_embeddings(src, tmp_path / "src.txt")
    save_embeddings(tgt, tmp_path / "tgt.txt")
    with open(tmp_path / "dict.tsv", "w", encoding="utf-8") as handle:
        for i in range(8):
            handle.write(f"s{i}\tt{i % 6}\n")
    return tmp_path / "src.txt", tmp_path / "tgt.txt", tmp_path / "dict.tsv"


def fixture_model_args(data_dir):
    return [
        "--src-emb", str(data_dir / "emb_src.txt"),
        "--tgt-emb", str(data_dir / "emb_tgt.txt"),
        "--model", str(data_dir / "markup_model.bin"),
    ]


def load_fixture_model(data_dir):
    src = load_embeddings(data_dir / "emb_src.txt")
    tgt = load_embeddings(data_dir / "emb_tgt.txt")
    return load_model(data_dir / "markup_model.bin", src, tgt)


class TestTrain:
    def test_writes_model_and_log(self, tmp_path, capsys):
        src, tgt, dictionary = write_training_files(tmp_path)
        out = tmp_path / "out"
        rc = main([
            "train",
            "--src-emb", str(src), "--tgt-emb", str(tgt),
            "--dict", str(dictionary),
            "--out-dir", str(out),
            "--epochs", "5", "--eta0", "0.05",
        ])
        assert rc == 0
        assert (out / "model.bin").exists()
        assert (out / "train_log.tsv").exists()
        err = capsys.readouterr().err
        assert "trained:" in err
        model = load_model(
            out / "model.bin", load_embeddings(src), load_embeddings(tgt)
        )
        assert model.W.shape == (3, 3)

    def test_same_seed_runs_are_byte_identical(self, tmp_path):
        src, tgt, dictionary = write_training_files(tmp_path)
        outputs = []
        for name in ("a", "b"):
            out = tmp_path / name
            rc = main([
                "train",
                "--src-emb", str(src), "--tgt-emb", str(tgt),
                "--dict", str(dictionary),
                "--out-dir", str(out),
                "--epochs", "5", "--eta0", "0.05",
                "--init", "scaled_gaussian", "--seed", "3",
            ])
            assert rc == 0
            outputs.append(
                ((out / "model.bin").read_bytes(),
                 (out / "train_log.tsv").read_bytes())
            )
        assert outputs[0] == outputs[1]

    def test_missing_dictionary_exits_one(self, tmp_path, capsys):
        src, tgt, _ = write_training_files(tmp_path)
        rc = main([
            "train",
            "--src-emb", str(src), "--tgt-emb", str(tgt),
            "--dict", str(tmp_path / "absent.tsv"),
            "--out-dir", str(tmp_path / "out"),
        ])
        assert rc == 1
        err = capsys.readouterr().err
        assert "error:" in err
        assert "absent.tsv" in err

    def test_lambda_grid_writes_table(self, tmp_path):
        src, tgt, dictionary = write_training_files(tmp_path)
        out = tmp_path / "out"
        rc = main([
            "train",
            "--src-emb", str(src), "--tgt-emb", str(tgt),
            "--dict", str(dictionary),
            "--out-dir", str(out),
            "--epochs", "5", "--eta0", "0.05",
            "--lambda-grid", "0,0.01",
        ])
        assert rc == 0
        lines = (out / "grid.tsv").read_text().splitlines()
        assert lines[0].startswith("index\t")
        assert len(lines) == 3

    def test_disabled_dev_split_still_trains(self, tmp_path, capsys):
        src, tgt, dictionary = write_training_files(tmp_path)
        out = tmp_path / "out"
        rc = main([
            "train",
            "--src-emb", str(src), "--tgt-emb", str(tgt),
            "--dict", str(dictionary),
            "--out-dir", str(out),
            "--epochs", "3", "--dev-fraction", "0",
        ])
        assert rc == 0
        assert "dev_p1=n/a" in capsys.readouterr().err


class TestTranslate:
    def test_matches_library_ranking(self, data_dir, capsys):
        rc = main([
            "translate", *fixture_model_args(data_dir),
            "-n", "3", "nymphs",
        ])
        assert rc == 0
        out = capsys.readouterr().out.splitlines()
        model = load_fixture_model(data_dir)
        expected = [
            f"{rank}\t{token}\t{format_probability(prob)}"
            for rank, (token, prob) in enumerate(
                model.top_n("nymphs", 3).entries, 1
            )
        ]
        assert out == expected

    def test_unknown_word_marked_oov(self, data_dir, capsys):
        rc = main([
            "translate", *fixture_model_args(data_dir), "blarg",
        ])
        assert rc == 0
        assert capsys.readouterr().out == "blarg\tOOV-in-embeddings\n"

    def test_multiple_words_get_headers(self, data_dir, capsys):
        rc = main([
            "translate", *fixture_model_args(data_dir),
            "-n", "1", "nymphs", "music",
        ])
        assert rc == 0
        out = capsys.readouterr().out.splitlines()
        assert "# nymphs" in out
        assert "# music" in out

    def test_words_file(self, data_dir, tmp_path, capsys):
        words = tmp_path / "words.txt"
        words.write_text("nymphs\n")
        rc = main([
            "translate", *fixture_model_args(data_dir),
            "-n", "1", "--words-file", str(words),
        ])
        assert rc == 0
        assert len(capsys.readouterr().out.splitlines()) == 1

    def test_rejects_nonpositive_top_n(self, data_dir, capsys):
        rc = main([
            "translate", *fixture_model_args(data_dir), "-n", "0", "nymphs",
        ])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_no_words_is_an_error(self, data_dir, capsys):
        rc = main(["translate", *fixture_model_args(data_dir)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_model_option_reported(self, data_dir, capsys):
        rc = main([
            "translate",
            "--src-emb", str(data_dir / "emb_src.txt"),
            "--tgt-emb", str(data_dir / "emb_tgt.txt"),
            "nymphs",
        ])
        assert rc == 1
        assert "--model" in capsys.readouterr().err


class TestEval:
    def test_stdout_and_file_agree_with_library(
        self, data_dir, tmp_path, capsys
    ):
        out_file = tmp_path / "eval.tsv"
        rc = main([
            "eval", *fixture_model_args(data_dir),
            "--dict", str(data_dir / "dict.tsv"),
            "--ks", "1,2",
            "--out", str(out_file),
        ])
        assert rc == 0
        stdout = capsys.readouterr().out.splitlines()

        model = load_fixture_model(data_dir)
        with open(data_dir / "dict.tsv", encoding="utf-8") as handle:
            pairs = [tuple(line.split("\t")) for line in
                     handle.read().splitlines()]
        result = precision_at_k(model, pairs, [1, 2])
        expected = [
            f"{k}\t{result.precision_at_k[k]:.6f}" for k in (1, 2)
        ]
        assert stdout == expected
        file_lines = out_file.read_text().splitlines()
        assert file_lines[1:3] == expected


class TestMarkup:
    def test_policy_none_passthrough(self, data_dir, capsys):
        rc = main([
            "markup",
            "--corpus", str(data_dir / "corpus.txt"),
            "--vocab", str(data_dir / "sysvocab.txt"),
            "--policy", "none",
        ])
        assert rc == 0
        captured = capsys.readouterr()
        assert captured.out == (data_dir / "golden_markup_none.txt").read_text()
        assert len(captured.out.splitlines()) == 5

    def test_bwe_all_output_matches_golden(self, data_dir, tmp_path, capsys):
        out = tmp_path / "marked.txt"
        report = tmp_path / "report.txt"
        rc = main([
            "markup", *fixture_model_args(data_dir),
            "--corpus", str(data_dir / "corpus.txt"),
            "--vocab", str(data_dir / "sysvocab.txt"),
            "--policy", "bwe_all", "--top-n", "3",
            "--out", str(out),
            "--report-out", str(report),
        ])
        assert rc == 0
        assert out.read_bytes() == (
            data_dir / "golden_markup_bwe_all.txt"
        ).read_bytes()
        assert report.read_bytes() == (
            data_dir / "golden_report_bwe_all.txt"
        ).read_bytes()
        err = capsys.readouterr().err
        assert "marked 7 of 7 OOV tokens" in err
        assert "1 verbatim fallbacks" in err


class TestOovScan:
    def test_report_rows(self, data_dir, tmp_path, capsys):
        out = tmp_path / "report.txt"
        rc = main([
            "oov-scan",
            "--corpus", str(data_dir / "corpus.txt"),
            "--vocab", str(data_dir / "sysvocab.txt"),
            "--out", str(out),
        ])
        assert rc == 0
        stdout = capsys.readouterr().out
        assert stdout == (
            "sentences\t5\n"
            "tokens\t100\n"
            "oov_all\t7\t0.070000\n"
            "oov_cw\t2\t0.020000\n"
        )
        assert out.read_text() == stdout


class TestExportCompressed:
    def test_written_files_reproduce_scores(self, data_dir, tmp_path):
        out = tmp_path / "out"
        rc = main([
            "export-compressed", *fixture_model_args(data_dir),
            "--out-dir", str(out),
        ])
        assert rc == 0
        # the fixture model weight matrix is the 4x4 identity
        src = load_embeddings(out / "emb_src-cmp-k4.txt")
        tgt = load_embeddings(out / "emb_tgt-cmp-k4.txt")
        model = load_fixture_model(data_dir)
        for e in src.tokens:
            for f in tgt.tokens:
                got = float(src.lookup(e) @ tgt.lookup(f))
                assert got == pytest.approx(model.score(e, f), abs=1e-4)

    def test_explicit_rank_in_names(self, data_dir, tmp_path):
        out = tmp_path / "out"
        rc = main([
            "export-compressed", *fixture_model_args(data_dir),
            "--out-dir", str(out), "-k", "2",
        ])
        assert rc == 0
        assert (out / "emb_src-cmp-k2.txt").exists()
        assert (out / "emb_tgt-cmp-k2.txt").exists()


class TestConfigFile:
    def test_config_supplies_missing_flags(self, data_dir, tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text(
            "# translation defaults\n"
            "top_n=2\n"
            f"src_emb={data_dir / 'emb_src.txt'}\n"
            f"tgt_emb={data_dir / 'emb_tgt.txt'}\n"
            f"model={data_dir / 'markup_model.bin'}\n"
        )
        rc = main(["translate", "--config", str(config), "nymphs"])
        assert rc == 0
        assert len(capsys.readouterr().out.splitlines()) == 2

    def test_flag_overrides_config(self, data_dir, tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text(
            "top_n=2\n"
            f"src_emb={data_dir / 'emb_src.txt'}\n"
            f"tgt_emb={data_dir / 'emb_tgt.txt'}\n"
            f"model={data_dir / 'markup_model.bin'}\n"
        )
        rc = main([
            "translate", "--config", str(config), "-n", "1", "nymphs",
        ])
        assert rc == 0
        assert len(capsys.readouterr().out.splitlines()) == 1

    def test_missing_config_file_errors(self, data_dir, capsys):
        rc = main([
            "translate", "--config", "/nonexistent/run.cfg", "nymphs",
        ])
        assert rc == 1
        assert "config file not found" in capsys.readouterr().err

    def test_malformed_config_line_reports_position(self, tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text("top_n=2\nnot a pair\n")
        rc = main(["translate", "--config", str(config), "x"])
        assert rc == 1
        assert f"{config}:2" in capsys.readouterr().err
