import os

import pytest

from subqe import cli
from subqe import config as cfg
from subqe.errors import ConfigError
from subqe.labeler import QeLabel, read_labeled_tsv
from subqe.subtitles import read_pairs_tsv, write_pairs_tsv
from subqe.toydata import (
    toy_dictionary,
    toy_embeddings,
    toy_parallel_corpus,
    write_embeddings_file,
)

SRT_A = (
    "1\n00:00:01,000 --> 00:00:02,000\nHello there.\n\n"
    "2\n00:00:03,000 --> 00:00:04,000\nHow are you?\n\n"
    "3\n00:00:05,000 --> 00:00:06,000\nGoodbye.\n"
)
SRT_B = (
    "1\n00:00:01,100 --> 00:00:02,100\nHallo du.\n\n"
    "2\n00:00:03,000 --> 00:00:04,000\nWie geht es?\n\n"
    "3\n00:00:05,200 --> 00:00:06,100\nTschuess.\n"
)


@pytest.fixture(scope="module")
def ws(tmp_path_factory):
    """Workspace with embeddings, a pair corpus, SRT files, and a config."""
    root = tmp_path_factory.mktemp("cli")
    dictionary = toy_dictionary(40, seed=1)
    src_table, tgt_table = toy_embeddings(dictionary, dim=8, seed=1)
    write_embeddings_file(src_table, root / "src.vec")
    write_embeddings_file(tgt_table, root / "tgt.vec")
    pairs = toy_parallel_corpus(30, dictionary, seed=2, length_range=(3, 8))
    write_pairs_tsv(pairs, root / "pairs.tsv")
    (root / "src_srt").mkdir()
    (root / "tgt_srt").mkdir()
    (root / "src_srt" / "ep1.srt").write_text(SRT_A)
    (root / "tgt_srt" / "ep1.srt").write_text(SRT_B)
    config = cfg.PipelineConfig(
        src_embeddings=str(root / "src.vec"),
        tgt_embeddings=str(root / "tgt.vec"),
        seed=11,
        n_samples=60,
        n_trees=10,
        embed_dim=8,
        lstm_hidden=4,
        conv_channels="4,4",
        fc_width=8,
        dropout=0.0,
        batch_size=16,
        max_epochs=3,
    )
    (root / "subqe.conf").write_text(cfg.emit(config))
    return root


def _run(ws, *argv):
    return cli.main(["--config", str(ws / "subqe.conf"), *argv])


@pytest.fixture(scope="module")
def labeled_tsv(ws):
    out = ws / "labeled.tsv"
    assert _run(ws, "label", "--pairs", str(ws / "pairs.tsv"),
                "--out", str(out)) == 0
    return out


@pytest.fixture(scope="module")
def checkpoint(ws, labeled_tsv):
    out = ws / "model.pt"
    assert _run(ws, "train-qe", "--dataset", str(labeled_tsv),
                "--out", str(out)) == 0
    return out


class TestConfig:
    def test_emit_parse_roundtrip(self, ws):
        config = cfg.load(ws / "subqe.conf")
        assert config == cfg.parse(cfg.emit(config))
        assert config.n_trees == 10
        assert config.seed == 11

    def test_comments_and_blanks(self):
        config = cfg.parse("# a comment\n\nseed = 9  # trailing\n")
        assert config.seed == 9

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            cfg.parse("no_such_key = 1\n")

    def test_bad_value(self):
        with pytest.raises(ConfigError):
            cfg.parse("seed = banana\n")

    def test_validate_same_langs(self):
        config = cfg.PipelineConfig(source_lang="de", target_lang="de")
        with pytest.raises(ConfigError):
            config.validate()

    def test_validate_missing_path(self):
        config = cfg.PipelineConfig(src_embeddings="/no/such/file.vec")
        with pytest.raises(ConfigError):
            config.validate()

    def test_env_data_dir(self, monkeypatch, tmp_path):
        monkeypatch.setenv(cfg.ENV_DATA_DIR, str(tmp_path))
        config = cfg.PipelineConfig()
        assert config.resolve_path("x.vec") == str(tmp_path / "x.vec")
        assert config.resolve_path("/abs/x.vec") == "/abs/x.vec"


class TestAlign:
    def test_end_to_end(self, ws, capsys):
        out = ws / "aligned.tsv"
        rc = _run(ws, "align", "--src", str(ws / "src_srt"),
                  "--tgt", str(ws / "tgt_srt"), "--out", str(out))
        assert rc == 0
        pairs = read_pairs_tsv(out)
        assert len(pairs) == 3
        assert pairs[0].source_text == "Hello there."
        assert pairs[0].target_text == "Hallo du."
        assert "aligned 3 pairs" in capsys.readouterr().out


class TestSynth:
    def test_end_to_end_and_reproducible(self, ws, capsys):
        a, b = ws / "synth_a.tsv", ws / "synth_b.tsv"
        for out in (a, b):
            rc = _run(ws, "synth", "--pairs", str(ws / "pairs.tsv"),
                      "--out", str(out),
                      "--src-srt", str(ws / "src_srt" / "ep1.srt"),
                      "--tgt-srt", str(ws / "tgt_srt" / "ep1.srt"))
            assert rc == 0
        assert a.read_bytes() == b.read_bytes()
        # captions + scrambles + random alignments for all 30 inputs
        assert len(read_pairs_tsv(a)) >= 90

    def test_seed_changes_output(self, ws):
        out = ws / "synth_c.tsv"
        rc = cli.main(["--config", str(ws / "subqe.conf"), "--seed", "99",
                       "synth", "--pairs", str(ws / "pairs.tsv"),
                       "--out", str(out)])
        assert rc == 0
        assert out.read_bytes() != (ws / "synth_a.tsv").read_bytes()


class TestLabel:
    def test_outputs(self, ws, labeled_tsv, capsys):
        labeled = read_labeled_tsv(labeled_tsv)
        assert len(labeled) > 0
        assert {lp.label for lp in labeled} <= set(QeLabel)
        assert os.path.exists(str(labeled_tsv) + ".discards.tsv")


class TestTrainRfc:
    def test_end_to_end(self, ws, capsys):
        out = ws / "rfc.npz"
        rc = _run(ws, "train-rfc", "--corpus", str(ws / "pairs.tsv"),
                  "--out", str(out))
        assert rc == 0
        assert out.exists()
        assert os.path.exists(str(out) + ".layout.tsv")
        assert "train accuracy" in capsys.readouterr().out
        layout = open(str(out) + ".layout.tsv").read().splitlines()
        assert len(layout) == 273


class TestTrainQe:
    def test_artifacts(self, ws, checkpoint, capsys):
        assert checkpoint.exists()
        log = open(str(checkpoint) + ".log").read().splitlines()
        assert len(log) >= 1
        epoch, loss, lr, seconds = log[0].split("\t")
        assert epoch == "1" and lr == "0.001"

    def test_byte_identical_rerun(self, ws, labeled_tsv, checkpoint):
        # same basename: the torch zip container embeds the archive name
        (ws / "rerun").mkdir()
        again = ws / "rerun" / "model.pt"
        assert _run(ws, "train-qe", "--dataset", str(labeled_tsv),
                    "--out", str(again)) == 0
        assert again.read_bytes() == checkpoint.read_bytes()


class TestEval:
    def test_full_report(self, ws, labeled_tsv, checkpoint, capsys):
        out = ws / "eval.txt"
        rc = _run(ws, "eval", "--checkpoint", str(checkpoint),
                  "--dataset", str(labeled_tsv), "--out", str(out))
        assert rc == 0
        text = out.read_text()
        assert "Accuracy" in text and "F-Score" in text

    def test_positives_only(self, ws, labeled_tsv, checkpoint, capsys):
        labeled = read_labeled_tsv(labeled_tsv)
        positives = [lp for lp in labeled if lp.label != QeLabel.BAD]
        pos_tsv = ws / "positives.tsv"
        from subqe.labeler import write_labeled_tsv
        write_labeled_tsv(positives, pos_tsv)
        rc = _run(ws, "eval", "--checkpoint", str(checkpoint),
                  "--dataset", str(pos_tsv), "--positives-only")
        assert rc == 0
        assert "FNR" in capsys.readouterr().out


class TestScore:
    def test_single_pair(self, ws, checkpoint, capsys):
        pairs = read_pairs_tsv(ws / "pairs.tsv")
        rc = _run(ws, "score", "--checkpoint", str(checkpoint),
                  "--pair", f"{pairs[0].source_text} ||| {pairs[0].target_text}",
                  "--dump-activations")
        assert rc == 0
        out = capsys.readouterr().out.splitlines()
        label, *probs = out[0].split("\t")
        assert label in ("good", "loose", "bad")
        assert len(probs) == 3
        assert out[1].startswith("activations\t")


class TestExitCodes:
    def test_runtime_error_is_one(self, ws, capsys):
        rc = _run(ws, "align", "--src", "/no/such/dir",
                  "--tgt", str(ws / "tgt_srt"), "--out", "/dev/null")
        assert rc == 1
        assert capsys.readouterr().err.startswith("error:")

    def test_config_error_is_two(self, ws, tmp_path, capsys):
        bad = tmp_path / "bad.conf"
        bad.write_text("theta1 = 7.0\n")
        rc = cli.main(["--config", str(bad), "align", "--src", "x",
                       "--tgt", "y", "--out", "z"])
        assert rc == 2
        assert capsys.readouterr().err.startswith("config-error:")
