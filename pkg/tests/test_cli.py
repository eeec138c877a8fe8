import numpy as np
import pytest

from gpsdec.cli import main
from gpsdec.codes import bch_build, read_alist
from gpsdec.config import ConfigError, parse_config, parse_float_list
from gpsdec.gps import load_checkpoint
from gpsdec.harness import SimReport
from gpsdec.node_embed import load_embeddings


def test_build_code(capsys, tmp_path):
    assert main(["build-code", "--n", "31", "--k", "16", "--out", str(tmp_path / "h")]) == 0
    out = capsys.readouterr().out
    assert "t=3" in out and "|PG|=155" in out
    assert np.array_equal(read_alist(tmp_path / "h"), bch_build(31, 16).H)


def test_bad_code_exits_2(capsys):
    assert main(["build-code", "--n", "31", "--k", "17"]) == 2
    assert "error" in capsys.readouterr().err


def test_alist_export_import(capsys, tmp_path):
    path = tmp_path / "h.alist"
    assert main(["export-alist", "--n", "15", "--k", "7", "--out", str(path)]) == 0
    assert main(["import-alist", "--file", str(path), "--n", "15", "--k", "7"]) == 0
    out = capsys.readouterr().out
    assert "n=15 checks=8 rank=8" in out and "defines BCH(15,7)" in out


def test_cycle_stats(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["cycle-stats", "--n", "31", "--k", "16", "--normalizer", "2", "--out",
                 str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "node_index,count,normalized" and len(lines) == 32
    assert lines[-1] == "30,0,0.0"


def test_simulate_deterministic_and_compare(tmp_path):
    args = ["--seed", "4", "simulate", "--n", "31", "--k", "16", "--snr", "2,3",
            "--min-error-words", "30", "--block-words", "100"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a), "--timing", str(tmp_path / "t.csv")]) == 0
    assert main(["--threads", "2"] + args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rep = SimReport.from_csv(a.read_text())
    assert rep.meta["seed"] == "4" and len(rep.rows) == 2
    ident = tmp_path / "i.csv"
    assert main(args + ["--strategy", "identity", "--out", str(ident)]) == 0
    table = tmp_path / "cmp.csv"
    assert main(["compare", str(a), str(ident), "--out", str(table), "--plot",
                 str(tmp_path / "p.dat")]) == 0
    assert table.read_text().splitlines()[0] == "snr_db,identity,random_perm"


def test_config_file_and_precedence(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# run\nn = 7\nk = 4\nsnr-list = 1, 2\nmin_error_words = 5\nseed = 9\n")
    out = tmp_path / "r.csv"
    assert main(["--config", str(conf), "simulate", "--out", str(out)]) == 0
    rep = SimReport.from_csv(out.read_text())
    assert [r.snr_db for r in rep.rows] == [1.0, 2.0] and rep.meta["seed"] == "9"
    assert main(["--config", str(conf), "--seed", "2", "simulate", "--out", str(out)]) == 0
    assert SimReport.from_csv(out.read_text()).meta["seed"] == "2"
    conf.write_text("bogus = 1\n")
    assert main(["--config", str(conf), "simulate"]) == 2


def test_config_parser():
    assert parse_config("kappa = 1  # top\n") == {"kappa": "1"}
    with pytest.raises(ConfigError):
        parse_config("n 31\n")
    assert parse_float_list("2, 4 6") == (2.0, 4.0, 6.0)


def test_train_embed_train_gps_simulate(tmp_path):
    emb, ckpt, log = tmp_path / "e.txt", tmp_path / "g.txt", tmp_path / "log.csv"
    assert main(["train-embed", "--n", "7", "--k", "4", "--num-walks", "20", "--dim", "8",
                 "--epochs", "1", "--out", str(emb)]) == 0
    assert load_embeddings(emb).shape == (10, 8)
    assert main(["train-gps", "--n", "7", "--k", "4", "--embed", str(emb), "--d-p", "8",
                 "--batch-size", "16", "--num-batches", "4", "--heldout-size", "16",
                 "--log-every", "2", "--snr-min", "-2", "--snr-max", "3", "--out", str(ckpt),
                 "--log", str(log)]) == 0
    p2v, _ = load_checkpoint(ckpt)
    assert p2v.d_w == 8
    assert log.read_text().splitlines()[0] == "batch,loss,heldout_loss"
    out = tmp_path / "s.csv"
    assert main(["simulate", "--n", "7", "--k", "4", "--strategy", "gps_top2", "--checkpoint",
                 str(ckpt), "--snr", "2", "--min-error-words", "5", "--out", str(out)]) == 0
    rep = SimReport.from_csv(out.read_text())
    assert rep.strategy == "gps_top2" and len(rep.meta["checkpoint_sha256"]) == 64


def test_gps_without_checkpoint_fails(capsys):
    assert main(["simulate", "--n", "7", "--k", "4", "--strategy", "gps_top1"]) == 2
