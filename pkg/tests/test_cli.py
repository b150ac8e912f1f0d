"""Command-line driver smoke tests (in-process)."""

import csv

import pytest

from gastnet.harness.cli import main

TINY = [
    "--n_source_labeled", "24", "--n_source_unlabeled", "24", "--n_target_unlabeled", "24",
    "--n_validation", "12", "--n_test", "20", "--word_dim", "8", "--d_model", "8", "--pt_heads", "2",
    "--gat_heads", "2", "--gat_head_dim", "3", "--tag_dim", "4", "--rel_dim", "4", "--epochs", "1", "--batch_size", "8",
]


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "run"
    assert main(["train", "--seed", "2", *TINY, "--out", str(out)]) == 0
    return out


def test_train_writes_report_and_checkpoint(run_dir):
    assert (run_dir / "report.json").exists()
    assert (run_dir / "checkpoint" / "manifest.txt").exists()
    assert "seed = 2" in (run_dir / "checkpoint" / "config.txt").read_text()


def test_eval(run_dir, capsys):
    assert main(["eval", str(run_dir / "checkpoint"), "--split", "validation"]) == 0
    assert capsys.readouterr().out.startswith("validation accuracy")


def test_export(run_dir, tmp_path):
    out = tmp_path / "emb.tsv"
    assert main(["export-emb", str(run_dir / "checkpoint"), "--out", str(out), "--splits", "test"]) == 0
    assert len(out.read_text().splitlines()) == 21


def test_config_file(tmp_path, capsys):
    conf = tmp_path / "c.conf"
    conf.write_text("n_source_labeled = 30\nn_test = 10\n", encoding="utf-8")
    assert main(["synth", "--config", str(conf), "--out", str(tmp_path / "corpus")]) == 0
    out = capsys.readouterr().out
    assert "source_labeled: 30 sentences" in out and "test: 10 sentences" in out


def test_stats_two_domains(tmp_path):
    path = tmp_path / "stats.csv"
    # sizes are whole template cycles (2 labels x 11 skeletons), so the shares match exactly
    sizes = [f"--n_{k}={n}" for k, n in (("source_labeled", 44), ("source_unlabeled", 22), ("target_unlabeled", 44), ("validation", 22), ("test", 22))]
    assert main(["stats", *sizes, "--csv", str(path)]) == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["relation", "books", "kitchen"]
    for _, a, b in rows[1:]:
        assert abs(float(a) - float(b)) < 1e-9


def test_stats_from_files(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    assert main(["synth", *TINY, "--out", str(corpus)]) == 0
    capsys.readouterr()
    assert main(["stats", "--files", str(corpus / "test.conllu"), str(corpus / "validation.conllu")]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "relation,test,validation"


def test_ablate_and_ratio(tmp_path):
    assert main(["ablate", *TINY, "--csv", str(tmp_path / "a.csv")]) == 0
    assert len((tmp_path / "a.csv").read_text().splitlines()) == 7
    assert main(["ratio-study", *TINY, "--ratios", "0.5,1", "--csv", str(tmp_path / "r.csv")]) == 0
    assert len((tmp_path / "r.csv").read_text().splitlines()) == 3


def test_errors_exit_nonzero(capsys):
    assert main(["train", "--no_such_key", "1"]) == 2
    assert "unknown configuration key" in capsys.readouterr().err
    assert main(["ratio-study", *TINY, "--ratios", "0.01"]) == 2
    assert main(["ratio-study", *TINY, "--ratios", "a,b"]) == 2


def test_subcommand_required():
    with pytest.raises(SystemExit):
        main([])
