"""Configuration, training loop, checkpoints, ablations, ratio study and export."""

import json

import numpy as np
import pytest

from gastnet.harness.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from gastnet.harness.config import ConfigError, ExperimentConfig, parse_overrides
from gastnet.harness.experiments import (
    ABLATION_HEADER,
    StudyError,
    export_embeddings,
    run_ablation_matrix,
    sample_ratio_study,
    stratified_subsample,
)
from gastnet.harness.train import EvaluationError, RunReport, TrainingDiverged, build_model, evaluate, load_splits, train
from gastnet.corpus import write_conllu

SMALL = dict(
    n_source_labeled=48, n_source_unlabeled=48, n_target_unlabeled=48, n_validation=24, n_test=40,
    word_dim=8, d_model=8, pt_heads=2, tag_dim=4, rel_dim=4, gat_heads=2, gat_head_dim=3,
    batch_size=16, epochs=2, lr=1e-2,
)


def small(**kw):
    return ExperimentConfig(**{**SMALL, **kw})


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = small()
    report, model = train(cfg, out_dir=out)
    return cfg, report, model, out


# ---------------------------------------------------------------- configuration


def test_defaults_follow_reference_settings():
    cfg = ExperimentConfig()
    assert (cfg.lr, cfg.batch_size, cfg.dropout) == (1e-4, 32, 0.25)
    assert (cfg.lambda_c, cfg.lambda_d, cfg.lambda_a) == (1.0, 1.0, 0.8)
    assert (cfg.tag_dim, cfg.rel_dim, cfg.pt_heads, cfg.gat_heads) == (30, 30, 8, 3)
    assert cfg.strategy == "ids" and cfg.ablation == "none" and not cfg.residual


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "c.conf"
    path.write_text("# comment\nlr = 0.01\nresidual = yes\nsource_domain = dvd\n", encoding="utf-8")
    cfg = ExperimentConfig.load(path, parse_overrides(["--epochs", "3", "--gat-heads=2"]))
    assert cfg.lr == 0.01 and cfg.residual and cfg.epochs == 3 and cfg.gat_heads == 2 and cfg.source_domain == "dvd"
    again = ExperimentConfig.from_mapping({k: str(v) for k, v in cfg.to_dict().items()})
    assert again == cfg


@pytest.mark.parametrize(
    "bad",
    [dict(d_model=30, pt_heads=8), dict(strategy="mmd"), dict(ablation="non_everything"), dict(dropout=1.0), dict(lambda_a=-1)],
)
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig(**bad)


def test_unknown_key_and_bad_value():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"learning_rate": "1"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"epochs": "many"})
    with pytest.raises(ConfigError):
        parse_overrides(["epochs", "3"])
    with pytest.raises(ConfigError):
        parse_overrides(["--epochs"])


def test_ablation_wiring():
    assert ExperimentConfig(ablation="non_ids").effective_strategy == "grl"
    assert ExperimentConfig(ablation="non_ids").loss_weights().lambda_a == 0.0
    assert ExperimentConfig(strategy="grl").loss_weights().lambda_a == 0.0
    assert ExperimentConfig(ablation="non_hgat").hgat_config() is None
    assert not ExperimentConfig(ablation="non_pos").pos_config().use_tags
    assert not ExperimentConfig(ablation="non_agg").hgat_config().use_agg


# ---------------------------------------------------------------- training


def test_report_contents(trained):
    cfg, report, _, out = trained
    assert len(report.epochs) == cfg.epochs
    assert 0.0 <= report.target_test_acc <= 1.0 and 0.0 <= report.best_val_acc <= 1.0
    assert report.best_val_acc == max(e.val_acc for e in report.epochs)
    assert all(0.0 <= e.disc_acc <= 1.0 for e in report.epochs)
    raw = json.loads((out / "report.json").read_text())
    assert raw["config"]["seed"] == cfg.seed and "wall_clock_s" in raw
    assert RunReport.from_json((out / "report.json").read_text()).canonical() == report.canonical()


def test_selected_weights_score_best_validation(trained):
    cfg, report, model, _ = trained
    splits = load_splits(cfg)
    assert evaluate(model, splits.validation) == report.best_val_acc
    assert evaluate(model, splits.test) == report.target_test_acc


def test_training_is_deterministic(trained):
    cfg, report, _, _ = trained
    again, _ = train(cfg)
    assert again.canonical() == report.canonical()
    other, _ = train(cfg.replace(seed=1))
    assert other.losses != report.losses


def test_source_only_loss_decreases():
    cfg = small(lambda_d=0.0, lambda_a=0.0, epochs=5, dropout=0.0, lr=3e-3)
    losses = train(cfg)[0].losses
    for prev, cur in zip(losses, losses[1:]):
        assert cur <= prev * 1.05


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_is_reported():
    with pytest.raises(TrainingDiverged):
        train(small(lr=1e300, epochs=1))


def test_untrained_model_near_chance():
    cfg = small(n_test=400)
    splits = load_splits(cfg)
    acc = evaluate(build_model(cfg, splits), splits.test)
    assert abs(acc - 0.5) <= 0.1


def test_evaluate_contracts(trained):
    cfg, _, model, _ = trained
    splits = load_splits(cfg)
    with pytest.raises(EvaluationError):
        evaluate(model, splits.target_unlabeled)
    with pytest.raises(EvaluationError):
        evaluate(model, [])


def test_corpus_from_directory(tmp_path):
    cfg = small()
    splits = load_splits(cfg)
    for name in splits.names():
        write_conllu(tmp_path / f"{name}.conllu", splits.split(name))
    again = load_splits(cfg.replace(data_dir=str(tmp_path)))
    for name in splits.names():
        assert again.split(name) == splits.split(name)


# ---------------------------------------------------------------- checkpoints


def test_checkpoint_round_trip(trained, tmp_path):
    cfg, report, model, out = trained
    loaded, loaded_cfg = load_checkpoint(out / "checkpoint")
    assert loaded_cfg == cfg
    splits = load_splits(cfg)
    assert evaluate(loaded, splits.test) == evaluate(model, splits.test)
    np.testing.assert_array_equal(loaded.embed(list(splits.test)), model.embed(list(splits.test)))
    save_checkpoint(tmp_path / "copy", loaded, loaded_cfg)
    assert (tmp_path / "copy" / "params.bin").read_bytes() == (out / "checkpoint" / "params.bin").read_bytes()


def test_checkpoint_errors(trained, tmp_path):
    _, _, model, out = trained
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing")
    bad = tmp_path / "bad"
    save_checkpoint(bad, model, small())
    (bad / "manifest.txt").write_text("other-format 9\n", encoding="utf-8")
    with pytest.raises(CheckpointError):
        load_checkpoint(bad)


# ---------------------------------------------------------------- experiments


def test_ablation_matrix(tmp_path):
    cfg = small(epochs=1)
    reports = run_ablation_matrix(cfg, csv_path=tmp_path / "abl.csv")
    assert [r.ablation for r in reports] == ["none", "non_pos", "non_hgat", "non_ids", "non_agg", "non_act"]
    lines = (tmp_path / "abl.csv").read_text().splitlines()
    assert lines[0] == ",".join(ABLATION_HEADER) and len(lines) == 7
    counts = {r.ablation: r.param_count for r in reports}
    assert counts["non_hgat"] < counts["none"] and reports[3].strategy == "grl"
    with pytest.raises(StudyError):
        run_ablation_matrix(cfg, variants=["none", "non_everything"])


def test_stratified_subsample():
    splits = load_splits(small())
    sub = stratified_subsample(splits.source_labeled, 0.25, seed=0)
    labels = [s.label for s in sub]
    assert labels.count(0) == labels.count(1) == 6
    assert sub == stratified_subsample(splits.source_labeled, 0.25, seed=0)
    assert stratified_subsample(splits.source_labeled, 1.0, 0) == list(splits.source_labeled)
    for bad in (0.0, 1.5):
        with pytest.raises(StudyError):
            stratified_subsample(splits.source_labeled, bad, 0)
    with pytest.raises(StudyError, match="at least 2"):
        stratified_subsample(splits.source_labeled, 0.05, 0)


def test_ratio_study(tmp_path):
    cfg = small(epochs=1)
    points = sample_ratio_study(cfg, [0.25, 0.5, 1.0], csv_path=tmp_path / "r.csv")
    assert [p[0] for p in points] == [0.25, 0.5, 1.0]
    assert [p[1] for p in points] == [12, 24, 48]
    assert points[-1][2].canonical() == train(cfg)[0].canonical()
    assert len((tmp_path / "r.csv").read_text().splitlines()) == 4


def test_export_embeddings(trained, tmp_path):
    cfg, _, model, out = trained
    splits = load_splits(cfg)
    n = export_embeddings(model, splits, tmp_path / "a.tsv", ["test", "target_unlabeled"])
    assert n == cfg.n_test + cfg.n_target_unlabeled
    rows = (tmp_path / "a.tsv").read_text().splitlines()
    assert len(rows) == n + 1
    first = rows[1].split("\t")
    assert first[0] == "test" and len(first) == 4 + model.feature_width
    assert rows[-1].split("\t")[3] == "-"
    loaded, _ = load_checkpoint(out / "checkpoint")
    export_embeddings(loaded, splits, tmp_path / "b.tsv", ["test", "target_unlabeled"])
    assert (tmp_path / "a.tsv").read_bytes() == (tmp_path / "b.tsv").read_bytes()
