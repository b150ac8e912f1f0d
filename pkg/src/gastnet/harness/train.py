"""Training loop, evaluation and run reports."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .. import numcore as nc
from ..corpus import DatasetSplits, SynthSpec, batch_iter, cycle_batches, load_embeddings, read_conllu, synth_corpus
from ..corpus.conllu import SyntacticSentence
from ..kvconfig import read_kv
from ..model import GASTModel, Vocabularies
from .checkpoint import save_checkpoint
from .config import ExperimentConfig

logger = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


class EvaluationError(ValueError):
    pass


@dataclass
class EpochRecord:
    epoch: int
    L_c: float
    L_d: float
    L_a: float
    L: float
    val_acc: float
    disc_acc: float


@dataclass
class RunReport:
    seed: int
    ablation: str
    strategy: str
    param_count: int
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    best_val_acc: float = 0.0
    target_test_acc: float = 0.0
    config: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0

    @property
    def losses(self) -> list[float]:
        return [e.L for e in self.epochs]

    @property
    def disc_accuracies(self) -> list[float]:
        return [e.disc_acc for e in self.epochs]

    def to_dict(self, timing: bool = True) -> dict:
        out = asdict(self)
        if not timing:
            out.pop("wall_clock_s")
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True) + "\n"

    def canonical(self) -> str:
        """Serialisation without wall-clock time: bit-identical across reruns of one config."""
        return self.to_json(timing=False)

    @classmethod
    def from_json(cls, text: str) -> RunReport:
        raw = json.loads(text)
        raw["epochs"] = [EpochRecord(**e) for e in raw.get("epochs", [])]
        return cls(**raw)


# ---------------------------------------------------------------- data and model construction


def synth_spec_for(cfg: ExperimentConfig) -> SynthSpec:
    if cfg.synth_config:
        return SynthSpec.from_mapping(read_kv(cfg.synth_config))
    return SynthSpec(
        seed=cfg.synth_seed,
        domains=(cfg.source_domain, cfg.target_domain),
        negators=cfg.negators,
        cross_domain_rate=cfg.cross_domain_rate,
        split_sizes={
            "source_labeled": cfg.n_source_labeled,
            "source_unlabeled": cfg.n_source_unlabeled,
            "target_unlabeled": cfg.n_target_unlabeled,
            "validation": cfg.n_validation,
            "test": cfg.n_test,
        },
    )


def load_splits(cfg: ExperimentConfig) -> DatasetSplits:
    if not cfg.data_dir:
        return synth_corpus(synth_spec_for(cfg))
    root = Path(cfg.data_dir)
    parts = {}
    for name in DatasetSplits.names():
        path = root / f"{name}.conllu"
        sents = read_conllu(path) if path.exists() else []
        if name in ("source_unlabeled", "target_unlabeled"):
            # unlabeled roles never expose labels, even when the file carries them
            sents = [SyntacticSentence(s.tokens, None, s.domain, s.sent_id) for s in sents]
        parts[name] = sents
    return DatasetSplits(**parts)


def build_model(cfg: ExperimentConfig, splits: DatasetSplits) -> GASTModel:
    rng = np.random.default_rng([cfg.seed, 0])
    vocabs = Vocabularies.build(splits.training_text())
    table = load_embeddings(cfg.embeddings, vocabs.words, cfg.word_dim, rng) if cfg.embeddings else None
    return GASTModel.create(rng, vocabs, cfg.word_dim, cfg.pos_config(), cfg.hgat_config(), word_table=table)


# ---------------------------------------------------------------- evaluation


def evaluate(model: GASTModel, sentences: Sequence[SyntacticSentence]) -> float:
    """Argmax accuracy in eval mode (dropout off)."""
    if not sentences:
        raise EvaluationError("cannot evaluate on an empty split")
    labels = [s.label for s in sentences]
    if any(y is None for y in labels):
        raise EvaluationError("evaluation split contains unlabeled sentences")
    probs = model.predict_proba(list(sentences))
    return float((probs.argmax(axis=1) == np.asarray(labels)).mean())


def _snapshot(model: GASTModel) -> dict[str, np.ndarray]:
    return {k: t.data.copy() for k, t in model.named_parameters().items()}


def _restore(model: GASTModel, snap: dict[str, np.ndarray]) -> None:
    for k, t in model.named_parameters().items():
        t.data = snap[k].copy()


# ---------------------------------------------------------------- training


def train(
    cfg: ExperimentConfig,
    splits: DatasetSplits | None = None,
    out_dir: str | Path | None = None,
) -> tuple[RunReport, GASTModel]:
    """Train with best-validation model selection; the returned model holds the selected weights.

    When ``out_dir`` is given, writes ``report.json`` and the selected checkpoint under it.
    """
    started = time.perf_counter()
    splits = splits if splits is not None else load_splits(cfg)
    if not splits.source_labeled:
        raise EvaluationError("training needs labeled source sentences")
    model = build_model(cfg, splits)
    params = model.named_parameters()
    state = nc.AdamState(learning_rate=cfg.lr)
    weights = cfg.loss_weights()
    strategy = cfg.effective_strategy
    dropout_rng = np.random.default_rng([cfg.seed, 1])
    mixed = cycle_batches(splits, cfg.batch_size, cfg.seed, "domain_mixed")
    unlabeled = cycle_batches(splits, cfg.batch_size, cfg.seed, "unlabeled")
    validation = splits.validation or splits.source_labeled

    report = RunReport(
        seed=cfg.seed, ablation=cfg.ablation, strategy=strategy, param_count=model.parameter_count(), config=cfg.to_dict()
    )
    best = _snapshot(model)
    best_acc = -1.0
    for epoch in range(cfg.epochs):
        sums = np.zeros(4)
        disc_hits = disc_total = 0
        steps = 0
        for labeled in batch_iter(splits, cfg.batch_size, cfg.seed, "labeled", epoch):
            mixed_batch = next(mixed)
            bundle, dom_probs = model.step_losses(
                labeled, mixed_batch, next(unlabeled), weights, strategy, cfg.lambda_grl, True, dropout_rng
            )
            values = bundle.values()
            if not all(math.isfinite(v) for v in values.values()):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch} step {steps}: {values}")
            bundle.L.backward()
            nc.adam_step(params, state)
            sums += [values["L_c"], values["L_d"], values["L_a"], values["L"]]
            disc_hits += int((dom_probs.data.argmax(axis=1) == mixed_batch.domains).sum())
            disc_total += len(mixed_batch)
            steps += 1
        if not nc.all_finite(params.values()):
            raise TrainingDiverged(f"non-finite parameters after epoch {epoch}")
        val_acc = evaluate(model, validation)
        mean = sums / max(steps, 1)
        record = EpochRecord(epoch, *map(float, mean), val_acc=val_acc, disc_acc=disc_hits / max(disc_total, 1))
        report.epochs.append(record)
        logger.info(
            "epoch %d  L=%.4f (c=%.4f d=%.4f a=%.4f)  val=%.4f  disc=%.3f",
            epoch, record.L, record.L_c, record.L_d, record.L_a, val_acc, record.disc_acc,
        )
        if val_acc > best_acc:
            best_acc, report.best_epoch = val_acc, epoch
            best = _snapshot(model)
    _restore(model, best)
    report.best_val_acc = max(best_acc, 0.0)
    report.target_test_acc = evaluate(model, splits.test) if splits.test else 0.0
    report.wall_clock_s = time.perf_counter() - started
    if out_dir is not None:
        out = Path(out_dir)
        save_checkpoint(out / "checkpoint", model, cfg)
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    return report, model
