"""Ablation matrix, sample-ratio study and feature export."""

from __future__ import annotations

import csv
import dataclasses
import io
from pathlib import Path
from typing import Sequence

import numpy as np

from ..corpus import DatasetSplits
from ..model import GASTModel
from .config import ABLATIONS, ExperimentConfig
from .train import RunReport, load_splits, train


class StudyError(ValueError):
    pass


def _write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    return text


# ---------------------------------------------------------------- ablations

ABLATION_HEADER = ("ablation", "strategy", "param_count", "best_epoch", "best_val_acc", "target_test_acc")


def run_ablation_matrix(
    cfg: ExperimentConfig,
    variants: Sequence[str] = ABLATIONS,
    splits: DatasetSplits | None = None,
    csv_path=None,
) -> list[RunReport]:
    """Train every variant on one shared corpus and seed."""
    unknown = [v for v in variants if v not in ABLATIONS]
    if unknown:
        raise StudyError(f"unknown ablation(s): {unknown}")
    splits = splits if splits is not None else load_splits(cfg)
    reports = [train(cfg.replace(ablation=v), splits)[0] for v in variants]
    if csv_path is not None:
        ablation_table(reports, csv_path)
    return reports


def ablation_table(reports: Sequence[RunReport], path=None) -> str:
    rows = [
        (r.ablation, r.strategy, r.param_count, r.best_epoch, f"{r.best_val_acc:.6f}", f"{r.target_test_acc:.6f}")
        for r in reports
    ]
    return _write_csv(path, ABLATION_HEADER, rows)


# ---------------------------------------------------------------- sample ratios


def stratified_subsample(sentences, ratio: float, seed: int) -> list:
    """Keep ``round(ratio * n_c)`` sentences of each class, chosen with a seeded permutation.

    Input order is preserved among the survivors.
    """
    if not 0.0 < ratio <= 1.0:
        raise StudyError(f"ratio must lie in (0, 1], got {ratio}")
    sentences = list(sentences)
    rng = np.random.default_rng([seed, 7, int(round(ratio * 1_000_000))])
    keep: list[int] = []
    for label in (0, 1):
        idx = [i for i, s in enumerate(sentences) if s.label == label]
        n = int(round(ratio * len(idx)))
        if n < 2:
            raise StudyError(f"ratio {ratio} leaves {n} sample(s) of class {label}; at least 2 are required")
        picked = rng.permutation(len(idx))[:n]
        keep.extend(idx[j] for j in picked)
    return [sentences[i] for i in sorted(keep)]


RATIO_HEADER = ("ratio", "n_labeled", "best_val_acc", "target_test_acc")


def sample_ratio_study(
    cfg: ExperimentConfig,
    ratios: Sequence[float],
    splits: DatasetSplits | None = None,
    csv_path=None,
) -> list[tuple[float, int, RunReport]]:
    if not ratios:
        raise StudyError("at least one ratio is required")
    splits = splits if splits is not None else load_splits(cfg)
    # validate every ratio before spending time on training
    subsets = [(r, stratified_subsample(splits.source_labeled, r, cfg.seed)) for r in ratios]
    out = []
    for ratio, subset in subsets:
        sub = splits if ratio == 1.0 else dataclasses.replace(splits, source_labeled=tuple(subset))
        report, _ = train(cfg, sub)
        out.append((float(ratio), len(subset), report))
    if csv_path is not None:
        ratio_table(out, csv_path)
    return out


def ratio_table(points, path=None) -> str:
    rows = [(f"{r:g}", n, f"{rep.best_val_acc:.6f}", f"{rep.target_test_acc:.6f}") for r, n, rep in points]
    return _write_csv(path, RATIO_HEADER, rows)


# ---------------------------------------------------------------- embedding export


def export_embeddings(model: GASTModel, splits: DatasetSplits, path, names: Sequence[str] | None = None) -> int:
    """Write one tab-separated record per sentence: split, sent_id, domain, label, then the pooled features.

    Unlabeled sentences carry ``-`` as label. Returns the number of records.
    """
    names = list(names) if names else list(DatasetSplits.names())
    lines = ["\t".join(["split", "sent_id", "domain", "label"] + [f"h{i}" for i in range(model.feature_width)])]
    for name in names:
        sents = list(splits.split(name))
        if not sents:
            continue
        H = model.embed(sents)
        for s, row in zip(sents, H):
            label = "-" if s.label is None else str(s.label)
            lines.append("\t".join([name, s.sent_id, s.domain, label] + [repr(float(v)) for v in row]))
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write embeddings to {path}: {exc}") from exc
    return len(lines) - 1
