"""Dataset splits and deterministic mini-batch streams."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .conllu import SyntacticSentence

logger = logging.getLogger(__name__)

SOURCE, TARGET = 0, 1
MODES = ("labeled", "domain_mixed", "unlabeled")


class SplitError(ValueError):
    pass


class EmptySplitError(SplitError):
    pass


@dataclass(frozen=True)
class DatasetSplits:
    source_labeled: tuple[SyntacticSentence, ...]
    source_unlabeled: tuple[SyntacticSentence, ...]
    target_unlabeled: tuple[SyntacticSentence, ...]
    validation: tuple[SyntacticSentence, ...]
    test: tuple[SyntacticSentence, ...]
    source_domain: str = "source"
    target_domain: str = "target"

    def __post_init__(self):
        for name in self.names():
            object.__setattr__(self, name, tuple(getattr(self, name)))
        seen: dict[str, str] = {}
        for name in self.names():
            for sent in getattr(self, name):
                key = sent.sent_id
                if key in seen:
                    raise SplitError(f"sentence {key!r} appears in both {seen[key]} and {name}")
                seen[key] = name
        for name in ("source_labeled", "validation", "test"):
            bad = [s.sent_id for s in getattr(self, name) if s.label not in (0, 1)]
            if bad:
                raise SplitError(f"{name} has sentences without a 0/1 label, e.g. {bad[0]!r}")
        for name in ("source_unlabeled", "target_unlabeled"):
            bad = [s.sent_id for s in getattr(self, name) if s.label is not None]
            if bad:
                raise SplitError(f"{name} must not carry labels, e.g. {bad[0]!r}")

    @staticmethod
    def names() -> tuple[str, ...]:
        return ("source_labeled", "source_unlabeled", "target_unlabeled", "validation", "test")

    def training_text(self) -> list[SyntacticSentence]:
        """Everything the vocabularies may be built from: source and target training text."""
        return [*self.source_labeled, *self.source_unlabeled, *self.target_unlabeled]

    def split(self, name: str) -> tuple[SyntacticSentence, ...]:
        if name not in self.names():
            raise SplitError(f"unknown split {name!r}")
        return getattr(self, name)

    def domain_of(self, name: str) -> int:
        return TARGET if name in ("target_unlabeled", "test") else SOURCE


@dataclass
class Batch:
    sentences: list[SyntacticSentence]
    domains: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def labels(self) -> list[int | None]:
        return [s.label for s in self.sentences]


def _rng(seed: int, epoch: int, mode: str) -> np.random.Generator:
    return np.random.default_rng([seed, epoch, MODES.index(mode)])


def _stream(pool: Sequence, rng: np.random.Generator, count: int) -> list:
    """``count`` items from shuffled passes over ``pool``; later passes reshuffle."""
    out: list = []
    while len(out) < count:
        out.extend(pool[i] for i in rng.permutation(len(pool)))
    return out[:count]


def batch_iter(splits: DatasetSplits, batch_size: int, seed: int, mode: str, epoch: int = 0) -> Iterator[Batch]:
    """One epoch of batches.

    ``labeled`` walks source_labeled; ``unlabeled`` walks source and target
    unlabeled text; ``domain_mixed`` pairs source training text with target
    unlabeled text half-and-half, cycling the smaller side so every sentence
    of the larger side is visited exactly once.
    """
    if batch_size < 2:
        raise SplitError(f"batch_size must be at least 2, got {batch_size}")
    if mode not in MODES:
        raise SplitError(f"unknown batch mode {mode!r}")
    rng = _rng(seed, epoch, mode)
    if mode in ("labeled", "unlabeled"):
        if mode == "labeled":
            pool = [(s, SOURCE) for s in splits.source_labeled]
        else:
            pool = [(s, SOURCE) for s in splits.source_unlabeled] + [(s, TARGET) for s in splits.target_unlabeled]
        if not pool:
            raise EmptySplitError(f"no sentences available for {mode} batches")
        order = rng.permutation(len(pool))
        for start in range(0, len(pool), batch_size):
            chunk = [pool[i] for i in order[start : start + batch_size]]
            yield Batch([s for s, _ in chunk], np.array([d for _, d in chunk], dtype=np.int64))
        return

    source = [*splits.source_labeled, *splits.source_unlabeled]
    target = list(splits.target_unlabeled)
    if not source or not target:
        raise EmptySplitError("domain_mixed batches need both source and target sentences")
    n_src = batch_size // 2
    n_tgt = batch_size - n_src
    steps = max(math.ceil(len(source) / n_src), math.ceil(len(target) / n_tgt))
    src = _stream(source, rng, steps * n_src)
    tgt = _stream(target, rng, steps * n_tgt)
    # the side needing more steps fixes the size of the last partial batch
    if len(source) / n_src >= len(target) / n_tgt:
        frac = (len(source) - (steps - 1) * n_src) / n_src
    else:
        frac = (len(target) - (steps - 1) * n_tgt) / n_tgt
    for step in range(steps):
        a, b = n_src, n_tgt
        if step == steps - 1:
            a, b = max(1, round(frac * n_src)), max(1, round(frac * n_tgt))
        s_part = src[step * n_src : step * n_src + a]
        t_part = tgt[step * n_tgt : step * n_tgt + b]
        yield Batch(s_part + t_part, np.array([SOURCE] * len(s_part) + [TARGET] * len(t_part), dtype=np.int64))


def cycle_batches(splits: DatasetSplits, batch_size: int, seed: int, mode: str, start_epoch: int = 0) -> Iterator[Batch]:
    """Endless stream of epochs; each restart reshuffles with the next epoch index."""
    epoch = start_epoch
    while True:
        yield from batch_iter(splits, batch_size, seed, mode, epoch)
        epoch += 1


def check_mixed(batch: Batch) -> None:
    if len(set(batch.domains.tolist())) < 2:
        logger.warning("single-domain batch of %d sentences: domain confusion pressure degenerates", len(batch))
