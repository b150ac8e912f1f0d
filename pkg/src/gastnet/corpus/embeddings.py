"""Embedding tables and the GloVe text-format loader."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numcore import Tensor
from .vocab import Vocab


class EmbeddingFormatError(ValueError):
    pass


def init_table(rng: np.random.Generator, rows: int, dim: int, pad_id: int | None = 0, bound: float = 0.1) -> np.ndarray:
    table = rng.uniform(-bound, bound, size=(rows, dim))
    if pad_id is not None:
        table[pad_id] = 0.0
    return table


def load_embeddings(path, vocab: Vocab, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Word table for ``vocab``: file vectors where available, U(-0.1, 0.1) elsewhere, PAD zero."""
    table = init_table(rng, len(vocab), dim, pad_id=None)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if not parts or parts == [""]:
                continue
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise EmbeddingFormatError(f"{path}:{lineno}: expected {dim} values for {word!r}, got {len(values)}")
            if word in vocab:
                try:
                    table[vocab.stoi[word]] = np.array(values, dtype=np.float64)
                except ValueError:
                    raise EmbeddingFormatError(f"{path}:{lineno}: non-numeric value for {word!r}") from None
    table[vocab.pad_id] = 0.0
    return table


@dataclass
class EmbeddingTables:
    word: Tensor
    tag: Tensor | None
    relation: Tensor

    def __post_init__(self):
        for name, t in (("word", self.word), ("tag", self.tag), ("relation", self.relation)):
            if t is None:
                continue
            if t.ndim != 2 or t.shape[1] <= 0:
                raise ValueError(f"{name} table must be a 2-d array with positive width, got {t.shape}")
            if not np.isfinite(t.data).all():
                raise ValueError(f"{name} table has non-finite rows")

    @classmethod
    def create(cls, rng, words: Vocab, tags: Vocab | None, relations: Vocab, d: int, d_t: int, d_r: int, word_table=None):
        if word_table is None:
            word_table = init_table(rng, len(words), d)
        tag = Tensor(init_table(rng, len(tags), d_t), requires_grad=True, name="emb.tag") if tags is not None else None
        return cls(
            word=Tensor(word_table, requires_grad=True, name="emb.word"),
            tag=tag,
            relation=Tensor(init_table(rng, len(relations), d_r), requires_grad=True, name="emb.rel"),
        )
