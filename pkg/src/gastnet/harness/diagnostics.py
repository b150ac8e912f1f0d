"""Whole-pipeline gradient check on a toy graph."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import numcore as nc
from ..adapt import LossWeights
from ..corpus.conllu import SyntacticSentence, Token
from ..corpus.splits import Batch
from ..hgat import HgatConfig
from ..model import GASTModel, Vocabularies
from ..pos_transformer import PosTransformerConfig

# "the old lamp was not bright"; heads are 0-based, leaves 0, 1, 3 and 4 may be dropped
_TOY = [
    ("the", "DT", 2, "det"),
    ("old", "JJ", 2, "amod"),
    ("lamp", "NN", 5, "nsubj"),
    ("was", "VBD", 5, "cop"),
    ("not", "RB", 5, "advmod"),
    ("bright", "JJ", None, "root"),
]


def toy_sentence(label: int | None = 1, domain: str = "toy", sent_id: str = "toy/0", drop: int | None = None) -> SyntacticSentence:
    """``drop`` removes one modifier token (and re-indexes heads) to get a five-token tree."""
    rows = [r for i, r in enumerate(_TOY) if i != drop]
    remap = {}
    j = 0
    for i in range(len(_TOY)):
        if i != drop:
            remap[i] = j
            j += 1
    tokens = [Token(w, t, None if h is None else remap[h], rel) for w, t, h, rel in rows]
    return SyntacticSentence(tokens, label, domain, sent_id)


@dataclass
class GradCheckResult:
    max_rel_error: float
    n_parameters: int
    n_tokens: int


def pipeline_grad_check(
    seed: int = 0,
    d_model: int = 16,
    heads: int = 4,
    gat_heads: int = 2,
    d_head: int = 4,
    word_dim: int = 8,
    tag_dim: int = 6,
    rel_dim: int = 6,
    strategy: str = "ids",
    step: float = 1e-5,
) -> GradCheckResult:
    """Finite-difference check of L = L_c + L_d + L_a through every parameter of a small model.

    Uses eval mode so dropout is the identity.
    """
    sents = [
        toy_sentence(1, "src", "toy/0", drop=1),
        toy_sentence(0, "src", "toy/1", drop=4),
        toy_sentence(None, "tgt", "toy/2", drop=0),
        toy_sentence(None, "tgt", "toy/3", drop=3),
    ]
    rng = np.random.default_rng(seed)
    vocabs = Vocabularies.build(sents)
    pos_cfg = PosTransformerConfig(d_model=d_model, heads=heads, d_t=tag_dim, dropout_p=0.0)
    hgat_cfg = HgatConfig(layers=2, heads=gat_heads, d_in=d_model, d_head=d_head, d_r=rel_dim, dropout_p=0.0)
    model = GASTModel.create(rng, vocabs, word_dim, pos_cfg, hgat_cfg)
    # larger-than-default embeddings keep activations away from the flat region
    for t in (model.params.word, model.params.tag, model.params.rel):
        t.data[...] = rng.normal(0.0, 0.5, t.shape)
    labeled = Batch(sents[:2])
    mixed = Batch([sents[0], sents[2]], np.array([0, 1]))
    unlabeled = Batch(sents[2:])
    weights = LossWeights(1.0, 1.0, 0.8)
    params = list(model.named_parameters().values())

    def loss(*_):
        bundle, _ = model.step_losses(labeled, mixed, unlabeled, weights, strategy, 1.0, train=False)
        return bundle.L

    err = nc.grad_check(loss, params, step=step)
    return GradCheckResult(err, sum(p.size for p in params), len(sents[0]))
