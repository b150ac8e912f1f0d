"""Sentiment and domain heads, the three training losses and gradient reversal."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import numcore as nc
from .numcore import ParamSet, Tensor

logger = logging.getLogger(__name__)

NUM_CLASSES = 2


class ContractError(ValueError):
    pass


@dataclass
class SoftmaxHead(ParamSet):
    W: Tensor
    b: Tensor

    @classmethod
    def create(cls, rng: np.random.Generator, width: int, classes: int = NUM_CLASSES) -> SoftmaxHead:
        return cls(W=nc.glorot(rng, (width, classes)), b=nc.zeros((classes,)))

    def __call__(self, H: Tensor) -> Tensor:
        return nc.softmax_rows(H @ self.W + self.b)


# distinct names keep the roles apart in checkpoints and signatures
SentimentHead = SoftmaxHead
DomainHead = SoftmaxHead


@dataclass
class LossWeights:
    lambda_c: float = 1.0
    lambda_d: float = 1.0
    lambda_a: float = 0.8

    def __post_init__(self):
        if min(self.lambda_c, self.lambda_d, self.lambda_a) < 0:
            raise ValueError("loss weights must be nonnegative")


@dataclass
class LossBundle:
    L_c: Tensor
    L_d: Tensor
    L_a: Tensor
    L: Tensor
    n_sl: int = 0
    N: int = 0
    M: int = 0
    C: int = NUM_CLASSES

    def values(self) -> dict[str, float]:
        return {"L_c": self.L_c.item(), "L_d": self.L_d.item(), "L_a": self.L_a.item(), "L": self.L.item()}


def _labels(labels: Sequence[int | None], what: str) -> np.ndarray:
    if any(y is None for y in labels):
        raise ContractError(f"{what} received an unlabeled sample")
    y = np.asarray(labels, dtype=np.float64)
    if not np.isin(y, (0.0, 1.0)).all():
        raise ContractError(f"{what} labels must be 0 or 1")
    return y


def sentiment_loss(head: SoftmaxHead, H: Tensor, labels: Sequence[int | None]) -> Tensor:
    """Binary cross-entropy on the positive-class probability over a labeled source batch."""
    y = _labels(labels, "sentiment_loss")
    return nc.binary_cross_entropy(head(H)[:, 1], y)


def domain_loss_reversed(head: SoftmaxHead, H: Tensor, true_domains) -> Tensor:
    """Cross-entropy of the domain head against swapped domain labels (target=1)."""
    d = _labels(list(true_domains), "domain_loss_reversed")
    if len(np.unique(d)) < 2:
        logger.warning("single-domain batch in domain_loss_reversed")
    return nc.binary_cross_entropy(head(H)[:, 1], 1.0 - d)


def ssl_entropy_loss(head: SoftmaxHead, H: Tensor, labels: Sequence[int | None] | None = None) -> Tensor:
    """Mean Shannon entropy of the predicted sentiment distributions of unlabeled text."""
    if labels is not None and any(y is not None for y in labels):
        raise ContractError("ssl_entropy_loss received a labeled sample")
    p = head(H)
    ent = nc.neg(nc.tsum(p * nc.log(p), axis=-1))
    return nc.tmean(ent)


def total_loss(L_c: Tensor, L_d: Tensor, L_a: Tensor, weights: LossWeights, n_sl: int = 0, N: int = 0, M: int = 0) -> LossBundle:
    L = nc.scale(L_c, weights.lambda_c) + nc.scale(L_d, weights.lambda_d) + nc.scale(L_a, weights.lambda_a)
    return LossBundle(L_c, L_d, L_a, L, n_sl=n_sl, N=N, M=M)


def grl(x: Tensor, lambda_grl: float = 1.0) -> Tensor:
    return nc.grl(x, lambda_grl)


def grl_domain_loss(head: SoftmaxHead, H: Tensor, true_domains, lambda_grl: float = 1.0) -> Tensor:
    """True-label domain cross-entropy behind a gradient reversal layer."""
    d = _labels(list(true_domains), "grl_domain_loss")
    if len(np.unique(d)) < 2:
        logger.warning("single-domain batch in grl_domain_loss")
    return nc.binary_cross_entropy(head(grl(H, lambda_grl))[:, 1], d)


def accuracy(probs: np.ndarray, labels: Sequence[int]) -> float:
    labels = np.asarray(labels)
    if labels.size == 0:
        return 0.0
    return float((np.argmax(probs, axis=-1) == labels).mean())


MAX_ENTROPY = math.log(NUM_CLASSES)
