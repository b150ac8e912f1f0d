"""Hybrid graph attention over dependency graphs.

Each layer runs two multi-head attentions restricted to graph neighbours
(self-loop included):

* relation-aggregate: LeakyReLU scores of ``a . [W h_i | W h_j | W_r r_ij]``,
* relation-activation: scaled dot products of ``W_Q h_i`` with relation-shifted
  keys ``W_K h_j + W_Kr r_ij``, aggregating relation-shifted values,

and concatenates the two per node.  Relation embeddings enter through a
constant one-hot tensor ``(…, n, n, |relations|)`` so that every edge term is
a contraction rather than a per-edge loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import numcore as nc
from .corpus.conllu import SyntacticSentence
from .corpus.vocab import Vocab
from .numcore import ParamSet, Tensor


@dataclass
class HgatConfig:
    layers: int = 2
    heads: int = 3
    d_in: int = 256
    d_head: int = 32
    d_r: int = 30
    leaky_slope: float = 0.2
    dropout_p: float = 0.25
    use_agg: bool = True
    use_act: bool = True

    def __post_init__(self):
        if self.heads < 1:
            raise ValueError("HGAT needs at least one head")
        if self.layers < 1:
            raise ValueError("HGAT needs at least one layer")
        if not (self.use_agg or self.use_act):
            raise ValueError("HGAT needs at least one of the two relational functions")

    @property
    def out_width(self) -> int:
        return (int(self.use_agg) + int(self.use_act)) * self.heads * self.d_head

    def layer_in(self, layer: int) -> int:
        return self.d_in if layer == 0 else self.out_width


@dataclass
class HgatLayerParams(ParamSet):
    W_agg: Tensor | None = None  # heads x d_in x d_head
    W_agg_r: Tensor | None = None  # heads x d_r x d_head
    a: Tensor | None = None  # heads x 3*d_head
    W_Q: Tensor | None = None  # heads x d_in x d_head
    W_K: Tensor | None = None
    W_V: Tensor | None = None
    W_Kr: Tensor | None = None  # d_r x d_head, shared by the heads of this layer
    W_Vr: Tensor | None = None


def init_hgat(rng: np.random.Generator, config: HgatConfig) -> list[HgatLayerParams]:
    K, dh, dr = config.heads, config.d_head, config.d_r
    layers = []
    for ell in range(config.layers):
        din = config.layer_in(ell)
        p = HgatLayerParams()
        if config.use_agg:
            p.W_agg = nc.glorot(rng, (K, din, dh))
            p.W_agg_r = nc.glorot(rng, (K, dr, dh))
            p.a = nc.glorot(rng, (K, 3 * dh))
        if config.use_act:
            p.W_Q = nc.glorot(rng, (K, din, dh))
            p.W_K = nc.glorot(rng, (K, din, dh))
            p.W_V = nc.glorot(rng, (K, din, dh))
            p.W_Kr = nc.glorot(rng, (dr, dh))
            p.W_Vr = nc.glorot(rng, (dr, dh))
        layers.append(p)
    return layers


@dataclass
class GraphBatch:
    """Padded graph tensors for one or more sentences.

    ``adjacency`` (…, n, n) is the attention support; padded positions keep only
    a self-loop so no softmax row is empty.  ``rel_onehot`` (…, n, n, R) is zero
    off the real edges.  ``node_mask`` (…, n) marks real words.
    """

    adjacency: np.ndarray
    rel_onehot: np.ndarray
    node_mask: np.ndarray

    @property
    def lengths(self) -> np.ndarray:
        return self.node_mask.sum(axis=-1)

    @classmethod
    def from_sentences(cls, sentences: Sequence[SyntacticSentence], relations: Vocab, pad_to: int | None = None) -> GraphBatch:
        n = max([len(s) for s in sentences] + [pad_to or 0])
        b = len(sentences)
        adj = np.zeros((b, n, n), dtype=bool)
        onehot = np.zeros((b, n, n, len(relations)))
        node_mask = np.zeros((b, n), dtype=bool)
        idx = np.arange(n)
        for k, sent in enumerate(sentences):
            m = len(sent)
            rel = sent.relation_ids(relations)
            a = sent.adjacency
            adj[k, :m, :m] = a
            adj[k, idx[m:], idx[m:]] = True
            ii, jj = np.nonzero(a)
            onehot[k, ii, jj, rel[ii, jj]] = 1.0
            node_mask[k, :m] = True
        return cls(adj, onehot, node_mask)

    @classmethod
    def from_sentence(cls, sentence: SyntacticSentence, relations: Vocab) -> GraphBatch:
        g = cls.from_sentences([sentence], relations)
        return cls(g.adjacency[0], g.rel_onehot[0], g.node_mask[0])

    @classmethod
    def from_arrays(cls, adjacency: np.ndarray, relation_ids: np.ndarray, num_relations: int) -> GraphBatch:
        adjacency = np.asarray(adjacency, dtype=bool)
        onehot = np.zeros(adjacency.shape + (num_relations,))
        idx = np.nonzero(adjacency)
        onehot[idx + (np.asarray(relation_ids)[idx],)] = 1.0
        return cls(adjacency, onehot, np.ones(adjacency.shape[:-1], dtype=bool))


def _check_width(h: Tensor, W: Tensor) -> None:
    if h.shape[-1] != W.shape[-2]:
        raise nc.DimensionError(f"node width {h.shape[-1]} does not match transform {W.shape}")


def _merge_heads(x: Tensor) -> Tensor:
    # (..., K, n, d) -> (..., n, K*d)
    axes = list(range(x.ndim))
    axes[-3], axes[-2] = axes[-2], axes[-3]
    x = nc.transpose(x, axes)
    return nc.reshape(x, x.shape[:-2] + (x.shape[-2] * x.shape[-1],))


def relation_aggregate(h: Tensor, graph: GraphBatch, rel_table: Tensor, params: HgatLayerParams, slope: float = 0.2, return_weights: bool = False):
    """Concatenation-scored graph attention; output (…, n, K*d_head)."""
    _check_width(h, params.W_agg)
    K, dh = params.a.shape[0], params.W_agg.shape[-1]
    Wh = nc.expand(h, -3) @ params.W_agg  # (..., K, n, dh)
    a_src = nc.reshape(params.a[:, :dh], (K, dh, 1))
    a_dst = nc.reshape(params.a[:, dh : 2 * dh], (K, dh, 1))
    a_rel = nc.reshape(params.a[:, 2 * dh :], (K, dh, 1))
    s_src = Wh @ a_src  # (..., K, n, 1)
    s_dst = nc.swap_last(Wh @ a_dst)  # (..., K, 1, n)
    rel_score = nc.reshape((nc.expand(rel_table, 0) @ params.W_agg_r) @ a_rel, (K, rel_table.shape[0]))
    lead = "abcdefgh"[: h.ndim - 2]
    s_rel = nc.einsum(f"{lead}ijr,kr->{lead}kij", Tensor(graph.rel_onehot), rel_score)
    f = nc.leaky_relu(s_src + s_dst + s_rel, slope)
    alpha = nc.softmax_rows(f, np.expand_dims(graph.adjacency, -3))
    out = _merge_heads(nc.leaky_relu(alpha @ Wh, slope))
    if return_weights:
        return out, alpha
    return out


def relation_activation(h: Tensor, graph: GraphBatch, rel_table: Tensor, params: HgatLayerParams, slope: float = 0.2, return_weights: bool = False):
    """Relation-shifted scaled dot-product graph attention; output (…, n, K*d_head)."""
    _check_width(h, params.W_Q)
    dh = params.W_Q.shape[-1]
    hh = nc.expand(h, -3)
    Q, Kx, V = hh @ params.W_Q, hh @ params.W_K, hh @ params.W_V  # (..., K, n, dh)
    KR = rel_table @ params.W_Kr  # (R, dh)
    VR = rel_table @ params.W_Vr
    onehot = Tensor(graph.rel_onehot)
    lead = "abcdefgh"[: h.ndim - 2]
    rel_keys = nc.einsum(f"{lead}kir,{lead}ijr->{lead}kij", Q @ KR.T, onehot)
    scores = nc.scale(Q @ Kx.T + rel_keys, 1.0 / math.sqrt(dh))
    beta = nc.softmax_rows(scores, np.expand_dims(graph.adjacency, -3))
    rel_values = nc.einsum(f"{lead}kij,{lead}ijr->{lead}kir", beta, onehot) @ VR
    out = _merge_heads(nc.leaky_relu(beta @ V + rel_values, slope))
    if return_weights:
        return out, beta
    return out


def hgat_layer(
    h: Tensor,
    graph: GraphBatch,
    rel_table: Tensor,
    params: HgatLayerParams,
    config: HgatConfig,
    train: bool = False,
    rng: np.random.Generator | None = None,
    return_weights: bool = False,
):
    parts, weights = [], {}
    if config.use_agg:
        agg, weights["alpha"] = relation_aggregate(h, graph, rel_table, params, config.leaky_slope, return_weights=True)
        parts.append(agg)
    if config.use_act:
        act, weights["beta"] = relation_activation(h, graph, rel_table, params, config.leaky_slope, return_weights=True)
        parts.append(act)
    out = parts[0] if len(parts) == 1 else nc.concat(parts, axis=-1)
    out = nc.dropout(out, config.dropout_p, train, rng)
    if return_weights:
        return out, weights
    return out


def hgat_forward(h: Tensor, graph: GraphBatch, rel_table: Tensor, layers: list[HgatLayerParams], config: HgatConfig, train: bool = False, rng=None, return_weights: bool = False):
    maps = []
    for params in layers:
        h, w = hgat_layer(h, graph, rel_table, params, config, train, rng, return_weights=True)
        maps.append(w)
    if return_weights:
        return h, maps
    return h


def sentence_pool(h: Tensor, node_mask=None) -> Tensor:
    """Mean over the words of each sentence; padded rows are excluded."""
    if h.shape[-2] == 0:
        raise ValueError("cannot pool an empty sentence")
    if node_mask is None:
        return nc.tmean(h, axis=-2)
    mask = np.asarray(node_mask, dtype=np.float64)
    counts = mask.sum(axis=-1, keepdims=True)
    if (counts == 0).any():
        raise ValueError("cannot pool an empty sentence")
    return nc.tsum(h * mask[..., None], axis=-2) * (1.0 / counts)
