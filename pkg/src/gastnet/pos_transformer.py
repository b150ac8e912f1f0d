"""Transformer encoder whose attention heads also attend over POS-tag embeddings.

Per head, the word queries/keys and the tag queries/keys produce two
attention maps over the same word values, and the two outputs are summed.
There is no positional encoding: word order reaches the model only through
the dependency graph, so the encoder is permutation-equivariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numcore as nc
from .numcore import ParamSet, Tensor


@dataclass
class PosTransformerConfig:
    d_model: int = 256
    heads: int = 8
    d_t: int = 30
    dropout_p: float = 0.25
    ffn_hidden: int = 0  # 0 -> 2 * d_model
    layers: int = 1
    use_tags: bool = True
    residual: bool = False
    layer_norm: bool = False

    def __post_init__(self):
        if self.heads < 1:
            raise ValueError(f"need at least one attention head, got {self.heads}")
        if self.d_model % self.heads:
            raise ValueError(f"d_model={self.d_model} is not divisible by heads={self.heads}")
        if self.layers < 1:
            raise ValueError("need at least one POS-Transformer layer")
        if not self.ffn_hidden:
            self.ffn_hidden = 2 * self.d_model

    @property
    def d_head(self) -> int:
        return self.d_model // self.heads


@dataclass
class PosLayerParams(ParamSet):
    W_Q: Tensor  # heads x d_model x d_head
    W_K: Tensor
    W_V: Tensor
    W_Qt: Tensor | None  # heads x d_t x d_head; None for the vanilla transformer
    W_Kt: Tensor | None
    W_1: Tensor
    b_1: Tensor
    W_2: Tensor
    b_2: Tensor
    ln_gain: Tensor | None = None
    ln_bias: Tensor | None = None


@dataclass
class PosTransformerParams(ParamSet):
    W_in: Tensor
    layers: list[PosLayerParams] = field(default_factory=list)


def init_pos_transformer(rng: np.random.Generator, config: PosTransformerConfig, d: int) -> PosTransformerParams:
    I, dm, dh, dt = config.heads, config.d_model, config.d_head, config.d_t
    layers = []
    for _ in range(config.layers):
        layers.append(
            PosLayerParams(
                W_Q=nc.glorot(rng, (I, dm, dh)),
                W_K=nc.glorot(rng, (I, dm, dh)),
                W_V=nc.glorot(rng, (I, dm, dh)),
                W_Qt=nc.glorot(rng, (I, dt, dh)) if config.use_tags else None,
                W_Kt=nc.glorot(rng, (I, dt, dh)) if config.use_tags else None,
                W_1=nc.glorot(rng, (dm, config.ffn_hidden)),
                b_1=nc.zeros((config.ffn_hidden,)),
                W_2=nc.glorot(rng, (config.ffn_hidden, dm)),
                b_2=nc.zeros((dm,)),
                ln_gain=Tensor(np.ones(dm), requires_grad=True) if config.layer_norm else None,
                ln_bias=nc.zeros((dm,)) if config.layer_norm else None,
            )
        )
    return PosTransformerParams(W_in=nc.glorot(rng, (d, dm)), layers=layers)


def scaled_attention(Q: Tensor, K: Tensor, V: Tensor, mask=None) -> tuple[Tensor, Tensor]:
    """softmax(Q K^T / sqrt(d_k)) V over the last two axes; returns (output, weights)."""
    scores = nc.scale(Q @ K.T, 1.0 / math.sqrt(Q.shape[-1]))
    weights = nc.softmax_rows(scores, mask)
    return weights @ V, weights


def pos_attention_head(
    E_proj: Tensor, E_tag: Tensor | None, layer: PosLayerParams, head: int, mask=None, return_weights: bool = False
):
    """One head on a single sentence: word attention plus tag attention sharing the word values."""
    if not 0 <= head < layer.W_Q.shape[0]:
        raise IndexError(f"head {head} out of range for {layer.W_Q.shape[0]} heads")
    V = E_proj @ layer.W_V[head]
    out, w_word = scaled_attention(E_proj @ layer.W_Q[head], E_proj @ layer.W_K[head], V, mask)
    w_tag = None
    if layer.W_Qt is not None and E_tag is not None:
        tag_out, w_tag = scaled_attention(E_tag @ layer.W_Qt[head], E_tag @ layer.W_Kt[head], V, mask)
        out = out + tag_out
    if return_weights:
        return out, w_word, w_tag
    return out


def pos_attention(X: Tensor, T: Tensor | None, layer: PosLayerParams, mask=None):
    """All heads at once.  ``X``: (..., n, d_model) -> Z: (..., n, d_model) plus attention maps."""
    Xh = nc.expand(X, -3)  # (..., 1, n, d_model) broadcasts against (heads, d_model, d_head)
    head_mask = None if mask is None else np.expand_dims(mask, -3)
    V = Xh @ layer.W_V
    out, w_word = scaled_attention(Xh @ layer.W_Q, Xh @ layer.W_K, V, head_mask)
    w_tag = None
    if layer.W_Qt is not None and T is not None:
        Th = nc.expand(T, -3)
        tag_out, w_tag = scaled_attention(Th @ layer.W_Qt, Th @ layer.W_Kt, V, head_mask)
        out = out + tag_out
    # (..., heads, n, d_head) -> (..., n, heads * d_head)
    axes = list(range(out.ndim))
    axes[-3], axes[-2] = axes[-2], axes[-3]
    Z = nc.transpose(out, axes)
    Z = nc.reshape(Z, Z.shape[:-2] + (Z.shape[-2] * Z.shape[-1],))
    return Z, w_word, w_tag


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    centered = x - nc.tmean(x, axis=-1, keepdims=True)
    var = nc.tmean(centered * centered, axis=-1, keepdims=True)
    return centered * nc.power(var + eps, -0.5) * gain + bias


def pos_transformer_forward(
    E: Tensor,
    tags: Tensor | None,
    params: PosTransformerParams,
    config: PosTransformerConfig,
    train: bool = False,
    rng: np.random.Generator | None = None,
    mask=None,
    return_attention: bool = False,
):
    """Sequence features (..., n, d_model) from word embeddings E (..., n, d) and tag embeddings."""
    if tags is not None and E.shape[:-1] != tags.shape[:-1]:
        raise nc.DimensionError(f"word rows {E.shape} and tag rows {tags.shape} differ")
    if E.shape[-1] != params.W_in.shape[0]:
        raise nc.DimensionError(f"embedding width {E.shape[-1]} != input projection {params.W_in.shape}")
    h = E @ params.W_in
    maps = []
    for layer in params.layers:
        Z, w_word, w_tag = pos_attention(h, tags if config.use_tags else None, layer, mask)
        maps.append((w_word, w_tag))
        out = nc.relu(Z @ layer.W_1 + layer.b_1) @ layer.W_2 + layer.b_2
        out = nc.dropout(out, config.dropout_p, train, rng)
        if config.residual:
            out = out + h
        if config.layer_norm:
            out = layer_norm(out, layer.ln_gain, layer.ln_bias)
        h = out
    if return_attention:
        return h, maps
    return h
