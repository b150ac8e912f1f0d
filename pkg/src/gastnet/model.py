"""End-to-end GAST network: embeddings -> POS-Transformer -> HGAT -> pooled heads."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import adapt
from . import numcore as nc
from .corpus.conllu import SyntacticSentence
from .corpus.embeddings import init_table
from .corpus.splits import Batch
from .corpus.vocab import Vocab
from .hgat import GraphBatch, HgatConfig, HgatLayerParams, hgat_forward, init_hgat, sentence_pool
from .numcore import ParamSet, Tensor
from .pos_transformer import PosTransformerConfig, PosTransformerParams, init_pos_transformer, pos_transformer_forward


@dataclass
class Vocabularies:
    words: Vocab
    tags: Vocab
    relations: Vocab

    @classmethod
    def build(cls, sentences: Sequence[SyntacticSentence]) -> Vocabularies:
        words, tags, rels = Vocab(), Vocab(), Vocab(relations=True)
        for sent in sentences:
            for tok in sent.tokens:
                words.add(tok.form)
                tags.add(tok.pos_tag)
                if tok.head is not None:
                    rels.add(tok.deprel)
        return cls(words.freeze(), tags.freeze(), rels.freeze())


@dataclass
class GASTParams(ParamSet):
    word: Tensor
    tag: Tensor | None
    rel: Tensor | None
    pos: PosTransformerParams
    adapter: Tensor | None
    hgat: list[HgatLayerParams] = field(default_factory=list)
    sentiment: adapt.SoftmaxHead | None = None
    domain: adapt.SoftmaxHead | None = None


@dataclass
class EncodedBatch:
    word_ids: np.ndarray  # (B, n)
    tag_ids: np.ndarray
    key_mask: np.ndarray  # (B, n, n) self-attention support
    graph: GraphBatch

    def __len__(self) -> int:
        return self.word_ids.shape[0]


class GASTModel:
    def __init__(self, vocabs: Vocabularies, pos_config: PosTransformerConfig, hgat_config: HgatConfig | None, params: GASTParams, word_dim: int):
        self.vocabs = vocabs
        self.pos_config = pos_config
        self.hgat_config = hgat_config
        self.params = params
        self.word_dim = word_dim

    @classmethod
    def create(
        cls,
        rng: np.random.Generator,
        vocabs: Vocabularies,
        word_dim: int,
        pos_config: PosTransformerConfig,
        hgat_config: HgatConfig | None,
        word_table: np.ndarray | None = None,
    ) -> GASTModel:
        if word_table is None:
            word_table = init_table(rng, len(vocabs.words), word_dim)
        if word_table.shape != (len(vocabs.words), word_dim):
            raise nc.DimensionError(f"word table shape {word_table.shape} does not match vocabulary/width")
        tag = None
        if pos_config.use_tags:
            tag = Tensor(init_table(rng, len(vocabs.tags), pos_config.d_t), requires_grad=True)
        pos = init_pos_transformer(rng, pos_config, word_dim)
        rel, adapter, layers = None, None, []
        width = pos_config.d_model
        if hgat_config is not None:
            rel = Tensor(init_table(rng, len(vocabs.relations), hgat_config.d_r), requires_grad=True)
            if hgat_config.d_in != pos_config.d_model:
                adapter = nc.glorot(rng, (pos_config.d_model, hgat_config.d_in))
            layers = init_hgat(rng, hgat_config)
            width = hgat_config.out_width
        params = GASTParams(
            word=Tensor(word_table, requires_grad=True),
            tag=tag,
            rel=rel,
            pos=pos,
            adapter=adapter,
            hgat=layers,
            sentiment=adapt.SoftmaxHead.create(rng, width),
            domain=adapt.SoftmaxHead.create(rng, width),
        )
        return cls(vocabs, pos_config, hgat_config, params, word_dim)

    @property
    def feature_width(self) -> int:
        return self.params.sentiment.W.shape[0]

    def named_parameters(self) -> dict[str, Tensor]:
        return self.params.named()

    def parameter_count(self) -> int:
        return sum(t.size for t in self.named_parameters().values())

    def encode(self, sentences: Sequence[SyntacticSentence]) -> EncodedBatch:
        n = max(len(s) for s in sentences)
        b = len(sentences)
        words = np.full((b, n), self.vocabs.words.pad_id, dtype=np.int64)
        tags = np.full((b, n), self.vocabs.tags.pad_id, dtype=np.int64)
        key_mask = np.zeros((b, n, n), dtype=bool)
        idx = np.arange(n)
        for k, sent in enumerate(sentences):
            m = len(sent)
            words[k, :m] = [self.vocabs.words[t.form] for t in sent.tokens]
            tags[k, :m] = [self.vocabs.tags[t.pos_tag] for t in sent.tokens]
            key_mask[k, :m, :m] = True
            key_mask[k, idx[m:], idx[m:]] = True
        graph = GraphBatch.from_sentences(sentences, self.vocabs.relations, pad_to=n)
        return EncodedBatch(words, tags, key_mask, graph)

    def node_features(self, enc: EncodedBatch, train: bool = False, rng: np.random.Generator | None = None, return_attention: bool = False):
        p = self.params
        E = nc.embedding(p.word, enc.word_ids)
        T = nc.embedding(p.tag, enc.tag_ids) if p.tag is not None else None
        seq, pos_maps = pos_transformer_forward(E, T, p.pos, self.pos_config, train, rng, enc.key_mask, return_attention=True)
        graph_maps = []
        h = seq
        if self.hgat_config is not None:
            if p.adapter is not None:
                h = h @ p.adapter
            h, graph_maps = hgat_forward(h, enc.graph, p.rel, p.hgat, self.hgat_config, train, rng, return_weights=True)
        if return_attention:
            return h, {"pos": pos_maps, "hgat": graph_maps}
        return h

    def features(self, enc: EncodedBatch, train: bool = False, rng: np.random.Generator | None = None) -> Tensor:
        return sentence_pool(self.node_features(enc, train, rng), enc.graph.node_mask)

    def predict_proba(self, sentences: Sequence[SyntacticSentence], batch_size: int = 256) -> np.ndarray:
        out = []
        for start in range(0, len(sentences), batch_size):
            enc = self.encode(sentences[start : start + batch_size])
            out.append(self.params.sentiment(self.features(enc)).data)
        return np.concatenate(out) if out else np.zeros((0, adapt.NUM_CLASSES))

    def embed(self, sentences: Sequence[SyntacticSentence], batch_size: int = 256) -> np.ndarray:
        out = [self.features(self.encode(sentences[i : i + batch_size])).data for i in range(0, len(sentences), batch_size)]
        return np.concatenate(out) if out else np.zeros((0, self.feature_width))

    def step_losses(
        self,
        labeled: Batch,
        mixed: Batch,
        unlabeled: Batch,
        weights: adapt.LossWeights,
        strategy: str = "ids",
        lambda_grl: float = 1.0,
        train: bool = True,
        rng: np.random.Generator | None = None,
    ) -> tuple[adapt.LossBundle, Tensor]:
        """All three losses from one shared forward pass over the concatenated batches.

        Returns the bundle and the domain probabilities of the mixed batch.
        """
        a, b = len(labeled), len(mixed)
        sentences = [*labeled.sentences, *mixed.sentences, *unlabeled.sentences]
        H = self.features(self.encode(sentences), train, rng)
        H_l, H_m, H_u = H[:a], H[a : a + b], H[a + b :]
        L_c = adapt.sentiment_loss(self.params.sentiment, H_l, labeled.labels)
        if strategy == "ids":
            L_d = adapt.domain_loss_reversed(self.params.domain, H_m, mixed.domains)
        elif strategy == "grl":
            L_d = adapt.grl_domain_loss(self.params.domain, H_m, mixed.domains, lambda_grl)
        else:
            raise ValueError(f"unknown adaptation strategy {strategy!r}")
        L_a = adapt.ssl_entropy_loss(self.params.sentiment, H_u, unlabeled.labels)
        bundle = adapt.total_loss(L_c, L_d, L_a, weights, n_sl=a, N=b, M=len(unlabeled))
        return bundle, self.params.domain(H_m.detach())
