"""End-to-end model wiring: encoding, padding invariance, ablation variants."""

import numpy as np
import pytest

from gastnet.adapt import LossWeights
from gastnet.corpus import Batch, SynthSpec, synth_corpus
from gastnet.harness.config import ABLATIONS, ExperimentConfig
from gastnet.harness.train import build_model
from gastnet.hgat import sentence_pool
from gastnet.model import GASTModel, Vocabularies
from gastnet.pos_transformer import PosTransformerConfig, pos_transformer_forward
from gastnet import numcore as nc

TINY = dict(word_dim=8, d_model=8, pt_heads=2, tag_dim=4, rel_dim=4, gat_heads=2, gat_head_dim=3, dropout=0.0)


@pytest.fixture(scope="module")
def splits():
    return synth_corpus(SynthSpec(n_per_split=24, seed=1))


def model_for(splits, ablation="none", **kw):
    return build_model(ExperimentConfig(**{**TINY, **kw}, ablation=ablation), splits)


def test_vocabularies_from_training_text(splits):
    v = Vocabularies.build(splits.training_text())
    assert "not" in v.words and "advmod" in v.relations and v.relations.self_id == 2
    # evaluation-only words fall back to UNK rather than growing the table
    assert v.words["zzzz"] == v.words.unk_id


def test_encode_pads_and_masks(splits):
    m = model_for(splits)
    sents = list(splits.test[:5])
    enc = m.encode(sents)
    n = max(len(s) for s in sents)
    assert enc.word_ids.shape == (5, n)
    for k, s in enumerate(sents):
        assert enc.key_mask[k, : len(s), : len(s)].all()
        assert (enc.word_ids[k, len(s) :] == m.vocabs.words.pad_id).all()
        assert enc.graph.node_mask[k].sum() == len(s)


def test_batched_features_equal_single(splits):
    m = model_for(splits)
    sents = list(splits.validation[:6])
    batched = m.embed(sents)
    for k, s in enumerate(sents):
        np.testing.assert_allclose(batched[k], m.embed([s])[0], atol=1e-12)


def test_feature_width(splits):
    assert model_for(splits).feature_width == 2 * 2 * 3
    assert model_for(splits, "non_agg").feature_width == 2 * 3
    assert model_for(splits, "non_act").feature_width == 2 * 3
    assert model_for(splits, "non_hgat").feature_width == 8


def test_non_hgat_pools_sequence_features(splits):
    m = model_for(splits, "non_hgat")
    s = [splits.test[0]]
    enc = m.encode(s)
    p = m.params
    seq = pos_transformer_forward(nc.embedding(p.word, enc.word_ids), nc.embedding(p.tag, enc.tag_ids), p.pos, m.pos_config)
    np.testing.assert_allclose(m.embed(s), sentence_pool(seq, enc.graph.node_mask).data, atol=1e-14)
    assert p.rel is None and p.hgat == []


def test_parameter_counts_move_in_documented_direction(splits):
    full = model_for(splits).parameter_count()
    counts = {a: model_for(splits, a).parameter_count() for a in ABLATIONS}
    assert counts["none"] == full
    for a in ("non_pos", "non_hgat", "non_agg", "non_act"):
        assert counts[a] < full, a
    # non_ids changes the training strategy, not the architecture
    assert counts["non_ids"] == full


def test_hgat_input_adapter(splits):
    m = model_for(splits, hgat_in=6)
    assert m.params.adapter is not None and m.params.adapter.shape == (8, 6)
    assert m.embed([splits.test[0]]).shape == (1, 12)


def test_attention_maps_are_exposed(splits):
    m = model_for(splits)
    enc = m.encode(list(splits.test[:3]))
    _, maps = m.node_features(enc, return_attention=True)
    w_word, w_tag = maps["pos"][0]
    assert w_word.shape[:2] == (3, 2) and w_tag is not None
    assert set(maps["hgat"][0]) == {"alpha", "beta"}


def test_step_losses_populate_every_gradient(splits):
    m = model_for(splits)
    labeled = Batch(list(splits.source_labeled[:4]))
    mixed = Batch([*splits.source_unlabeled[:2], *splits.target_unlabeled[:2]], np.array([0, 0, 1, 1]))
    unlabeled = Batch(list(splits.target_unlabeled[2:6]))
    for strategy in ("ids", "grl"):
        bundle, dom = m.step_losses(labeled, mixed, unlabeled, LossWeights(), strategy, train=False)
        assert dom.shape == (4, 2)
        assert 0.0 <= bundle.L_a.item() <= np.log(2) + 1e-12
        bundle.L.backward()
        params = m.named_parameters()
        assert all(t.grad is not None for t in params.values())
        for t in params.values():
            t.zero_grad()


def test_word_table_shape_validated(splits):
    v = Vocabularies.build(splits.training_text())
    with pytest.raises(nc.DimensionError):
        GASTModel.create(np.random.default_rng(0), v, 8, PosTransformerConfig(d_model=8, heads=2), None, word_table=np.zeros((3, 8)))
