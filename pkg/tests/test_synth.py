"""Synthetic two-domain corpus: labels, skeletons, domain shift and determinism."""

import collections

import numpy as np
import pytest

from gastnet.corpus import SynthSpec, SynthSpecError, generate_sentences, relation_distribution, synth_corpus, to_conllu
from gastnet.corpus.synth import NEGATOR_TEMPLATES, PLAIN_TEMPLATES, TEMPLATES, template_flips


def small_spec(**kw):
    kw.setdefault("n_per_split", 60)
    return SynthSpec(**kw)


def test_every_skeleton_is_a_tree():
    for name, slots in TEMPLATES.items():
        roots = [s for s in slots if s[2] == 0]
        assert len(roots) == 1, name
        assert all(s[2] != i + 1 for i, s in enumerate(slots)), name


def test_flip_rule():
    assert template_flips("neg") and template_flips("coord_sn_negs") and template_flips("coord_ns_negs")
    assert not template_flips("coord_sn_negn") and not template_flips("plain")


def test_labels_balanced_and_consistent_with_lexicon():
    spec = small_spec()
    sents = generate_sentences(spec, "books", "source_labeled", 220, labeled=True)
    labels = [s.label for s in sents]
    assert labels.count(0) == labels.count(1) == 110
    pos, neg = set(spec.sentiment_lexicon["positive"]), set(spec.sentiment_lexicon["negative"])
    for s in sents:
        (sent_word,) = [w for w in s.words if w in pos | neg]
        polarity = int(sent_word in pos)
        negated = any(t.form in ("not", "never") and s.tokens[t.head].form == sent_word for t in s.tokens)
        assert s.label == polarity ^ int(negated)


def test_ambiguous_skeletons_share_a_bag_of_words():
    # the negated coordination pairs produce the same multiset of slots but opposite flips
    bag = lambda n: sorted(s[0] for s in TEMPLATES[n])
    assert bag("coord_sn_negs") == bag("coord_sn_negn")
    assert template_flips("coord_sn_negs") != template_flips("coord_sn_negn")


def test_unlabeled_split_hides_labels():
    sents = generate_sentences(small_spec(), "kitchen", "target_unlabeled", 10, labeled=False)
    assert all(s.label is None for s in sents)


def test_negators_off_uses_plain_templates():
    spec = small_spec(negators=False)
    assert spec.template_names() == PLAIN_TEMPLATES
    words = {w for s in generate_sentences(spec, "books", "test", 50, True) for w in s.words}
    assert not words & {"not", "never"}
    with pytest.raises(SynthSpecError):
        SynthSpec(negators=False, templates=NEGATOR_TEMPLATES[:1]).validate()


def test_corpus_is_deterministic():
    a = synth_corpus(small_spec(seed=5))
    b = synth_corpus(small_spec(seed=5))
    c = synth_corpus(small_spec(seed=6))
    assert to_conllu(a.source_labeled) == to_conllu(b.source_labeled)
    assert to_conllu(a.source_labeled) != to_conllu(c.source_labeled)


def test_domain_roles():
    splits = synth_corpus(small_spec(domains=("dvd", "electronics")))
    assert {s.domain for s in splits.source_labeled + splits.source_unlabeled + splits.validation} == {"dvd"}
    assert {s.domain for s in splits.target_unlabeled + splits.test} == {"electronics"}


def test_content_words_shift_between_domains():
    spec = small_spec(n_per_split=400)
    splits = synth_corpus(spec)
    src = collections.Counter(w for s in splits.source_unlabeled for w in s.words)
    books = set(spec.domain_vocab["books"]["nouns"])
    own = sum(src[w] for w in books)
    borrowed = sum(src[w] for w in spec.domain_vocab["kitchen"]["nouns"])
    assert own > 2 * borrowed > 0


def test_shared_skeletons_give_equal_relation_statistics():
    splits = synth_corpus(small_spec(n_per_split=220))
    a = relation_distribution(splits.source_labeled)
    b = relation_distribution(splits.test)
    assert a.keys() == b.keys()
    assert max(abs(a[k] - b[k]) for k in a) < 1e-9


def test_from_mapping():
    spec = SynthSpec.from_mapping(
        {"n_source_labeled": "12", "seed": "3", "domains": "dvd, kitchen", "positive": "nice, fine", "nouns.dvd": "film"}
    )
    assert spec.size("source_labeled") == 12 and spec.size("test") == 100
    assert spec.domains == ("dvd", "kitchen")
    assert spec.sentiment_lexicon["positive"] == ["nice", "fine"]
    assert spec.domain_vocab["dvd"]["nouns"] == ["film"]
    with pytest.raises(SynthSpecError):
        SynthSpec.from_mapping({"bogus": "1"})
    with pytest.raises(SynthSpecError):
        SynthSpec.from_mapping({"seed": "x"})


@pytest.mark.parametrize(
    "kw",
    [dict(domains=("books",)), dict(domains=("books", "books")), dict(cross_domain_rate=1.5), dict(templates=("nope",))],
)
def test_invalid_specs(kw):
    with pytest.raises(SynthSpecError):
        SynthSpec(**kw).validate()


def test_sentence_ids_unique_across_splits():
    splits = synth_corpus(small_spec())
    ids = [s.sent_id for name in splits.names() for s in splits.split(name)]
    assert len(ids) == len(set(ids))
    assert np.all([len(s) >= 4 for s in splits.test])
