"""Seeded two-domain review corpus with syntax-dependent sentiment.

Each sentence instantiates a dependency skeleton.  Sentiment is carried by a
single adjective from a per-polarity lexicon and flips exactly when a
negation word is attached to that adjective as ``advmod``.  In the
coordination skeletons the negator may hang off the neutral conjunct
instead, so those sentences share one bag of words across both labels and
only the tree disambiguates them.

Skeletons are shared by all domains and assigned round-robin, so relation
statistics agree across domains by construction.  Domains differ in which
nouns and neutral adjectives they favour: a slot is filled from the partner
domain's list with probability ``cross_domain_rate``, otherwise from its own.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field, fields

import numpy as np

from ..kvconfig import ConfigError, to_bool, to_list
from .conllu import SyntacticSentence, Token
from .splits import DatasetSplits


class SynthSpecError(ValueError):
    pass


# slot, POS tag, 1-based head (0 = root), relation
TEMPLATES: dict[str, tuple[tuple[str, str, int, str], ...]] = {
    "plain": (("DET", "DT", 2, "det"), ("NOUN", "NN", 4, "nsubj"), ("COP", "VBZ", 4, "cop"), ("SENT", "JJ", 0, "root")),
    "intens": (
        ("DET", "DT", 2, "det"), ("NOUN", "NN", 5, "nsubj"), ("COP", "VBZ", 5, "cop"),
        ("INT", "RB", 5, "advmod"), ("SENT", "JJ", 0, "root"),
    ),
    "amod": (
        ("DET", "DT", 3, "det"), ("NEUT", "JJ", 3, "amod"), ("NOUN", "NN", 5, "nsubj"),
        ("COP", "VBZ", 5, "cop"), ("SENT", "JJ", 0, "root"),
    ),
    "coord_sn": (
        ("DET", "DT", 2, "det"), ("NOUN", "NN", 4, "nsubj"), ("COP", "VBZ", 4, "cop"),
        ("SENT", "JJ", 0, "root"), ("CC", "CC", 6, "cc"), ("NEUT", "JJ", 4, "conj"),
    ),
    "coord_ns": (
        ("DET", "DT", 2, "det"), ("NOUN", "NN", 4, "nsubj"), ("COP", "VBZ", 4, "cop"),
        ("NEUT", "JJ", 0, "root"), ("CC", "CC", 6, "cc"), ("SENT", "JJ", 4, "conj"),
    ),
    "neg": (
        ("DET", "DT", 2, "det"), ("NOUN", "NN", 5, "nsubj"), ("COP", "VBZ", 5, "cop"),
        ("NEG", "RB", 5, "advmod"), ("SENT", "JJ", 0, "root"),
    ),
    "amod_neg": (
        ("DET", "DT", 3, "det"), ("NEUT", "JJ", 3, "amod"), ("NOUN", "NN", 6, "nsubj"),
        ("COP", "VBZ", 6, "cop"), ("NEG", "RB", 6, "advmod"), ("SENT", "JJ", 0, "root"),
    ),
    "coord_sn_negs": (
        ("DET", "DT", 2, "det"), ("NOUN", "NN", 5, "nsubj"), ("COP", "VBZ", 5, "cop"), ("NEG", "RB", 5, "advmod"),
        ("SENT", "JJ", 0, "root"), ("CC", "CC", 7, "cc"), ("NEUT", "JJ", 5, "conj"),
    ),
    "coord_sn_negn": (
        ("DET", "DT", 2, "det"), ("NOUN", "NN", 4, "nsubj"), ("COP", "VBZ", 4, "cop"), ("SENT", "JJ", 0, "root"),
        ("CC", "CC", 7, "cc"), ("NEG", "RB", 7, "advmod"), ("NEUT", "JJ", 4, "conj"),
    ),
    "coord_ns_negs": (
        ("DET", "DT", 2, "det"), ("NOUN", "NN", 4, "nsubj"), ("COP", "VBZ", 4, "cop"), ("NEUT", "JJ", 0, "root"),
        ("CC", "CC", 7, "cc"), ("NEG", "RB", 7, "advmod"), ("SENT", "JJ", 4, "conj"),
    ),
    "coord_ns_negn": (
        ("DET", "DT", 2, "det"), ("NOUN", "NN", 5, "nsubj"), ("COP", "VBZ", 5, "cop"), ("NEG", "RB", 5, "advmod"),
        ("NEUT", "JJ", 0, "root"), ("CC", "CC", 7, "cc"), ("SENT", "JJ", 5, "conj"),
    ),
}

PLAIN_TEMPLATES = ("plain", "intens", "amod", "coord_sn", "coord_ns")
NEGATOR_TEMPLATES = ("neg", "amod_neg", "coord_sn_negs", "coord_sn_negn", "coord_ns_negs", "coord_ns_negn")

DEFAULT_DOMAIN_VOCAB: dict[str, dict[str, list[str]]] = {
    "books": {
        "nouns": ["book", "novel", "story", "plot", "author", "chapter", "ending", "character", "prose", "sequel"],
        "neutral": ["long", "short", "thick", "old", "fictional", "historical", "hardcover", "translated"],
    },
    "dvd": {
        "nouns": ["film", "movie", "scene", "actor", "soundtrack", "director", "cast", "episode", "script", "trailer"],
        "neutral": ["animated", "foreign", "silent", "classic", "subtitled", "musical", "remastered", "lengthy"],
    },
    "electronics": {
        "nouns": ["battery", "screen", "charger", "cable", "speaker", "camera", "keyboard", "remote", "adapter", "mouse"],
        "neutral": ["wireless", "digital", "black", "portable", "rechargeable", "compact", "silver", "analog"],
    },
    "kitchen": {
        "nouns": ["blender", "knife", "kettle", "toaster", "pan", "mixer", "lid", "handle", "grill", "skillet"],
        "neutral": ["heavy", "steel", "plastic", "large", "red", "electric", "ceramic", "nonstick"],
    },
}

DEFAULT_LEXICON: dict[str, list[str]] = {
    "positive": ["good", "great", "excellent", "wonderful", "fantastic", "superb", "perfect", "lovely", "amazing", "solid"],
    "negative": ["bad", "terrible", "awful", "poor", "horrible", "disappointing", "useless", "mediocre", "dreadful", "flimsy"],
}

FUNCTION_WORDS: dict[str, list[str]] = {
    "DET": ["the", "this", "my", "that"],
    "COP": ["is", "was"],
    "CC": ["and", "but"],
    "INT": ["really", "very", "quite"],
    "NEG": ["not", "never"],
}

SPLIT_ORDER = ("source_labeled", "source_unlabeled", "target_unlabeled", "validation", "test")


@dataclass
class SynthSpec:
    n_per_split: int = 100
    split_sizes: dict[str, int] = field(default_factory=dict)
    seed: int = 0
    domains: tuple[str, ...] = ("books", "kitchen")
    negators: bool = True
    cross_domain_rate: float = 0.25
    templates: tuple[str, ...] = ()
    domain_vocab: dict[str, dict[str, list[str]]] = field(default_factory=lambda: DEFAULT_DOMAIN_VOCAB)
    sentiment_lexicon: dict[str, list[str]] = field(default_factory=lambda: DEFAULT_LEXICON)

    def size(self, split: str) -> int:
        return self.split_sizes.get(split, self.n_per_split)

    def template_names(self) -> tuple[str, ...]:
        if self.templates:
            return tuple(self.templates)
        return PLAIN_TEMPLATES + (NEGATOR_TEMPLATES if self.negators else ())

    def validate(self) -> None:
        if len(self.domains) < 2:
            raise SynthSpecError(f"need two domains, got {list(self.domains)}")
        if len(set(self.domains)) != len(self.domains):
            raise SynthSpecError("domain names must be distinct")
        for polarity in ("positive", "negative"):
            if not self.sentiment_lexicon.get(polarity):
                raise SynthSpecError(f"empty {polarity} sentiment lexicon")
        for dom in self.domains[:2]:
            vocab = self.domain_vocab.get(dom)
            if not vocab or not vocab.get("nouns") or not vocab.get("neutral"):
                raise SynthSpecError(f"domain {dom!r} needs non-empty 'nouns' and 'neutral' word lists")
        for name in self.template_names():
            if name not in TEMPLATES:
                raise SynthSpecError(f"unknown template {name!r}")
            if not self.negators and name in NEGATOR_TEMPLATES:
                raise SynthSpecError(f"template {name!r} needs negators enabled")
        if not 0.0 <= self.cross_domain_rate <= 1.0:
            raise SynthSpecError(f"cross_domain_rate must lie in [0, 1], got {self.cross_domain_rate}")
        for split in SPLIT_ORDER:
            if self.size(split) < 0:
                raise SynthSpecError(f"negative size for {split}")

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> SynthSpec:
        """Build from flat keys: ``n_<split>``, ``positive``, ``nouns.<domain>`` and the field names."""
        spec = cls()
        vocab = {d: {k: list(v) for k, v in words.items()} for d, words in DEFAULT_DOMAIN_VOCAB.items()}
        lexicon = {k: list(v) for k, v in DEFAULT_LEXICON.items()}
        names = {f.name for f in fields(cls)}
        for key, value in values.items():
            try:
                if key.startswith("n_") and key[2:] in SPLIT_ORDER:
                    spec.split_sizes[key[2:]] = int(value)
                elif key in ("positive", "negative"):
                    lexicon[key] = to_list(value)
                elif "." in key and key.split(".", 1)[0] in ("nouns", "neutral"):
                    kind, dom = key.split(".", 1)
                    vocab.setdefault(dom, {})[kind] = to_list(value)
                elif key in ("n_per_split", "seed"):
                    setattr(spec, key, int(value))
                elif key == "cross_domain_rate":
                    spec.cross_domain_rate = float(value)
                elif key == "negators":
                    spec.negators = to_bool(value)
                elif key in ("domains", "templates"):
                    setattr(spec, key, tuple(to_list(value)))
                elif key not in names:
                    raise SynthSpecError(f"unknown synthetic-corpus key {key!r}")
            except (ValueError, ConfigError) as err:
                if isinstance(err, SynthSpecError):
                    raise
                raise SynthSpecError(f"bad value for {key!r}: {value!r}") from None
        spec.domain_vocab = vocab
        spec.sentiment_lexicon = lexicon
        return spec


def template_flips(name: str) -> bool:
    """True when the skeleton attaches its negator to the sentiment adjective."""
    slots = TEMPLATES[name]
    return any(s == "NEG" and slots[head - 1][0] == "SENT" for s, _, head, _ in slots)


def _fill(rng: np.random.Generator, slot: str, own: dict[str, list[str]], other: dict[str, list[str]], rate: float) -> str:
    if slot in ("NOUN", "NEUT"):
        kind = "nouns" if slot == "NOUN" else "neutral"
        # borrowing keeps every content word attested in both domains; only frequencies shift
        words = other[kind] if rng.random() < rate else own[kind]
    else:
        words = FUNCTION_WORDS[slot]
    return words[rng.integers(len(words))]


def generate_sentences(spec: SynthSpec, domain: str, split: str, n: int, labeled: bool) -> list[SyntacticSentence]:
    """``n`` sentences of one domain with exactly balanced (latent) labels."""
    spec.validate()
    names = spec.template_names()
    vocab = spec.domain_vocab[domain]
    partner = next(d for d in spec.domains[:2] if d != domain) if domain in spec.domains[:2] else spec.domains[0]
    other = spec.domain_vocab[partner]
    rng = np.random.default_rng([spec.seed, zlib.crc32(domain.encode()), SPLIT_ORDER.index(split)])
    out = []
    for i in range(n):
        label = i % 2
        name = names[(i // 2) % len(names)]
        polarity = label ^ int(template_flips(name))
        lexicon = spec.sentiment_lexicon["positive" if polarity else "negative"]
        tokens = []
        for slot, tag, head, rel in TEMPLATES[name]:
            form = lexicon[rng.integers(len(lexicon))] if slot == "SENT" else _fill(rng, slot, vocab, other, spec.cross_domain_rate)
            if slot == "COP" and form == "was":
                tag = "VBD"
            tokens.append(Token(form, tag, None if head == 0 else head - 1, rel))
        out.append(
            SyntacticSentence(tuple(tokens), label=label if labeled else None, domain=domain, sent_id=f"{domain}/{split}/{i:05d}")
        )
    order = rng.permutation(n)
    return [out[k] for k in order]


def synth_corpus(spec: SynthSpec) -> DatasetSplits:
    spec.validate()
    source, target = spec.domains[0], spec.domains[1]
    parts = {}
    for split in SPLIT_ORDER:
        domain = target if split in ("target_unlabeled", "test") else source
        labeled = split in ("source_labeled", "validation", "test")
        parts[split] = generate_sentences(spec, domain, split, spec.size(split), labeled)
    return DatasetSplits(**parts, source_domain=source, target_domain=target)
