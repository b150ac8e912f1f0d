"""Relation-label statistics over parsed corpora."""

from __future__ import annotations

from collections import Counter
from typing import Iterable

from .conllu import SyntacticSentence


class EmptyInputError(ValueError):
    pass


def relation_counts(sentences: Iterable[SyntacticSentence]) -> Counter:
    counts: Counter = Counter()
    for sent in sentences:
        counts.update(rel for _, _, rel in sent.edges())
    return counts


def relation_distribution(sentences: Iterable[SyntacticSentence]) -> dict[str, float]:
    """Percentage of dependency edges carrying each relation label (self-loops excluded)."""
    sentences = list(sentences)
    if not sentences:
        raise EmptyInputError("relation_distribution of an empty corpus")
    counts = relation_counts(sentences)
    total = sum(counts.values())
    if total == 0:
        return {}
    return {rel: 100.0 * c / total for rel, c in sorted(counts.items())}
