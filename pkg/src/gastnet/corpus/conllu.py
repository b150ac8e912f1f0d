"""Reading and writing dependency-parsed sentences.

Accepted input is either full 10-column CoNLL-U or a compact 5-column
variant ``ID FORM POS HEAD DEPREL``.  HEAD is 1-based with ``0`` (or
``ROOT``) marking the root word, as parsers emit it.  Internally heads are
0-based and the root has ``head is None``; no ROOT node is materialised.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .vocab import SELF, Vocab


class IngestionError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Token:
    form: str
    pos_tag: str
    head: int | None
    deprel: str


@dataclass(frozen=True)
class SyntacticSentence:
    """A parsed sentence viewed as the graph (words, adjacency, relation labels).

    Adjacency is symmetric and carries a self-loop on every word; both
    directions of a dependency share the dependent's relation label.
    """

    tokens: tuple[Token, ...]
    label: int | None = None
    domain: str = ""
    sent_id: str = ""
    _labels: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        n = len(self.tokens)
        rel = np.full((n, n), None, dtype=object)
        for i, tok in enumerate(self.tokens):
            rel[i, i] = SELF
            if tok.head is not None:
                rel[i, tok.head] = tok.deprel
                rel[tok.head, i] = tok.deprel
        object.__setattr__(self, "_labels", rel)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.form for t in self.tokens]

    @property
    def tags(self) -> list[str]:
        return [t.pos_tag for t in self.tokens]

    @property
    def text(self) -> str:
        return " ".join(self.words)

    @property
    def adjacency(self) -> np.ndarray:
        return self._labels != None  # noqa: E711  (elementwise on an object array)

    @property
    def relation_labels(self) -> np.ndarray:
        return self._labels.copy()

    def relation_ids(self, vocab: Vocab) -> np.ndarray:
        """n x n relation ids; PAD where there is no edge, SELF on the diagonal."""
        out = np.full(self._labels.shape, vocab.pad_id, dtype=np.int64)
        for (i, j), lab in np.ndenumerate(self._labels):
            if lab is not None:
                out[i, j] = vocab[lab]
        return out

    def edges(self) -> list[tuple[int, int, str]]:
        """Undirected dependency edges ``(low, high, deprel)``, self-loops excluded."""
        return sorted(
            (min(i, t.head), max(i, t.head), t.deprel)
            for i, t in enumerate(self.tokens)
            if t.head is not None
        )


def _check_tree(heads: Sequence[int | None], lines: Sequence[int]) -> None:
    n = len(heads)
    for i, h in enumerate(heads):
        if h is None:
            continue
        if h == i:
            raise IngestionError(f"token {i + 1} is its own head", lines[i])
        if not 0 <= h < n:
            raise IngestionError(f"head {h + 1} out of range for sentence of {n} tokens", lines[i])
    for start in range(n):
        seen = set()
        node = start
        while node is not None:
            if node in seen:
                raise IngestionError("cyclic head chain", lines[start])
            seen.add(node)
            node = heads[node]


def _parse_head(raw: str, lineno: int) -> int | None:
    if raw.upper() == "ROOT" or raw == "0":
        return None
    try:
        return int(raw) - 1
    except ValueError:
        raise IngestionError(f"non-integer head {raw!r}", lineno) from None


def _finish(rows, meta, lines, count) -> SyntacticSentence:
    heads = [r[2] for r in rows]
    _check_tree(heads, lines)
    label = meta.get("label")
    if label is not None:
        if label not in ("0", "1"):
            raise IngestionError(f"label must be 0 or 1, got {label!r}", lines[0])
        label = int(label)
    tokens = tuple(Token(form, tag, head, rel) for form, tag, head, rel in rows)
    return SyntacticSentence(
        tokens,
        label=label,
        domain=meta.get("domain", ""),
        sent_id=meta.get("sent_id", str(count)),
    )


def parse_conllu(text: str, lowercase: bool = True) -> list[SyntacticSentence]:
    sentences: list[SyntacticSentence] = []
    rows: list[tuple[str, str, int | None, str]] = []
    lines: list[int] = []
    meta: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if rows:
                sentences.append(_finish(rows, meta, lines, len(sentences)))
            elif meta:
                raise IngestionError("comment block without tokens", lineno)
            rows, lines, meta = [], [], {}
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) >= 10:
            if "-" in cols[0] or "." in cols[0]:
                continue  # multiword ranges and empty nodes
            idx, form, pos, head, rel = cols[0], cols[1], cols[3], cols[6], cols[7]
            if pos == "_":
                pos = cols[4]
        elif len(cols) >= 5:
            idx, form, pos, head, rel = cols[:5]
        else:
            raise IngestionError(f"expected 5 or 10 tab-separated columns, got {len(cols)}", lineno)
        try:
            idx_num = int(idx)
        except ValueError:
            raise IngestionError(f"non-integer token id {idx!r}", lineno) from None
        if idx_num != len(rows) + 1:
            raise IngestionError(f"token id {idx_num} out of sequence", lineno)
        rows.append((form.lower() if lowercase else form, pos, _parse_head(head, lineno), rel))
        lines.append(lineno)
    if rows:
        sentences.append(_finish(rows, meta, lines, len(sentences)))
    return sentences


def read_conllu(path, lowercase: bool = True) -> list[SyntacticSentence]:
    with open(path, encoding="utf-8") as fh:
        return parse_conllu(fh.read(), lowercase=lowercase)


def to_conllu(sentences: Iterable[SyntacticSentence]) -> str:
    """Serialise to the 5-column format understood by :func:`parse_conllu`."""
    blocks = []
    for sent in sentences:
        out = []
        if sent.sent_id:
            out.append(f"# sent_id = {sent.sent_id}")
        if sent.domain:
            out.append(f"# domain = {sent.domain}")
        if sent.label is not None:
            out.append(f"# label = {sent.label}")
        for i, tok in enumerate(sent.tokens, start=1):
            head = 0 if tok.head is None else tok.head + 1
            out.append(f"{i}\t{tok.form}\t{tok.pos_tag}\t{head}\t{tok.deprel}")
        blocks.append("\n".join(out) + "\n")
    return "\n".join(blocks)


def write_conllu(path, sentences: Iterable[SyntacticSentence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_conllu(sentences))
