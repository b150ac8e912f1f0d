"""String-to-id vocabularies with reserved entries."""

from __future__ import annotations

from typing import Iterable

PAD = "<pad>"
UNK = "<unk>"
SELF = "<self>"


class Vocab:
    """Dense id map.  Reserved entries come first; once frozen, unseen strings map to UNK."""

    def __init__(self, tokens: Iterable[str] = (), *, relations: bool = False):
        self.itos: list[str] = [PAD, UNK] + ([SELF] if relations else [])
        self.stoi: dict[str, int] = {s: i for i, s in enumerate(self.itos)}
        self.frozen = False
        for tok in tokens:
            self.add(tok)

    @property
    def pad_id(self) -> int:
        return self.stoi[PAD]

    @property
    def unk_id(self) -> int:
        return self.stoi[UNK]

    @property
    def self_id(self) -> int:
        return self.stoi[SELF]

    @property
    def is_relations(self) -> bool:
        return SELF in self.stoi

    def add(self, token: str) -> int:
        if token in self.stoi:
            return self.stoi[token]
        if self.frozen:
            return self.unk_id
        self.stoi[token] = len(self.itos)
        self.itos.append(token)
        return self.stoi[token]

    def freeze(self) -> Vocab:
        self.frozen = True
        return self

    def __getitem__(self, token: str) -> int:
        return self.stoi.get(token, self.unk_id)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def __len__(self) -> int:
        return len(self.itos)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.itos == other.itos

    def to_list(self) -> list[str]:
        return list(self.itos)

    @classmethod
    def from_list(cls, itos: list[str]) -> Vocab:
        vocab = cls(relations=SELF in itos[:3])
        reserved = len(vocab.itos)
        if itos[:reserved] != vocab.itos:
            raise ValueError("vocabulary list does not start with the reserved entries")
        for tok in itos[reserved:]:
            vocab.add(tok)
        return vocab.freeze()
