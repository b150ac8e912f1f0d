"""Checkpoint directories: a text manifest plus one flat little-endian float64 blob.

Layout::

    manifest.txt   "gast-checkpoint <version>" then "<name> <shape> <offset> <count>" per array
    params.bin     arrays concatenated in manifest order
    config.txt     the ExperimentConfig as key = value lines
    words.txt, tags.txt, relations.txt   one vocabulary entry per line
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..corpus.vocab import Vocab
from ..model import GASTModel, Vocabularies
from .config import ExperimentConfig

FORMAT = "gast-checkpoint"
VERSION = 1


class CheckpointError(IOError):
    pass


def save_checkpoint(path, model: GASTModel, config: ExperimentConfig, arrays: dict[str, np.ndarray] | None = None) -> Path:
    """Write ``model`` (or an explicit name->array snapshot of it) to directory ``path``."""
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        named = arrays if arrays is not None else {k: t.data for k, t in model.named_parameters().items()}
        lines = [f"{FORMAT} {VERSION}"]
        offset = 0
        with open(path / "params.bin", "wb") as fh:
            for name, arr in named.items():
                arr = np.ascontiguousarray(arr, dtype="<f8")
                shape = "x".join(str(s) for s in arr.shape) or "scalar"
                lines.append(f"{name} {shape} {offset} {arr.size}")
                fh.write(arr.tobytes())
                offset += arr.size
        (path / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        (path / "config.txt").write_text(config.to_text(), encoding="utf-8")
        for fname, vocab in (("words", model.vocabs.words), ("tags", model.vocabs.tags), ("relations", model.vocabs.relations)):
            (path / f"{fname}.txt").write_text("\n".join(vocab.to_list()) + "\n", encoding="utf-8")
    except OSError as err:
        raise CheckpointError(f"cannot write checkpoint {path}: {err}") from err
    return path


def _read_vocab(path: Path) -> Vocab:
    return Vocab.from_list(path.read_text(encoding="utf-8").rstrip("\n").split("\n"))


def load_checkpoint(path) -> tuple[GASTModel, ExperimentConfig]:
    path = Path(path)
    try:
        manifest = (path / "manifest.txt").read_text(encoding="utf-8").splitlines()
        blob = np.frombuffer((path / "params.bin").read_bytes(), dtype="<f8")
        config = ExperimentConfig.load(path / "config.txt")
        vocabs = Vocabularies(_read_vocab(path / "words.txt"), _read_vocab(path / "tags.txt"), _read_vocab(path / "relations.txt"))
    except OSError as err:
        raise CheckpointError(f"cannot read checkpoint {path}: {err}") from err
    header = manifest[0].split()
    if len(header) != 2 or header[0] != FORMAT or int(header[1]) != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint header {manifest[0]!r}")
    model = GASTModel.create(
        np.random.default_rng(0), vocabs, config.word_dim, config.pos_config(), config.hgat_config()
    )
    params = model.named_parameters()
    seen = set()
    for line in manifest[1:]:
        if not line.strip():
            continue
        name, shape, offset, count = line.split()
        if name not in params:
            raise CheckpointError(f"{path}: unknown parameter {name!r}")
        dims = () if shape == "scalar" else tuple(int(s) for s in shape.split("x"))
        values = blob[int(offset) : int(offset) + int(count)]
        if values.size != int(count) or params[name].shape != dims:
            raise CheckpointError(f"{path}: parameter {name!r} has shape {dims}, model expects {params[name].shape}")
        params[name].data = values.reshape(dims).astype(np.float64)
        seen.add(name)
    missing = set(params) - seen
    if missing:
        raise CheckpointError(f"{path}: missing parameters {sorted(missing)}")
    return model, config
