"""Experiment configuration: flat ``key = value`` files plus ``--key value`` overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from typing import Iterable

from ..adapt import LossWeights
from ..hgat import HgatConfig
from ..kvconfig import ConfigError, format_kv, read_kv, to_bool
from ..pos_transformer import PosTransformerConfig

STRATEGIES = ("ids", "grl")
ABLATIONS = ("none", "non_pos", "non_hgat", "non_ids", "non_agg", "non_act")


@dataclass
class ExperimentConfig:
    # data: a directory of <split>.conllu files, or the synthetic generator
    data_dir: str = ""
    synth_config: str = ""
    synth_seed: int = 0
    n_source_labeled: int = 1600
    n_source_unlabeled: int = 4000
    n_target_unlabeled: int = 4000
    n_validation: int = 400
    n_test: int = 2000
    source_domain: str = "books"
    target_domain: str = "kitchen"
    negators: bool = True
    cross_domain_rate: float = 0.25
    embeddings: str = ""
    # model
    word_dim: int = 300
    d_model: int = 256
    tag_dim: int = 30
    rel_dim: int = 30
    pt_heads: int = 8
    pt_layers: int = 1
    ffn_hidden: int = 0
    residual: bool = False
    layer_norm: bool = False
    gat_heads: int = 3
    gat_head_dim: int = 32
    hgat_layers: int = 2
    hgat_in: int = 0
    leaky_slope: float = 0.2
    dropout: float = 0.25
    # optimisation
    lr: float = 1e-4
    batch_size: int = 32
    epochs: int = 30
    seed: int = 0
    lambda_c: float = 1.0
    lambda_d: float = 1.0
    lambda_a: float = 0.8
    lambda_grl: float = 1.0
    strategy: str = "ids"
    ablation: str = "none"
    output_dir: str = "runs/gast"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.d_model % self.pt_heads:
            raise ConfigError(f"d_model={self.d_model} must be divisible by pt_heads={self.pt_heads}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.ablation not in ABLATIONS:
            raise ConfigError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be at least 2")
        if self.lr <= 0 or self.epochs < 0:
            raise ConfigError("lr must be positive and epochs nonnegative")
        for name in ("word_dim", "d_model", "tag_dim", "rel_dim", "gat_heads", "gat_head_dim", "hgat_layers", "pt_layers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if not 0.0 <= self.cross_domain_rate <= 1.0:
            raise ConfigError("cross_domain_rate must lie in [0, 1]")
        if min(self.lambda_c, self.lambda_d, self.lambda_a) < 0:
            raise ConfigError("loss weights must be nonnegative")

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    # ------------------------------------------------------------ ablation wiring

    @property
    def effective_strategy(self) -> str:
        return "grl" if self.ablation == "non_ids" else self.strategy

    def loss_weights(self) -> LossWeights:
        lambda_a = 0.0 if self.effective_strategy == "grl" else self.lambda_a
        return LossWeights(self.lambda_c, self.lambda_d, lambda_a)

    def pos_config(self) -> PosTransformerConfig:
        return PosTransformerConfig(
            d_model=self.d_model,
            heads=self.pt_heads,
            d_t=self.tag_dim,
            dropout_p=self.dropout,
            ffn_hidden=self.ffn_hidden,
            layers=self.pt_layers,
            use_tags=self.ablation != "non_pos",
            residual=self.residual,
            layer_norm=self.layer_norm,
        )

    def hgat_config(self) -> HgatConfig | None:
        if self.ablation == "non_hgat":
            return None
        return HgatConfig(
            layers=self.hgat_layers,
            heads=self.gat_heads,
            d_in=self.hgat_in or self.d_model,
            d_head=self.gat_head_dim,
            d_r=self.rel_dim,
            leaky_slope=self.leaky_slope,
            dropout_p=self.dropout,
            use_agg=self.ablation != "non_agg",
            use_act=self.ablation != "non_act",
        )

    # ------------------------------------------------------------ (de)serialisation

    def to_dict(self) -> dict[str, object]:
        return dataclasses.asdict(self)

    def to_text(self) -> str:
        return format_kv(self.to_dict())

    @classmethod
    def from_mapping(cls, values: dict[str, str], base: ExperimentConfig | None = None) -> ExperimentConfig:
        types = {f.name: f.type for f in fields(cls)}
        current = (base or cls()).to_dict()
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in types:
                raise ConfigError(f"unknown configuration key {key!r}")
            kind = types[key]
            try:
                if kind == "bool":
                    current[key] = to_bool(raw) if isinstance(raw, str) else bool(raw)
                elif kind == "int":
                    current[key] = int(raw)
                elif kind == "float":
                    current[key] = float(raw)
                else:
                    current[key] = str(raw)
            except ValueError:
                raise ConfigError(f"bad value for {key!r}: {raw!r}") from None
        return cls(**current)

    @classmethod
    def load(cls, path: str | None = None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
        cfg = cls.from_mapping(read_kv(path)) if path else cls()
        if overrides:
            cfg = cls.from_mapping(overrides, base=cfg)
        return cfg


def parse_overrides(args: Iterable[str]) -> dict[str, str]:
    """``['--lr', '1e-3', '--epochs=5']`` -> ``{'lr': '1e-3', 'epochs': '5'}``."""
    args = list(args)
    out: dict[str, str] = {}
    i = 0
    while i < len(args):
        tok = args[i]
        if not tok.startswith("--"):
            raise ConfigError(f"expected --key value, got {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            if i + 1 >= len(args):
                raise ConfigError(f"missing value for {tok}")
            i += 1
            value = args[i]
        out[key.replace("-", "_")] = value
        i += 1
    return out
