"""Experiment configuration.

One flat TOML file drives every subcommand. Relative paths are resolved
against the config file's directory, the seed must be explicit, and the
config hash (sha256 of the canonical field dump) is embedded in generated
artifacts so outputs are traceable to their settings.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .probes import DROPOUT_RANGE, LR_RANGE, PROBE_KINDS, SearchSpace, TrainConfig

PATH_FIELDS = (
    "train_conllu",
    "dev_conllu",
    "test_conllu",
    "jabberwocky_conllu",
    "lexicon",
    "word_vectors",
    "position_table",
    "embeddings_dir",
    "output_dir",
)


@dataclass
class ExperimentConfig:
    seed: int
    train_conllu: Optional[str] = None
    dev_conllu: Optional[str] = None
    test_conllu: Optional[str] = None
    jabberwocky_conllu: Optional[str] = None
    lexicon: Optional[str] = None
    word_vectors: Optional[str] = None
    position_table: Optional[str] = None
    embeddings_dir: Optional[str] = None
    output_dir: str = "out"
    models: List[str] = field(default_factory=list)
    layers: List[int] = field(default_factory=lambda: [0])
    probes: List[str] = field(default_factory=lambda: list(PROBE_KINDS))
    include_past_bundle: bool = False
    substitution_probability: float = 1.0
    learning_rate: float = 1e-3
    rank: int = 8
    dropout: float = 0.2
    batch_size: int = 64
    max_epochs: int = 20
    patience: int = 15
    checkpoint_every: int = 100
    search_trials: int = 10
    lr_min: float = LR_RANGE[0]
    lr_max: float = LR_RANGE[1]
    rank_min: int = 1
    rank_max: Optional[int] = None
    dropout_min: float = DROPOUT_RANGE[0]
    dropout_max: float = DROPOUT_RANGE[1]
    dspr_length_filter: bool = False
    exclude_punct: bool = False

    def validate(self) -> None:
        if not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an explicit integer, got {self.seed!r}")
        for kind in self.probes:
            if kind not in PROBE_KINDS:
                raise ConfigError(f"probes: unknown probe kind {kind!r}")
        if any(layer < 0 for layer in self.layers):
            raise ConfigError("layers: layer indices must be >= 0")
        if len(set(self.layers)) != len(self.layers):
            raise ConfigError("layers: duplicate layer indices")
        if not 0.0 <= self.substitution_probability <= 1.0:
            raise ConfigError(
                "substitution_probability: "
                f"{self.substitution_probability} outside [0, 1]"
            )
        if self.search_trials < 1:
            raise ConfigError(f"search_trials: must be >= 1, got {self.search_trials}")

    def require_paths(self, *names: str) -> None:
        """Check that the named path fields are set and exist on disk."""
        for name in names:
            value = getattr(self, name)
            if value is None:
                raise ConfigError(f"{name}: required path is not configured")
            if not Path(value).exists():
                raise ConfigError(f"{name}: path does not exist: {value}")

    def train_config(self, seed: Optional[int] = None) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            rank=self.rank,
            dropout=self.dropout,
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            patience=self.patience,
            seed=self.seed if seed is None else seed,
            checkpoint_every=self.checkpoint_every,
        )

    def search_space(self) -> SearchSpace:
        return SearchSpace(
            lr_min=self.lr_min,
            lr_max=self.lr_max,
            rank_min=self.rank_min,
            rank_max=self.rank_max,
            dropout_min=self.dropout_min,
            dropout_max=self.dropout_max,
        )

    def config_hash(self) -> str:
        canonical = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def load_config(path) -> ExperimentConfig:
    """Parse a flat TOML config; relative paths resolve against its folder."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file does not exist: {path}")
    try:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if "seed" not in raw:
        raise ConfigError("seed: must be set explicitly in the config file")
    config = ExperimentConfig(**raw)
    base = path.parent
    for name in PATH_FIELDS:
        value = getattr(config, name)
        if value is not None and not Path(value).is_absolute():
            setattr(config, name, str(base / value))
    config.validate()
    return config
