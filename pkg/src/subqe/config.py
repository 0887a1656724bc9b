"""Flat key=value pipeline configuration with environment-based path defaults."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

from .bow import BowParams
from .errors import ConfigError
from .forest import ForestParams
from .labeler import FusionThresholds
from .model import Architecture, Head, ModelConfig, TrainConfig

ENV_DATA_DIR = "SUBQE_DATA_DIR"


@dataclass
class PipelineConfig:
    source_lang: str = "en"
    target_lang: str = "de"
    seed: int = 0
    # file paths, resolved against SUBQE_DATA_DIR when relative
    src_embeddings: str = ""
    tgt_embeddings: str = ""
    good_pairs: str = ""
    caption_lexicon: str = ""
    # bow
    theta1: float = 0.6
    theta2: float = 0.30
    # fusion
    delta1: float = 0.25
    delta2: float = 0.4
    delta3: float = 0.7
    delta4: float = 0.8
    strict_loose: bool = False
    # alignment / generators
    min_overlap_ratio: float = 0.5
    drift_window: int = 3
    n_samples: int = 10000
    source_weights: str = ""  # six comma-separated percentages, or empty for defaults
    # forest
    n_trees: int = 100
    max_depth: int = 0  # 0 = unlimited
    min_samples_leaf: int = 1
    features_per_split: int = 0  # 0 = ceil(sqrt(n_features))
    # neural model
    embed_dim: int = 300
    lstm_hidden: int = 32
    conv_channels: str = "32,32"
    kernel_width: int = 3
    fc_width: int = 64
    dropout: float = 0.3
    arch: str = "hybrid"
    head: str = "classification"
    batch_size: int = 256
    lr: float = 1e-3
    max_epochs: int = 200

    def resolve_path(self, value: str) -> str:
        if not value:
            return value
        base = os.environ.get(ENV_DATA_DIR, "")
        if base and not os.path.isabs(value):
            return os.path.join(base, value)
        return value

    def bow_params(self) -> BowParams:
        return BowParams(self.theta1, self.theta2, self.target_lang)

    def fusion_thresholds(self) -> FusionThresholds:
        return FusionThresholds(self.delta1, self.delta2, self.delta3, self.delta4)

    def forest_params(self) -> ForestParams:
        return ForestParams(
            n_trees=self.n_trees,
            max_depth=self.max_depth or None,
            min_samples_leaf=self.min_samples_leaf,
            features_per_split=self.features_per_split or None,
        )

    def model_config(self) -> ModelConfig:
        channels = tuple(int(v) for v in self.conv_channels.split(","))
        return ModelConfig(
            embed_dim=self.embed_dim,
            lstm_hidden=self.lstm_hidden,
            conv_channels=channels,  # type: ignore[arg-type]
            kernel_width=self.kernel_width,
            fc_width=self.fc_width,
            dropout_p=self.dropout,
            architecture=Architecture(self.arch),
            head=Head(self.head),
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(lr=self.lr, batch_size=self.batch_size,
                           max_epochs=self.max_epochs, seed=self.seed)

    def weights_tuple(self) -> tuple[float, ...] | None:
        if not self.source_weights:
            return None
        values = tuple(float(v) for v in self.source_weights.split(","))
        if len(values) != 6:
            raise ConfigError("source_weights needs exactly 6 comma-separated values")
        return values

    def validate(self) -> None:
        try:
            self.bow_params()
            self.fusion_thresholds()
            self.model_config()
            self.weights_tuple()
        except (ValueError, ConfigError) as exc:
            raise ConfigError(str(exc)) from exc
        if not 0 < self.min_overlap_ratio <= 1:
            raise ConfigError("min_overlap_ratio must be in (0, 1]")
        if self.drift_window < 1:
            raise ConfigError("drift_window must be >= 1")
        if self.source_lang == self.target_lang:
            raise ConfigError("source_lang and target_lang must differ")
        for name in ("src_embeddings", "tgt_embeddings", "good_pairs",
                     "caption_lexicon"):
            value = getattr(self, name)
            if value and not os.path.exists(self.resolve_path(value)):
                raise ConfigError(f"{name} path does not exist: {value}")


def emit(config: PipelineConfig) -> str:
    lines = []
    for f in fields(config):
        value = getattr(config, f.name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def parse(text: str) -> PipelineConfig:
    config = PipelineConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not hasattr(config, key):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        current = getattr(config, key)
        try:
            if isinstance(current, bool):
                setattr(config, key, value.lower() in ("true", "1", "yes"))
            elif isinstance(current, int):
                setattr(config, key, int(value))
            elif isinstance(current, float):
                setattr(config, key, float(value))
            else:
                setattr(config, key, value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    return config


def load(path) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
