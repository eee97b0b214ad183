"""Encoder and training configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from typing import Any

from ..errors import ConfigError

SCALES = ("toy", "pretrained-adapter")

# Fine-tuning learning rates per encoder scale (pre-training uses TrainConfig's default).
FINETUNE_LR = {"toy": 1e-3, "pretrained-adapter": 2e-5}


@dataclass(frozen=True)
class EncoderConfig:
    max_len: int = 128
    dim: int = 64
    layers: int = 2
    heads: int = 4
    ffn_dim: int | None = None
    dropout: float = 0.1
    scale: str = "toy"
    pretrained_path: str | None = None

    def __post_init__(self) -> None:
        if self.max_len < 2:
            raise ConfigError(f"max_len must be >= 2, got {self.max_len}")
        if self.scale not in SCALES:
            raise ConfigError(f"scale must be one of {SCALES}, got {self.scale!r}")
        if self.scale == "toy":
            if self.dim < 1 or self.layers < 1 or self.heads < 1:
                raise ConfigError("dim, layers and heads must be positive")
            if self.dim % self.heads:
                raise ConfigError(f"dim {self.dim} is not divisible by heads {self.heads}")
        elif not self.pretrained_path:
            raise ConfigError("pretrained-adapter scale needs pretrained_path")
        if not 0 <= self.dropout < 1:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def ffn(self) -> int:
        return self.ffn_dim or 4 * self.dim

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EncoderConfig":
        return cls(**_known(cls, d))

    def architecture(self) -> dict[str, Any]:
        """Fields that must agree between a checkpoint and the model built from it."""
        d = self.to_dict()
        d.pop("dropout")
        return d


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    epochs: int = 3
    lr: float = 1e-4
    seed: int = 0
    optimizer: str = "adam"
    loss: str = "cross-entropy"
    class_weights: bool = False
    weight_decay: float = 0.0

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not self.lr > 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.optimizer != "adam":
            raise ConfigError(f"only the adam optimizer is supported, got {self.optimizer!r}")
        if self.loss != "cross-entropy":
            raise ConfigError(f"only cross-entropy loss is supported, got {self.loss!r}")

    @classmethod
    def finetune_defaults(cls, scale: str = "toy", **overrides) -> "TrainConfig":
        return cls(lr=FINETUNE_LR[scale], **overrides)

    def with_(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TrainConfig":
        return cls(**_known(cls, d))


def _known(cls, d: dict[str, Any]) -> dict[str, Any]:
    names = {f.name for f in fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} field(s): {sorted(unknown)}")
    return dict(d)
