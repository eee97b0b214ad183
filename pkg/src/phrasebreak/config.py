"""Run configuration: one nested JSON document, overridable key by key."""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path
from typing import Any, Iterable

from .baselines.bilstm import BiLSTMConfig
from .errors import ConfigError
from .neural.config import FINETUNE_LR, EncoderConfig, TrainConfig

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "encoder": EncoderConfig().to_dict(),
    "pretrain": TrainConfig().to_dict(),
    "finetune": TrainConfig(lr=FINETUNE_LR["toy"]).to_dict(),
    "bilstm": BiLSTMConfig().to_dict(),
    "bilstm_train": TrainConfig(lr=1e-3, epochs=10, batch_size=32).to_dict(),
    "corruption": {"p": 0.15, "ratio": 3},
    "synth": {"profile": "mixed"},
    "eval": {"folds": 5, "stratified": True},
    "llm": {"shots": 0, "retries": 2, "max_in_flight": 4, "temperature": 0.0},
}


def _merge(base: dict, extra: dict, path: str = "") -> None:
    for key, value in extra.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key: {where}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be an object")
            _merge(base[key], value, where + ".")
        else:
            base[key] = value


def parse_override(item: str) -> tuple[list[str], Any]:
    """``"finetune.epochs=20"`` -> (["finetune", "epochs"], 20); values are JSON when they parse."""
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"override must look like key.path=value, got {item!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


class RunConfig:
    def __init__(self, data: dict[str, Any] | None = None):
        self.data = copy.deepcopy(DEFAULTS)
        if data:
            _merge(self.data, data)
        self.validate()

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: Iterable[str] = ()) -> "RunConfig":
        data: dict[str, Any] = {}
        if path is not None:
            try:
                data = json.loads(Path(path).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from None
            if not isinstance(data, dict):
                raise ConfigError(f"{path}: config must be a JSON object")
        cfg = cls(data)
        for item in overrides:
            cfg.set(*parse_override(item))
        cfg.validate()
        return cfg

    def set(self, keys: list[str], value: Any) -> None:
        nested: Any = value
        for k in reversed(keys):
            nested = {k: nested}
        _merge(self.data, nested)

    def validate(self) -> None:
        self.encoder, self.pretrain, self.finetune, self.bilstm, self.bilstm_train
        c = self.data["corruption"]
        if not 0 < c["p"] <= 1 or int(c["ratio"]) < 1:
            raise ConfigError("corruption.p must be in (0, 1] and corruption.ratio >= 1")
        if int(self.data["eval"]["folds"]) < 2:
            raise ConfigError("eval.folds must be >= 2")
        if int(self.data["llm"]["shots"]) < 0:
            raise ConfigError("llm.shots must be >= 0")

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def encoder(self) -> EncoderConfig:
        return EncoderConfig.from_dict(self.data["encoder"])

    def _train(self, section: str) -> TrainConfig:
        try:
            return TrainConfig.from_dict(self.data[section])
        except TypeError as exc:
            raise ConfigError(f"{section}: {exc}") from None

    @property
    def pretrain(self) -> TrainConfig:
        return self._train("pretrain")

    @property
    def finetune(self) -> TrainConfig:
        return self._train("finetune")

    @property
    def bilstm_train(self) -> TrainConfig:
        return self._train("bilstm_train")

    @property
    def bilstm(self) -> BiLSTMConfig:
        try:
            return BiLSTMConfig(**self.data["bilstm"])
        except TypeError as exc:
            raise ConfigError(f"bilstm: {exc}") from None

    def section(self, name: str) -> dict[str, Any]:
        return copy.deepcopy(self.data[name])

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()
