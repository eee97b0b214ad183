"""Single-file checkpoint container.

A checkpoint is a zip archive with two members: ``header.json`` (format
version, model kind, stage, configs, vocabulary, training history and the
parameter table) and ``params.bin`` (raw little-endian tensors in table
order).  Member timestamps are fixed so identical parameters give
identical bytes.
"""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import ConfigError, DataError

FORMAT_VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)


@dataclass
class Checkpoint:
    kind: str
    stage: str
    config: dict[str, Any]
    vocab: dict[str, Any]
    state: dict[str, np.ndarray]
    train_config: dict[str, Any] = field(default_factory=dict)
    history: list[dict[str, Any]] = field(default_factory=list)
    format_version: int = FORMAT_VERSION

    def header(self) -> dict[str, Any]:
        return {
            "format_version": self.format_version,
            "kind": self.kind,
            "stage": self.stage,
            "config": self.config,
            "vocab": self.vocab,
            "train_config": self.train_config,
            "history": self.history,
            "params": [
                {"name": k, "dtype": str(v.dtype), "shape": list(v.shape)}
                for k, v in self.state.items()
            ],
        }

    def _payload(self) -> bytes:
        buf = io.BytesIO()
        for v in self.state.values():
            buf.write(np.ascontiguousarray(v, dtype=v.dtype.newbyteorder("<")).tobytes())
        return buf.getvalue()

    def digest(self) -> str:
        """SHA-256 over parameter names, shapes and bytes."""
        h = hashlib.sha256()
        for k, v in self.state.items():
            h.update(f"{k}:{v.dtype}:{v.shape};".encode())
        h.update(self._payload())
        return h.hexdigest()

    def save(self, path: str | Path) -> None:
        header = json.dumps(self.header(), sort_keys=True, indent=1).encode()
        with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
            for name, data in (("header.json", header), ("params.bin", self._payload())):
                info = zipfile.ZipInfo(name, date_time=_EPOCH)
                info.compress_type = zipfile.ZIP_DEFLATED
                zf.writestr(info, data)

    @classmethod
    def load(cls, path: str | Path, expected_config: dict[str, Any] | None = None) -> "Checkpoint":
        try:
            with zipfile.ZipFile(path) as zf:
                header = json.loads(zf.read("header.json"))
                payload = zf.read("params.bin")
        except (zipfile.BadZipFile, KeyError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}: not a valid checkpoint ({exc})") from None
        version = header.get("format_version")
        if version != FORMAT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint format version {version!r}")
        state: dict[str, np.ndarray] = {}
        offset = 0
        for entry in header["params"]:
            dt = np.dtype(entry["dtype"]).newbyteorder("<")
            count = int(np.prod(entry["shape"], dtype=np.int64))
            arr = np.frombuffer(payload, dtype=dt, count=count, offset=offset)
            state[entry["name"]] = arr.reshape(entry["shape"]).astype(dt.newbyteorder("="))
            offset += count * dt.itemsize
        if offset != len(payload):
            raise DataError(f"{path}: parameter payload size does not match header")
        ckpt = cls(
            kind=header["kind"],
            stage=header["stage"],
            config=header["config"],
            vocab=header["vocab"],
            state=state,
            train_config=header.get("train_config", {}),
            history=header.get("history", []),
            format_version=version,
        )
        if expected_config is not None:
            ckpt.check_config(expected_config)
        return ckpt

    def check_config(self, expected: dict[str, Any]) -> None:
        diff = {
            k: (self.config.get(k), v) for k, v in expected.items() if self.config.get(k) != v
        }
        if diff:
            raise ConfigError(f"checkpoint config does not match the requested config: {diff}")
