"""Run configuration: one flat JSON object with validated fields."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class RunConfig:
    # hyperparameters published with the model
    max_len: int = 128
    embed_dim: int = 128
    kernel_sizes: tuple[int, ...] = (3, 4, 5)
    gru_hidden: int = 128
    heads: int = 4
    dropout: float = 0.5
    batch_size: int = 32
    epochs: int = 3
    lr: float = 0.001
    # unpublished choices
    filters_per_kernel: int = 64
    gcn_hidden: int = 64
    window: int = 3
    adjacency_mode: str = "raw"
    tokenizer: str = "whitespace"
    bidirectional_gru: bool = False
    gru_bias: bool = True
    gcn_bias: bool = False
    share_embedding: bool = True
    lr_decay: float = 0.9
    patience: int = 3
    min_delta: float = 1e-6
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    train_ratio: float = 0.8
    min_freq: int = 1
    max_vocab: int = 50_000
    data_path: str | None = None
    out_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kernel_sizes", tuple(self.kernel_sizes))
        self.validate()

    def validate(self) -> None:
        for f in fields(self):
            _check_type(f.name, getattr(self, f.name), f.type)
        positive = ("max_len", "embed_dim", "gru_hidden", "heads", "batch_size", "epochs",
                    "filters_per_kernel", "gcn_hidden", "patience", "min_freq")
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not self.kernel_sizes or any(k < 1 for k in self.kernel_sizes):
            raise ConfigError("kernel_sizes must be a non-empty list of positive ints")
        if len(set(self.kernel_sizes)) != len(self.kernel_sizes):
            raise ConfigError("kernel_sizes must be distinct")
        if self.gru_hidden % self.heads:
            raise ConfigError(f"gru_hidden {self.gru_hidden} is not divisible by heads {self.heads}")
        if not 0 <= self.dropout < 1:
            raise ConfigError("dropout must lie in [0, 1)")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if not 0 < self.lr_decay <= 1:
            raise ConfigError("lr_decay must lie in (0, 1]")
        if not 0 < self.train_ratio < 1:
            raise ConfigError("train_ratio must lie in (0, 1)")
        if self.window < 2:
            raise ConfigError("window must be >= 2")
        if self.adjacency_mode not in ("raw", "row_norm"):
            raise ConfigError(f"adjacency_mode must be raw or row_norm, got {self.adjacency_mode!r}")
        if self.tokenizer not in ("whitespace", "char"):
            raise ConfigError(f"tokenizer must be whitespace or char, got {self.tokenizer!r}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.adam_eps > 0):
            raise ConfigError("invalid Adam constants")
        if self.max_vocab < 2:
            raise ConfigError("max_vocab must be >= 2")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kernel_sizes"] = list(self.kernel_sizes)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def replace(self, **changes) -> "RunConfig":
        return from_dict({**self.to_dict(), **changes})

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


_TYPES = {"int": int, "float": float, "str": str, "bool": bool}


def _check_type(name, value, annotation) -> None:
    ann = str(annotation)
    if ann == "tuple[int, ...]":
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"{name} must be a list of ints")
        return
    optional = ann.endswith("| None")
    if value is None:
        if not optional:
            raise ConfigError(f"{name} must not be null")
        return
    base = _TYPES[ann.split(" |")[0]]
    if base is bool:
        ok = isinstance(value, bool)
    elif base is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif base is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, base)
    if not ok:
        raise ConfigError(f"{name} must be of type {base.__name__}, got {value!r}")


def from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config key: {unknown[0]}")
    data = dict(data)
    for key in ("lr", "dropout", "lr_decay", "min_delta", "beta1", "beta2", "adam_eps", "train_ratio"):
        if isinstance(data.get(key), int) and not isinstance(data.get(key), bool):
            data[key] = float(data[key])
    return RunConfig(**data)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return from_dict(data)
