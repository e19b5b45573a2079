"""Model and training configuration with a JSON round trip.

One frozen dataclass carries every width, the graph shape, and the
optimization settings.  Batch handling is fixed: one sentence per
optimization step, so no padding or batching knobs exist.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass


class ConfigError(ValueError):
    """A configuration value violates its documented constraint."""


@dataclass(frozen=True)
class Config:
    """Complete recipe for building and training one model.

    Widths: ``char_dim``/``surrogate_dim``/``word_dim``/``pos_dim`` size the
    four embedding tables, ``context_dim`` the fused contextual token
    vectors, and ``node_dim`` the graph node states (split across ``heads``
    attention heads, so it must divide evenly).
    """

    type_names: tuple[str, ...] = ("PER", "ORG", "LOC")
    char_dim: int = 16
    surrogate_dim: int = 32
    word_dim: int = 32
    pos_dim: int = 8
    context_dim: int = 64
    node_dim: int = 64
    heads: int = 4
    depth: int = 3
    window: int = 1
    learning_rate: float = 1e-3
    weight_decay: float = 0.0
    epochs: int = 300
    seed: int = 0
    mask_constant: float = -1e4

    def __post_init__(self):
        object.__setattr__(self, "type_names", tuple(self.type_names))
        if not self.type_names:
            raise ConfigError("type_names must name at least one entity type")
        if len(set(self.type_names)) != len(self.type_names):
            raise ConfigError("type_names must be unique")
        dims = {
            "char_dim": self.char_dim,
            "surrogate_dim": self.surrogate_dim,
            "word_dim": self.word_dim,
            "pos_dim": self.pos_dim,
            "context_dim": self.context_dim,
            "node_dim": self.node_dim,
        }
        for field, value in dims.items():
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{field} must be a positive integer")
        for field in ("char_dim", "context_dim", "node_dim"):
            if dims[field] % 2:
                raise ConfigError(f"{field} must be even (split across directions)")
        if self.heads < 1 or self.node_dim % self.heads:
            raise ConfigError("node_dim must be divisible by heads")
        if self.depth < 1:
            raise ConfigError("depth must be at least 1")
        if self.window < 0:
            raise ConfigError("window must be nonnegative")
        if not self.learning_rate >= 0:
            raise ConfigError("learning_rate must be nonnegative")
        if not self.weight_decay >= 0:
            raise ConfigError("weight_decay must be nonnegative")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if not self.mask_constant < 0:
            raise ConfigError("mask_constant must be negative")

    @property
    def num_types(self) -> int:
        return len(self.type_names)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["type_names"] = list(self.type_names)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str) -> "Config":
        with open(path, "r", encoding="utf-8") as handle:
            try:
                data = json.load(handle)
            except json.JSONDecodeError as err:
                raise ConfigError(f"invalid JSON in {path}: {err}") from err
        return cls.from_dict(data)

    def to_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")
