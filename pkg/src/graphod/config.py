"""Detector configuration."""

import dataclasses
from dataclasses import dataclass

from .exceptions import ConfigError
from .processing import ALGORITHMS

PROBA_METHODS = ("linear", "unify")


@dataclass(frozen=True)
class DetectorConfig:
    """Algorithm choice and hyperparameters.

    ``num_layers`` is the encoder depth; decoders mirror it. ``batch_size``
    of 0 means full-batch training. ``alpha`` weights the attribute term of
    DOMINANT, ``beta`` is the OCGNN slack fraction and ``radius_refresh``
    the number of epochs between OCGNN radius updates.
    """

    algorithm: str = "dominant"
    contamination: float = 0.1
    epochs: int = 100
    learning_rate: float = 0.005
    hidden_dim: int = 64
    embed_dim: int = 32
    num_layers: int = 2
    seed: int = 0
    alpha: float = 0.5
    beta: float = 0.1
    radius_refresh: int = 5
    batch_size: int = 0
    proba_method: str = "unify"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(
                f"unknown algorithm {self.algorithm!r}; valid names: "
                f"{', '.join(ALGORITHMS)}")
        for name in ("contamination", "learning_rate", "alpha", "beta"):
            _check(_is_real(getattr(self, name)), f"{name} must be a number")
        _check(0 < self.contamination <= 0.5, "contamination must be in (0, 0.5]")
        _check(_is_int(self.epochs) and self.epochs >= 0, "epochs must be an integer >= 0")
        _check(self.learning_rate >= 0, "learning_rate must be >= 0")
        for name in ("hidden_dim", "embed_dim", "num_layers", "radius_refresh"):
            value = getattr(self, name)
            _check(_is_int(value) and value >= 1, f"{name} must be an integer >= 1")
        _check(_is_int(self.seed), "seed must be an integer")
        _check(0 <= self.alpha <= 1, "alpha must be in [0, 1]")
        _check(0 < self.beta < 1, "beta must be in (0, 1)")
        _check(_is_int(self.batch_size) and self.batch_size >= 0,
               "batch_size must be an integer >= 0")
        _check(self.proba_method in PROBA_METHODS,
               f"proba_method must be one of {', '.join(PROBA_METHODS)}")

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("detector config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc))

    def to_dict(self):
        return dataclasses.asdict(self)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _is_real(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check(ok, message):
    if not ok:
        raise ConfigError(message)
