"""Run configuration with layered overrides: defaults < file < env < flags.

The file format is TOML; environment variables use the OPINIONMAP_ prefix
with upper-cased field names (OPINIONMAP_SEED=7). Defaults follow the
documented experimental constants: 10+10+5 batches, 5-fold CV, a 114-item
test split when reproducing the reference setup.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

ENV_PREFIX = "OPINIONMAP_"


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    k_active: int = 10
    k_top_confidence: int = 10
    k_random: int = 5
    epsilon_gain: float = 0.005
    max_iterations: int = 20
    cv_folds: int = 5
    run_cv: bool = True
    search_budget: int = 0
    test_size: int = 114
    min_df: int = 2
    ngram_min: int = 1
    ngram_max: int = 2
    l2: float = 0.01
    epochs: int = 200
    learning_rate: float = 2.0
    opinion_threshold: float = 0.5
    lease_seconds: float = 1800.0
    host: str = "127.0.0.1"
    port: int = 8080

    def ngram_range(self) -> tuple[int, int]:
        return (self.ngram_min, self.ngram_max)

    def hyperparameters(self):
        from .classifiers import Hyperparameters

        return Hyperparameters(l2=self.l2, epochs=self.epochs,
                               learning_rate=self.learning_rate)

    def loop_config(self):
        from .loop import LoopConfig

        return LoopConfig(
            k_active=self.k_active, k_top_confidence=self.k_top_confidence,
            k_random=self.k_random, epsilon_gain=self.epsilon_gain,
            max_iterations=self.max_iterations, cv_folds=self.cv_folds,
            run_cv=self.run_cv, search_budget=self.search_budget,
            hyper=self.hyperparameters(), seed=self.seed,
        )


_FIELDS = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_CASTS = {"int": int, "float": float, "str": str, "bool": lambda v: str(v).lower()
          in ("1", "true", "yes", "on")}


def _coerce(name: str, value):
    kind = _FIELDS[name]
    try:
        return _CASTS[kind](value)
    except (ValueError, TypeError):
        raise ConfigError(f"field {name!r}: cannot interpret {value!r} as {kind}")


def load_config(path=None, env=None, overrides=None) -> RunConfig:
    """Resolve a RunConfig; unknown file keys and bad values are reported
    with the offending field name."""
    values = {}
    if path is not None:
        with open(path, "rb") as fh:
            try:
                doc = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"config file {path}: {exc}")
        for key, value in doc.items():
            if key not in _FIELDS:
                raise ConfigError(f"field {key!r}: unknown configuration key")
            values[key] = _coerce(key, value)
    env = os.environ if env is None else env
    for key in _FIELDS:
        env_key = ENV_PREFIX + key.upper()
        if env_key in env:
            values[key] = _coerce(key, env[env_key])
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = _coerce(key, value)
    return RunConfig(**values)
