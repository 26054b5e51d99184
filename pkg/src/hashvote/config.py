"""Run configuration: INI-style file, command-line overrides, provenance.

A run is configured by a flat key-value file with sections (configparser
syntax). Every key is also exposed as a command-line option named
``--<section>-<key>``; command-line values override file values. The output
directory alone can additionally be set through the ``HASHVOTE_OUT``
environment variable (file < environment < command line).

Unset seeds are derived from the global ``[run] seed``, so a single seed
pins the entire pipeline. The digest of the fully resolved configuration is
stamped into every emitted report for provenance.
"""

from __future__ import annotations

import configparser
import hashlib
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .attacks import AttackSpec
from .corpus import PoisonSpec
from .errors import ConfigError
from .hashing import derive_seed
from .learners import LearnerSpec
from .partition import PartitionConfig, normalize
from .triggerid import TriggerIdConfig

ENV_OUT_DIR = "HASHVOTE_OUT"


@dataclass(frozen=True)
class Option:
    section: str
    key: str
    type: type
    default: Any
    help: str


_SCHEMA: tuple[Option, ...] = (
    Option("data", "train", str, None, "training dataset file"),
    Option("data", "test", str, None, "test dataset file"),
    Option("model", "path", str, None, "ensemble directory (defaults to <out>/ensemble)"),
    Option("partition", "m", int, 7, "number of word groups"),
    Option("partition", "hash", str, "md5", "word hash: md5, sha1, or sha256"),
    Option("partition", "mode", str, "certified", "division mode: certified or semantic"),
    Option("partition", "trigger_words", str, None, "trigger word file for semantic mode"),
    Option("poison", "mode", str, "mixed", "poisoning mode: mixed, clean, or dirty"),
    Option("poison", "rate", float, 0.1, "poisoned fraction of the eligible pool"),
    Option("poison", "target", int, 1, "attacker's target class"),
    Option("poison", "seed", int, None, "poison selection seed (default: derived)"),
    Option("attack", "kind", str, "badword", "attack kind: badword, addsent, or reorder"),
    Option("attack", "trigger", str, "cf mn bb tq", "trigger words, whitespace separated"),
    Option("attack", "sentence", str, "i watch this 3d movie", "trigger sentence"),
    Option("attack", "seed", int, None, "injection seed (default: derived)"),
    Option("learner", "kind", str, "naive_bayes", "base learner: naive_bayes or linear"),
    Option("learner", "alpha", float, 1.0, "naive Bayes smoothing"),
    Option("learner", "lr", float, 0.5, "linear learner step size"),
    Option("learner", "epochs", int, 150, "linear learner epochs"),
    Option("learner", "dim", int, 256, "linear learner hashed feature dimension"),
    Option("learner", "seed", int, None, "training seed (default: derived)"),
    Option("triggerid", "k", int, 10, "texts a word must influence to be flagged"),
    Option("triggerid", "top_k", int, 5, "influential words taken per text"),
    Option("triggerid", "probe_kind", str, "linear", "probe learner kind"),
    Option("certify", "max_t", int, None, "largest trigger size to certify (default: (m-1)/2)"),
    Option("certify", "methods", str, "individual,joint", "comma list; add 'baseline' for the sample-partition certifier"),
    Option("certify", "verify", int, 0, "1: exhaustively re-check every input at its certified size"),
    Option("baseline", "partitions", int, 9, "sample-partition baseline group count"),
    Option("baseline", "budget", int, None, "poisoned-example budget (default: floor(rate*n))"),
    Option("run", "out", str, "out", "output directory"),
    Option("run", "seed", int, 0, "global seed"),
    Option("run", "workers", int, 0, "worker cap; 0 means hardware parallelism"),
)

_BY_FLAG = {f"{opt.section}-{opt.key}": opt for opt in _SCHEMA}


def _convert(opt: Option, raw: str) -> Any:
    try:
        return opt.type(raw)
    except ValueError:
        raise ConfigError(
            f"[{opt.section}] {opt.key}: cannot parse {raw!r} as {opt.type.__name__}"
        ) from None


class RunConfig:
    """Resolved configuration for one run."""

    def __init__(self, values: dict[tuple[str, str], Any]):
        self._values = values

    def get(self, section: str, key: str) -> Any:
        return self._values[(section, key)]

    def require(self, section: str, key: str) -> Any:
        value = self._values[(section, key)]
        if value is None:
            raise ConfigError(f"missing required option [{section}] {key}")
        return value

    def require_path(self, section: str, key: str) -> Path:
        path = Path(self.require(section, key))
        if not path.exists():
            raise ConfigError(f"[{section}] {key}: no such file: {path}")
        return path

    # Derived seeds: any unset phase seed comes from the global run seed.
    def _seed(self, section: str, key: str, context: str) -> int:
        value = self.get(section, key)
        if value is not None:
            return value
        return derive_seed(self.get("run", "seed"), context)

    def partition_config(self) -> PartitionConfig:
        return PartitionConfig(m=self.get("partition", "m"), hash_algorithm=self.get("partition", "hash"))

    def poison_spec(self) -> PoisonSpec:
        return PoisonSpec(
            mode=self.get("poison", "mode"),
            rate=self.get("poison", "rate"),
            target_class=self.get("poison", "target"),
            seed=self._seed("poison", "seed", "poison"),
        )

    def attack_spec(self) -> AttackSpec:
        return AttackSpec(
            kind=self.get("attack", "kind"),
            trigger_words=frozenset(normalize(self.get("attack", "trigger"))),
            trigger_sentence=normalize(self.get("attack", "sentence")),
            seed=self._seed("attack", "seed", "attack"),
        )

    def learner_spec(self) -> LearnerSpec:
        return LearnerSpec(
            kind=self.get("learner", "kind"),
            alpha=self.get("learner", "alpha"),
            learning_rate=self.get("learner", "lr"),
            epochs=self.get("learner", "epochs"),
            feature_dim=self.get("learner", "dim"),
            seed=self._seed("learner", "seed", "learner"),
        )

    def trigger_id_config(self) -> TriggerIdConfig:
        probe = LearnerSpec(
            kind=self.get("triggerid", "probe_kind"),
            alpha=self.get("learner", "alpha"),
            learning_rate=self.get("learner", "lr"),
            epochs=self.get("learner", "epochs"),
            feature_dim=self.get("learner", "dim"),
            seed=derive_seed(self.get("run", "seed"), "probe"),
        )
        return TriggerIdConfig(
            occurrence_threshold=self.get("triggerid", "k"),
            top_k=self.get("triggerid", "top_k"),
            learner_spec=probe,
        )

    def certify_methods(self) -> tuple[str, ...]:
        methods = tuple(
            m.strip() for m in self.get("certify", "methods").split(",") if m.strip()
        )
        for method in methods:
            if method not in ("individual", "joint", "baseline"):
                raise ConfigError(f"unknown certification method: {method!r}")
        return methods

    def max_t(self) -> int:
        value = self.get("certify", "max_t")
        if value is None:
            return (self.get("partition", "m") - 1) // 2
        if value < 0:
            raise ConfigError(f"[certify] max_t must be >= 0, got {value}")
        return value

    def workers(self) -> int:
        value = self.get("run", "workers")
        if value < 0:
            raise ConfigError(f"[run] workers must be >= 0, got {value}")
        return value if value > 0 else (os.cpu_count() or 1)

    def out_dir(self) -> Path:
        return Path(self.get("run", "out"))

    def digest(self) -> str:
        """Digest of the fully resolved configuration, for provenance headers."""
        lines = []
        for opt in _SCHEMA:
            value = self._values[(opt.section, opt.key)]
            if opt.key == "seed" and value is None and opt.section != "run":
                value = self._seed(opt.section, "seed", opt.section)
            lines.append(f"{opt.section}.{opt.key}={'auto' if value is None else value}")
        payload = "\n".join(lines).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


def load_config(
    config_path: str | Path | None = None, overrides: dict[str, str] | None = None
) -> RunConfig:
    """Build a RunConfig from defaults, an optional file, the environment,
    and command-line overrides (keyed ``section-key``), in that order."""
    values: dict[tuple[str, str], Any] = {
        (opt.section, opt.key): opt.default for opt in _SCHEMA
    }
    if config_path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(config_path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {config_path}") from None
        except (configparser.Error, UnicodeDecodeError) as exc:
            raise ConfigError(f"{config_path}: {exc}") from None
        for section in parser.sections():
            for key, raw in parser.items(section):
                opt = _BY_FLAG.get(f"{section}-{key}")
                if opt is None:
                    raise ConfigError(f"{config_path}: unknown option [{section}] {key}")
                values[(opt.section, opt.key)] = _convert(opt, raw)
    env_out = os.environ.get(ENV_OUT_DIR)
    if env_out:
        values[("run", "out")] = env_out
    for flag, raw in (overrides or {}).items():
        opt = _BY_FLAG.get(flag)
        if opt is None:
            raise ConfigError(f"unknown option: --{flag}")
        values[(opt.section, opt.key)] = _convert(opt, raw)
    return RunConfig(values)


def iter_options() -> tuple[Option, ...]:
    return _SCHEMA
