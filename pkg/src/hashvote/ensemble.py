"""The partition-and-vote ensemble classifier.

One base model is trained per word group: model j sees only group j of every
training text. At prediction time the group inputs depend on the mode:

* ``certified``: model j predicts on group j of the (divided, sorted) input,
  so changing words from at most k groups changes at most k of the m votes.
* ``semantic``: every model predicts on the full, unmodified input text.

The final label is the majority vote, ties broken toward the smaller class
index. The trained ensemble persists to a directory with a JSON description,
one binary file per base model, and a manifest of content digests for
integrity checking.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .corpus import LabeledDataset, build_subdatasets
from .errors import ConfigError, DataError
from .hashing import derive_seed
from .learners import BaseModel, LearnerSpec, load_model, save_model, train
from .partition import PartitionConfig, Text, divide_text

_ENSEMBLE_FILE = "ensemble.json"
_MANIFEST_FILE = "manifest.txt"


@dataclass(frozen=True)
class VoteVector:
    """Per-class vote counts plus the per-group labels they were counted from."""

    counts: tuple[int, ...]
    per_group_labels: tuple[int, ...]

    def __post_init__(self) -> None:
        assert sum(self.counts) == len(self.per_group_labels)
        for c, count in enumerate(self.counts, start=1):
            assert count == sum(1 for lab in self.per_group_labels if lab == c)


@dataclass(frozen=True)
class EnsembleModel:
    base_models: tuple[BaseModel, ...]
    cfg: PartitionConfig
    mode: str
    trigger_words: frozenset[str]
    num_classes: int

    def __post_init__(self) -> None:
        if len(self.base_models) != self.cfg.m:
            raise ConfigError(
                f"got {len(self.base_models)} base models for m={self.cfg.m} groups"
            )
        if self.mode not in ("certified", "semantic"):
            raise ConfigError(f"unknown ensemble mode: {self.mode!r}")

    @property
    def m(self) -> int:
        return self.cfg.m


def _seed_algorithm(cfg: PartitionConfig) -> str:
    # The mock backend has no digest; fall back to sha256 for seed derivation.
    return cfg.hash_algorithm if cfg.hash_algorithm != "mock" else "sha256"


def train_ensemble(
    dataset: LabeledDataset,
    cfg: PartitionConfig,
    learner_spec: LearnerSpec,
    mode: str = "certified",
    trigger_words: frozenset[str] = frozenset(),
    workers: int = 1,
) -> EnsembleModel:
    """Build the sub-datasets and train one base model per group.

    Model j trains with a child seed derived from (learner seed, j), so
    groups do not share initializations but the whole run stays a pure
    function of its inputs. Groups are independent; ``workers`` only sets
    how many train concurrently.
    """
    if len(dataset) == 0:
        raise DataError("cannot train an ensemble on an empty dataset")
    subs = build_subdatasets(dataset, cfg, mode, trigger_words)
    algorithm = _seed_algorithm(cfg)
    specs = [
        replace(learner_spec, seed=derive_seed(learner_spec.seed, j, algorithm=algorithm))
        for j in range(cfg.m)
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            models = tuple(pool.map(train, specs, subs))
    else:
        models = tuple(train(spec, sub) for spec, sub in zip(specs, subs))
    return EnsembleModel(
        base_models=models,
        cfg=cfg,
        mode=mode,
        trigger_words=frozenset(trigger_words),
        num_classes=dataset.num_classes,
    )


def group_inputs(model: EnsembleModel, text: Text) -> tuple[Text, ...]:
    """What each base model sees for one input text."""
    if model.mode == "certified":
        return divide_text(text, model.cfg).groups
    return (text,) * model.m


def vote(model: EnsembleModel, text: Text) -> VoteVector:
    inputs = group_inputs(model, text)
    labels = tuple(base.predict(inp) for base, inp in zip(model.base_models, inputs))
    counts = [0] * model.num_classes
    for label in labels:
        counts[label - 1] += 1
    return VoteVector(counts=tuple(counts), per_group_labels=labels)


def vote_winner(counts: tuple[int, ...]) -> int:
    """Majority label with ties broken toward the smaller class index."""
    winner = max(range(1, len(counts) + 1), key=lambda c: (counts[c - 1], -c))
    # The winner's count beats every other class's count plus the tie penalty.
    assert all(
        counts[winner - 1] >= counts[c - 1] + (1 if winner > c else 0)
        for c in range(1, len(counts) + 1)
        if c != winner
    )
    return winner


def predict_ensemble(model: EnsembleModel, text: Text) -> int:
    return vote_winner(vote(model, text).counts)


def save_ensemble(
    model: EnsembleModel, directory: str | Path, header_lines: tuple[str, ...] = ()
) -> None:
    """Persist to a directory: JSON description, model files, digest manifest.

    ``header_lines`` become leading ``# `` comments in the manifest.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    model_files = [f"base_{j:03d}.hvm" for j in range(model.m)]
    description = {
        "format_version": 1,
        "m": model.m,
        "hash_algorithm": model.cfg.hash_algorithm,
        "mock_table": dict(sorted(model.cfg.mock_table.items()))
        if model.cfg.mock_table is not None
        else None,
        "mode": model.mode,
        "trigger_words": sorted(model.trigger_words),
        "num_classes": model.num_classes,
        "model_files": model_files,
    }
    (directory / _ENSEMBLE_FILE).write_bytes(
        json.dumps(description, indent=2, sort_keys=True, ensure_ascii=False).encode("utf-8")
        + b"\n"
    )
    for base, name in zip(model.base_models, model_files):
        save_model(base, directory / name)
    manifest_lines = [f"# {line}\n" for line in header_lines]
    for name in [_ENSEMBLE_FILE, *model_files]:
        digest = hashlib.sha256((directory / name).read_bytes()).hexdigest()
        manifest_lines.append(f"{digest}  {name}\n")
    (directory / _MANIFEST_FILE).write_bytes("".join(manifest_lines).encode("utf-8"))


def load_ensemble(directory: str | Path) -> EnsembleModel:
    """Load a persisted ensemble, verifying the manifest digests."""
    directory = Path(directory)
    manifest_path = directory / _MANIFEST_FILE
    if not manifest_path.is_file():
        raise DataError(f"{directory}: missing {_MANIFEST_FILE}")
    for line in manifest_path.read_text("utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        expected, _, name = line.partition("  ")
        actual = hashlib.sha256((directory / name).read_bytes()).hexdigest()
        if actual != expected:
            raise DataError(f"{directory}/{name}: digest mismatch, file corrupted")
    description = json.loads((directory / _ENSEMBLE_FILE).read_text("utf-8"))
    if description.get("format_version") != 1:
        raise DataError(f"{directory}: unsupported ensemble format version")
    cfg = PartitionConfig(
        m=description["m"],
        hash_algorithm=description["hash_algorithm"],
        mock_table=description["mock_table"],
    )
    models = tuple(load_model(directory / name) for name in description["model_files"])
    return EnsembleModel(
        base_models=models,
        cfg=cfg,
        mode=description["mode"],
        trigger_words=frozenset(description["trigger_words"]),
        num_classes=description["num_classes"],
    )
