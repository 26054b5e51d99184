"""Labeled datasets: in-memory model, on-disk format, and derived sets.

On-disk format (the bit-exact external contract): UTF-8 text, LF line
endings, one example per line as ``label<TAB>raw text``, with a first line
``#classes=C`` declaring the class count. Lines starting with ``# `` are
provenance comments and are ignored on load. Texts are stored normalized
(lowercase NFC tokens joined by single spaces), so saving a loaded file
reproduces it byte for byte.

Labels are 1-based class indices. Example ids are assigned at load time in
file order and are stable across all derived datasets (sub-datasets,
relabeled sets, poisoned sets), which lets reports join back to the source.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Sequence

from .errors import ConfigError, DataError
from .partition import PartitionConfig, Text, divide_text, divide_text_semantic, normalize

POISON_MODES = ("mixed", "clean", "dirty")


@dataclass(frozen=True)
class LabeledExample:
    id: int
    text: Text
    label: int


@dataclass(frozen=True)
class LabeledDataset:
    examples: tuple[LabeledExample, ...]
    num_classes: int

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise DataError(f"a dataset needs at least 2 classes, got {self.num_classes}")
        seen: set[int] = set()
        for ex in self.examples:
            if not 1 <= ex.label <= self.num_classes:
                raise DataError(
                    f"example {ex.id}: label {ex.label} outside [1, {self.num_classes}]"
                )
            if ex.id in seen:
                raise DataError(f"duplicate example id {ex.id}")
            seen.add(ex.id)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[LabeledExample]:
        return iter(self.examples)


@dataclass(frozen=True)
class PoisonSpec:
    """Which examples an attacker (or the matching relabel-only set) touches.

    ``mixed`` draws from all examples and relabels them to the target class;
    ``clean`` draws only from examples already labeled with the target class
    and never relabels; ``dirty`` draws only from non-target examples and
    relabels. ``rate`` is the poisoned fraction of the eligible pool.
    """

    mode: str
    rate: float
    target_class: int
    seed: int

    def __post_init__(self) -> None:
        if self.mode not in POISON_MODES:
            raise ConfigError(f"unknown poison mode: {self.mode!r}")
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigError(f"poison rate must be in [0, 1], got {self.rate}")
        if self.target_class < 1:
            raise ConfigError(f"target class must be >= 1, got {self.target_class}")


def load_dataset(path: str | Path) -> LabeledDataset:
    """Load a dataset file; see the module docstring for the format."""
    path = Path(path)
    try:
        raw = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8: {exc}") from None

    num_classes: int | None = None
    examples: list[LabeledExample] = []
    for lineno, line in enumerate(raw.split("\n"), start=1):
        if not line:
            continue
        if line.startswith("#classes="):
            try:
                num_classes = int(line[len("#classes="):])
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed class-count header") from None
            continue
        if line.startswith("#"):
            continue
        label_str, sep, raw_text = line.partition("\t")
        if not sep:
            raise DataError(f"{path}:{lineno}: expected 'label<TAB>text'")
        try:
            label = int(label_str)
        except ValueError:
            raise DataError(f"{path}:{lineno}: label {label_str!r} is not an integer") from None
        if label < 1:
            raise DataError(f"{path}:{lineno}: label {label} is not a positive class index")
        examples.append(LabeledExample(id=len(examples), text=normalize(raw_text), label=label))

    if num_classes is None:
        if not examples:
            raise DataError(f"{path}: empty dataset with no '#classes=' header")
        num_classes = max(ex.label for ex in examples)
    for ex in examples:
        if ex.label > num_classes:
            raise DataError(f"{path}: label {ex.label} exceeds declared class count {num_classes}")
    return LabeledDataset(examples=tuple(examples), num_classes=num_classes)


def save_dataset(
    dataset: LabeledDataset, path: str | Path, header_lines: Sequence[str] = ()
) -> None:
    """Write a dataset in the canonical on-disk form.

    ``header_lines`` become leading ``# `` comments (provenance only; loaders
    skip them).
    """
    path = Path(path)
    parts: list[str] = [f"# {line}\n" for line in header_lines]
    parts.append(f"#classes={dataset.num_classes}\n")
    for ex in dataset.examples:
        parts.append(f"{ex.label}\t{' '.join(ex.text)}\n")
    path.write_bytes("".join(parts).encode("utf-8"))


def build_subdatasets(
    dataset: LabeledDataset,
    cfg: PartitionConfig,
    mode: str = "certified",
    trigger_words: frozenset[str] = frozenset(),
) -> tuple[LabeledDataset, ...]:
    """One sub-dataset per group: example i of sub-dataset j is
    (group j of text i, label i), keeping the original example id."""
    if mode not in ("certified", "semantic"):
        raise ConfigError(f"unknown partition mode: {mode!r}")
    per_group: list[list[LabeledExample]] = [[] for _ in range(cfg.m)]
    for ex in dataset:
        if mode == "certified":
            groups = divide_text(ex.text, cfg).groups
        else:
            groups = divide_text_semantic(ex.text, cfg, trigger_words).groups
        for j, group_text in enumerate(groups):
            per_group[j].append(replace(ex, text=group_text))
    return tuple(
        LabeledDataset(examples=tuple(rows), num_classes=dataset.num_classes)
        for rows in per_group
    )


def select_poison_ids(dataset: LabeledDataset, spec: PoisonSpec) -> frozenset[int]:
    """The example ids a poisoning run touches.

    Shared by the attack generator and by the relabel-only set so the two
    stay coupled: same seed, same mode, same ids. Selection is a seeded
    shuffle of the eligible ids followed by a floor(rate * pool) prefix.
    """
    if spec.mode == "mixed":
        pool = [ex.id for ex in dataset]
    elif spec.mode == "clean":
        pool = [ex.id for ex in dataset if ex.label == spec.target_class]
    else:
        pool = [ex.id for ex in dataset if ex.label != spec.target_class]
    count = math.floor(spec.rate * len(pool))
    pool.sort()
    random.Random(spec.seed).shuffle(pool)
    return frozenset(pool[:count])


def make_certified_training_set(dataset: LabeledDataset, spec: PoisonSpec) -> LabeledDataset:
    """The trigger-free counterpart of a poisoned training set.

    Clean mode returns the dataset unchanged. Mixed and dirty modes relabel
    the selected examples to the target class but leave every text untouched.
    """
    if spec.target_class > dataset.num_classes:
        raise ConfigError(
            f"target class {spec.target_class} exceeds class count {dataset.num_classes}"
        )
    if spec.mode == "clean":
        return dataset
    selected = select_poison_ids(dataset, spec)
    examples = tuple(
        replace(ex, label=spec.target_class) if ex.id in selected else ex for ex in dataset
    )
    return LabeledDataset(examples=examples, num_classes=dataset.num_classes)
