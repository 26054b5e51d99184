"""Potential trigger word identification via feature-shift influence scores.

A probe classifier is trained on the full (possibly backdoored) dataset.
For each training text, every distinct word is scored by how much removing
all of its occurrences shifts the probe's per-class score vector (infinity
norm of the difference). The ``top_k`` highest-scoring words of a text are
its influential words; a word that is influential for at least
``occurrence_threshold`` texts is flagged as a potential trigger word.

The resulting word set feeds semantic-mode partitioning: only flagged words
are restricted to a single group, everything else is replicated, so the
containment of a correctly flagged trigger survives while ordinary words
keep their context.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .corpus import LabeledDataset
from .errors import ConfigError, DataError
from .learners import BaseModel, LearnerSpec, train
from .partition import Text, canonical_word_id, normalize_word


@dataclass(frozen=True)
class TriggerIdConfig:
    occurrence_threshold: int
    top_k: int = 5
    learner_spec: LearnerSpec = LearnerSpec(kind="linear")

    def __post_init__(self) -> None:
        if self.occurrence_threshold < 1:
            raise ConfigError(
                f"occurrence threshold must be >= 1, got {self.occurrence_threshold}"
            )
        if self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k}")


def influence_scores(probe_model: BaseModel, text: Text) -> dict[str, float]:
    """Influence score of each distinct word of one text.

    The score of a word is the infinity norm of the change in the probe's
    score vector when every occurrence of the word is removed. Scores are
    finite and non-negative; only words of the text are scored.
    """
    base = probe_model.feature_vector(text)
    scores: dict[str, float] = {}
    for word in text:
        if word in scores:
            continue
        reduced = tuple(tok for tok in text if tok != word)
        shift = base - probe_model.feature_vector(reduced)
        scores[word] = float(np.max(np.abs(shift)))
    return scores


def influential_words(profile: dict[str, float], top_k: int) -> tuple[str, ...]:
    """The top_k words of one text by score, descending.

    Ties break by canonical word order so the selection is deterministic;
    texts with fewer than top_k distinct words contribute all of them.
    """
    ranked = sorted(profile.items(), key=lambda item: (-item[1], canonical_word_id(item[0])))
    return tuple(word for word, _ in ranked[:top_k])


def identify_trigger_words(dataset: LabeledDataset, config: TriggerIdConfig) -> frozenset[str]:
    """Train the probe on the full dataset and collect words that are
    influential for at least ``occurrence_threshold`` texts."""
    if len(dataset) == 0:
        raise DataError("cannot identify trigger words on an empty dataset")
    probe = train(config.learner_spec, dataset)
    tally: Counter[str] = Counter()
    for ex in dataset:
        tally.update(influential_words(influence_scores(probe, ex.text), config.top_k))
    return frozenset(
        word for word, count in tally.items() if count >= config.occurrence_threshold
    )


def save_trigger_words(
    words: frozenset[str], path: str | Path, header_lines: Iterable[str] = ()
) -> None:
    """Write a trigger word set, one word per line in canonical order."""
    path = Path(path)
    lines = [f"# {line}\n" for line in header_lines]
    lines.extend(f"{word}\n" for word in sorted(words, key=canonical_word_id))
    path.write_bytes("".join(lines).encode("utf-8"))


def load_trigger_words(path: str | Path) -> frozenset[str]:
    path = Path(path)
    try:
        raw = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8: {exc}") from None
    words = set()
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(normalize_word(line))
    return frozenset(words)
