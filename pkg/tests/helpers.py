"""Shared fixtures: synthetic corpora and hand-built ensembles."""

from __future__ import annotations

import random

from hashvote.corpus import LabeledDataset, LabeledExample
from hashvote.ensemble import EnsembleModel
from hashvote.learners import ConstantModel
from hashvote.partition import PartitionConfig

# The worked-example fixture: a fixed word-to-group map on five words.
MOCK_TABLE = {"a": 1, "c": 1, "b": 2, "d": 2, "e": 3}


def mock_cfg() -> PartitionConfig:
    return PartitionConfig(m=3, hash_algorithm="mock", mock_table=MOCK_TABLE)


def dataset_from_pairs(pairs, num_classes=2) -> LabeledDataset:
    examples = tuple(
        LabeledExample(id=i, text=tuple(text), label=label)
        for i, (text, label) in enumerate(pairs)
    )
    return LabeledDataset(examples=examples, num_classes=num_classes)


def constant_ensemble(per_group_labels, num_classes=2) -> EnsembleModel:
    """An ensemble whose base models ignore their input: vote patterns can be
    scripted exactly."""
    models = tuple(ConstantModel(num_classes, label) for label in per_group_labels)
    return EnsembleModel(
        base_models=models,
        cfg=PartitionConfig(m=len(models)),
        mode="certified",
        trigger_words=frozenset(),
        num_classes=num_classes,
    )


class TableModel:
    """Base model that predicts by exact text lookup; scripted per-example
    vote patterns for certification tests."""

    kind = "table"

    def __init__(self, num_classes, table, default=1):
        self.num_classes = num_classes
        self.table = {tuple(k): v for k, v in table.items()}
        self.default = default

    def predict(self, text):
        return self.table.get(tuple(text), self.default)

    def feature_vector(self, text):
        import numpy as np

        vec = np.zeros(self.num_classes)
        vec[self.predict(text) - 1] = 1.0
        return vec


def table_ensemble(tables, num_classes, cfg=None) -> EnsembleModel:
    """Semantic mode so every base model sees the full text and the scripted
    per-example lookups apply."""
    models = tuple(TableModel(num_classes, table) for table in tables)
    return EnsembleModel(
        base_models=models,
        cfg=cfg or PartitionConfig(m=len(models)),
        mode="semantic",
        trigger_words=frozenset(),
        num_classes=num_classes,
    )


def vote_pattern_ensemble(patterns, num_classes):
    """Ensemble plus dataset realizing exact per-example group votes.

    ``patterns`` is a list of (per_group_labels, truth); example i gets the
    text ("ex<i>",) and base model j answers patterns[i][0][j] for it.
    """
    m = len(patterns[0][0])
    tables = [
        {(f"ex{i}",): labels[j] for i, (labels, _) in enumerate(patterns)}
        for j in range(m)
    ]
    dataset = dataset_from_pairs(
        [((f"ex{i}",), truth) for i, (_, truth) in enumerate(patterns)],
        num_classes=num_classes,
    )
    return table_ensemble(tables, num_classes), dataset


def sentiment_corpus(
    n_train: int,
    n_test: int,
    seed: int = 7,
    class_words: int = 40,
    filler_words: int = 12,
    own: int = 7,
    cross: int = 4,
    filler: int = 3,
) -> tuple[LabeledDataset, LabeledDataset]:
    """Balanced two-class synthetic sentiment corpus.

    Each text mixes ``own`` words from its class pool, ``cross`` words from
    the other pool, and ``filler`` neutral words, in shuffled order. The
    class signal is redundant across many words, so hash groups retain
    separability, while each single word stays only mildly indicative.
    """
    rng = random.Random(seed)
    pools = {
        1: [f"pos{i:03d}" for i in range(class_words)],
        2: [f"neg{i:03d}" for i in range(class_words)],
    }
    fillers = [f"fill{i:02d}" for i in range(filler_words)]

    def build(count: int, id_offset: int) -> LabeledDataset:
        examples = []
        for i in range(count):
            label = 1 + i % 2
            tokens = (
                rng.sample(pools[label], own)
                + rng.sample(pools[3 - label], cross)
                + rng.sample(fillers, filler)
            )
            rng.shuffle(tokens)
            examples.append(LabeledExample(id=id_offset + i, text=tuple(tokens), label=label))
        return LabeledDataset(examples=tuple(examples), num_classes=2)

    return build(n_train, 0), build(n_test, 0)
