"""Backdoor trigger injection and training-set poisoning generators.

Three attack kinds:

* ``badword``: insert one word, drawn from a fixed trigger set, at a random
  position.
* ``addsent``: insert a fixed trigger sentence contiguously at a random
  position.
* ``reorder``: randomly permute the text and insert every trigger word once.
  This is the abstract structure-level attack: arbitrary word reordering
  plus injection of the trigger words.

All randomness is seeded. Dataset-level operations derive one child seed per
example id, so poisoning a dataset example-by-example in parallel and in
serial produce the same result, and the poisoned set stays coupled to the
relabel-only set built with the same seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .corpus import LabeledDataset, LabeledExample, PoisonSpec, select_poison_ids
from .errors import AttackInfeasibleError, ConfigError, DataError
from .hashing import derive_seed
from .partition import PartitionConfig, Text, canonical_word_id, hash_group, normalize_word

ATTACK_KINDS = ("badword", "addsent", "reorder")


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    trigger_words: frozenset[str] = frozenset()
    trigger_sentence: Text = ()
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ATTACK_KINDS:
            raise ConfigError(f"unknown attack kind: {self.kind!r}")
        object.__setattr__(
            self, "trigger_words", frozenset(normalize_word(w) for w in self.trigger_words)
        )
        object.__setattr__(
            self, "trigger_sentence", tuple(normalize_word(w) for w in self.trigger_sentence)
        )
        if self.kind == "badword" and not self.trigger_words:
            raise ConfigError("badword attack requires a nonempty trigger word set")
        if self.kind == "addsent" and not self.trigger_sentence:
            raise ConfigError("addsent attack requires a nonempty trigger sentence")

    @property
    def trigger_size(self) -> int:
        if self.kind == "addsent":
            return len(set(self.trigger_sentence))
        return len(self.trigger_words)


def inject(text: Text, spec: AttackSpec) -> Text:
    """Apply the trigger injection to one text, using the spec's seed."""
    rng = random.Random(spec.seed)
    if spec.kind == "badword":
        word = rng.choice(sorted(spec.trigger_words, key=canonical_word_id))
        pos = rng.randrange(len(text) + 1)
        return text[:pos] + (word,) + text[pos:]
    if spec.kind == "addsent":
        pos = rng.randrange(len(text) + 1)
        return text[:pos] + spec.trigger_sentence + text[pos:]
    tokens = list(text)
    rng.shuffle(tokens)
    for word in sorted(spec.trigger_words, key=canonical_word_id):
        tokens.insert(rng.randrange(len(tokens) + 1), word)
    return tuple(tokens)


def _example_spec(spec: AttackSpec, example_id: int) -> AttackSpec:
    return replace(spec, seed=derive_seed(spec.seed, example_id))


def poison_dataset(
    dataset: LabeledDataset, poison: PoisonSpec, attack: AttackSpec
) -> LabeledDataset:
    """Backdoor a training set: inject the trigger into the selected examples
    and relabel them to the target class (mixed and dirty modes only).

    Selects exactly the ids that ``make_certified_training_set`` relabels
    under the same spec, so the two outputs differ only in the selected
    examples' texts.
    """
    if poison.target_class > dataset.num_classes:
        raise ConfigError(
            f"target class {poison.target_class} exceeds class count {dataset.num_classes}"
        )
    if poison.mode == "clean":
        if not any(ex.label == poison.target_class for ex in dataset):
            raise AttackInfeasibleError("clean-label attack: no target-class examples to poison")
    elif poison.mode == "dirty":
        if not any(ex.label != poison.target_class for ex in dataset):
            raise AttackInfeasibleError("dirty-label attack: no non-target examples to poison")
    selected = select_poison_ids(dataset, poison)
    relabel = poison.mode in ("mixed", "dirty")
    examples: list[LabeledExample] = []
    for ex in dataset:
        if ex.id in selected:
            examples.append(
                LabeledExample(
                    id=ex.id,
                    text=inject(ex.text, _example_spec(attack, ex.id)),
                    label=poison.target_class if relabel else ex.label,
                )
            )
        else:
            examples.append(ex)
    return LabeledDataset(examples=tuple(examples), num_classes=dataset.num_classes)


def build_backdoored_testset(
    testset: LabeledDataset, attack: AttackSpec, target_class: int
) -> LabeledDataset:
    """Trigger-injected copies of every non-target test example.

    Ground-truth labels are retained, so the attack success rate is the
    fraction of this set a model predicts as the target class.
    """
    kept = [ex for ex in testset if ex.label != target_class]
    if not kept:
        raise DataError("backdoored test set would be empty: all labels equal the target class")
    examples = tuple(
        replace(ex, text=inject(ex.text, _example_spec(attack, ex.id))) for ex in kept
    )
    return LabeledDataset(examples=examples, num_classes=testset.num_classes)


def select_adaptive_trigger(
    candidates: list[str], size: int, cfg: PartitionConfig
) -> frozenset[str]:
    """Pick ``size`` trigger words whose hash groups are pairwise distinct.

    Models an attacker who knows the partition function and spreads the
    trigger across groups to corrupt as many as possible. Scans the
    candidates in order and keeps the first word seen for each new group.
    """
    if size > cfg.m:
        raise ConfigError(f"cannot spread {size} trigger words over {cfg.m} groups")
    chosen: dict[int, str] = {}
    for word in candidates:
        word = normalize_word(word)
        group = hash_group(word, cfg)
        if group not in chosen:
            chosen[group] = word
        if len(chosen) == size:
            return frozenset(list(chosen.values())[:size])
    raise DataError(
        f"candidate pool covers only {len(chosen)} distinct groups, needed {size}"
    )
