"""Word normalization and hash-based division of a text into groups.

A text is an ordered tuple of normalized words. Group assignment is a pure
function of the word alone (a digest modulo the group count), so a given
word lands in the same group in every text and at every position. Two
division modes exist:

* ``certified``: every word goes only to its hash group, and each group is
  sorted by a corpus-independent word order. Group contents are therefore
  invariant under any reordering of the input, and a set of ``k`` inserted
  words can change at most ``k`` groups.
* ``semantic``: only a designated word set is restricted to its hash group;
  all other words are replicated into every group, and the original relative
  word order is preserved within each group. This trades the reordering
  invariance for readability of the per-group word sequences.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Mapping

from .errors import ConfigError
from .hashing import DIGEST_ALGORITHMS, digest_int

Text = tuple[str, ...]

HASH_ALGORITHMS = DIGEST_ALGORITHMS + ("mock",)


def normalize_word(word: str) -> str:
    """Canonical surface form of a single word: lowercased, Unicode NFC."""
    return unicodedata.normalize("NFC", word.lower())


def canonical_word_id(word: str) -> bytes:
    """Total, corpus-independent ordering key for a normalized word.

    UTF-8 bytes compare in code-point order, so this is a pre-defined word
    order that needs no external vocabulary.
    """
    return word.encode("utf-8")


def normalize(raw_text: str) -> Text:
    """Split a raw string into normalized word tokens.

    Lowercases, applies Unicode NFC, splits on Unicode whitespace, and
    isolates each punctuation mark as its own token. Empty tokens are
    dropped; duplicate words keep their multiplicity.
    """
    tokens: list[str] = []
    for chunk in raw_text.split():
        chunk = normalize_word(chunk)
        word: list[str] = []
        for ch in chunk:
            if unicodedata.category(ch).startswith("P"):
                if word:
                    tokens.append(normalize_word("".join(word)))
                    word.clear()
                tokens.append(ch)
            else:
                word.append(ch)
        if word:
            tokens.append(normalize_word("".join(word)))
    return tuple(tokens)


@dataclass(frozen=True)
class PartitionConfig:
    """How words map to groups: group count and word-hash backend.

    ``mock_table`` backs the ``mock`` algorithm with an explicit word-to-group
    map; it exists for tests that need hand-picked group assignments and must
    cover every word that will be hashed.
    """

    m: int
    hash_algorithm: str = "md5"
    mock_table: Mapping[str, int] | None = field(default=None)

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ConfigError(f"group count must be >= 1, got {self.m}")
        if self.hash_algorithm not in HASH_ALGORITHMS:
            raise ConfigError(f"unknown hash algorithm: {self.hash_algorithm!r}")
        if self.hash_algorithm == "mock":
            if self.mock_table is None:
                raise ConfigError("mock hashing requires a mock_table")
            table = {normalize_word(w): g for w, g in self.mock_table.items()}
            for word, group in table.items():
                if not 1 <= group <= self.m:
                    raise ConfigError(
                        f"mock_table maps {word!r} to group {group}, outside [1, {self.m}]"
                    )
            object.__setattr__(self, "mock_table", table)
        elif self.mock_table is not None:
            raise ConfigError("mock_table is only valid with the mock algorithm")


@dataclass(frozen=True)
class TextGroups:
    """The result of dividing one text into ``m`` per-group word sequences."""

    groups: tuple[Text, ...]
    mode: str

    @property
    def m(self) -> int:
        return len(self.groups)


def hash_group(word: str, cfg: PartitionConfig) -> int:
    """Group index in [1, m] for a word. Constant across texts and positions."""
    if cfg.hash_algorithm == "mock":
        assert cfg.mock_table is not None
        try:
            return cfg.mock_table[word]
        except KeyError:
            raise ConfigError(f"mock hash table has no entry for word {word!r}") from None
    return digest_int(word.encode("utf-8"), cfg.hash_algorithm) % cfg.m + 1


def divide_text(text: Text, cfg: PartitionConfig) -> TextGroups:
    """Divide a text into ``m`` groups by word hash (certified mode).

    Every token is assigned to exactly one group; each group is sorted by
    the canonical word order, so the result does not depend on the original
    token order. Duplicate tokens retain their multiplicity.
    """
    buckets: list[list[str]] = [[] for _ in range(cfg.m)]
    for token in text:
        buckets[hash_group(token, cfg) - 1].append(token)
    groups = tuple(tuple(sorted(b, key=canonical_word_id)) for b in buckets)
    return TextGroups(groups=groups, mode="certified")


def divide_text_semantic(
    text: Text, cfg: PartitionConfig, trigger_words: frozenset[str]
) -> TextGroups:
    """Divide a text into ``m`` groups, restricting only ``trigger_words``.

    Words in ``trigger_words`` go only to their hash group; every other word
    is replicated into all groups. Original relative order is preserved
    within each group, so each group reads as a subsequence of the input
    (plus nothing else).
    """
    buckets: list[list[str]] = [[] for _ in range(cfg.m)]
    for token in text:
        if token in trigger_words:
            buckets[hash_group(token, cfg) - 1].append(token)
        else:
            for bucket in buckets:
                bucket.append(token)
    return TextGroups(groups=tuple(tuple(b) for b in buckets), mode="semantic")
