"""Tokenization and hash-partitioning behavior."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hashvote.errors import ConfigError
from hashvote.partition import (
    PartitionConfig,
    canonical_word_id,
    divide_text,
    divide_text_semantic,
    hash_group,
    normalize,
    normalize_word,
)

from helpers import MOCK_TABLE, mock_cfg

words = st.text(
    st.characters(codec="utf-8", categories=("L", "N")), min_size=1, max_size=8
).map(normalize_word)
texts = st.lists(words, max_size=20).map(tuple)


class TestNormalize:
    def test_punctuation_isolated_and_lowercased(self):
        assert normalize("The film, GOOD.") == ("the", "film", ",", "good", ".")

    def test_empty_input(self):
        assert normalize("") == ()

    def test_whitespace_collapse_keeps_multiplicity(self):
        assert normalize("a  a\ta") == ("a", "a", "a")

    def test_trailing_and_multiple_punctuation(self):
        assert normalize("wow!? (yes)") == ("wow", "!", "?", "(", "yes", ")")

    @given(st.text(max_size=40))
    def test_idempotent_on_rejoined_tokens(self, raw):
        tokens = normalize(raw)
        assert normalize(" ".join(tokens)) == tokens

    @given(words)
    def test_word_normalization_idempotent(self, word):
        assert normalize_word(word) == word


class TestHashGroup:
    def test_modulo_one_forces_group_one(self):
        cfg = PartitionConfig(m=1)
        for word in ("alpha", "beta", "1914", "„"):
            assert hash_group(normalize_word(word), cfg) == 1

    def test_md5_regression_value(self):
        # digest_int(md5("cf")) % 7 + 1, frozen as a regression constant
        assert hash_group("cf", PartitionConfig(m=7)) == 4

    def test_mock_table_lookup(self):
        assert hash_group("b", mock_cfg()) == 2

    def test_mock_table_unmapped_word(self):
        with pytest.raises(ConfigError):
            hash_group("zzz", mock_cfg())

    @given(words, st.sampled_from(["md5", "sha1", "sha256"]), st.integers(1, 12))
    def test_group_always_in_range(self, word, algorithm, m):
        assert 1 <= hash_group(word, PartitionConfig(m=m, hash_algorithm=algorithm)) <= m

    @given(words, st.integers(1, 12))
    def test_same_word_same_group(self, word, m):
        cfg = PartitionConfig(m=m)
        assert hash_group(word, cfg) == hash_group(word, cfg)


class TestCanonicalWordId:
    def test_reference_order(self):
        assert canonical_word_id("a") < canonical_word_id("b") < canonical_word_id("e")

    def test_equal_words_equal_keys(self):
        assert canonical_word_id("same") == canonical_word_id("same")

    def test_byte_order(self):
        assert canonical_word_id("zebra") > canonical_word_id("apple")


class TestDivideText:
    def test_worked_example(self):
        groups = divide_text(tuple("cbadbe"), mock_cfg()).groups
        assert groups == (("a", "c"), ("b", "b", "d"), ("e",))

    def test_empty_text(self):
        assert divide_text((), mock_cfg()).groups == ((), (), ())

    def test_any_permutation_same_groups(self):
        reference = divide_text(tuple("cbadbe"), mock_cfg())
        assert divide_text(tuple("ebdabc"), mock_cfg()) == reference
        assert divide_text(tuple("abbcde"), mock_cfg()) == reference

    @given(texts, st.integers(1, 7), st.randoms())
    @settings(max_examples=60)
    def test_permutation_invariance(self, text, m, rnd):
        cfg = PartitionConfig(m=m)
        shuffled = list(text)
        rnd.shuffle(shuffled)
        assert divide_text(tuple(shuffled), cfg) == divide_text(text, cfg)

    @given(texts, st.integers(1, 7))
    @settings(max_examples=60)
    def test_partition_preserves_multiset(self, text, m):
        groups = divide_text(text, PartitionConfig(m=m)).groups
        merged = sorted(tok for group in groups for tok in group)
        assert merged == sorted(text)

    @given(texts, st.integers(1, 7))
    @settings(max_examples=60)
    def test_each_group_holds_only_its_words(self, text, m):
        cfg = PartitionConfig(m=m)
        for j, group in enumerate(divide_text(text, cfg).groups, start=1):
            assert all(hash_group(tok, cfg) == j for tok in group)

    @given(texts, st.sets(words, max_size=3), st.integers(1, 7), st.randoms())
    @settings(max_examples=60)
    def test_trigger_containment(self, text, trigger, m, rnd):
        """Inserting words from a set e into a permuted text changes at most
        the groups that e hashes to."""
        cfg = PartitionConfig(m=m)
        attacked = list(text)
        rnd.shuffle(attacked)
        for word in trigger:
            attacked.insert(rnd.randrange(len(attacked) + 1), word)
        before = divide_text(text, cfg).groups
        after = divide_text(tuple(attacked), cfg).groups
        changed = {j for j in range(m) if before[j] != after[j]}
        assert changed <= {hash_group(w, cfg) - 1 for w in trigger}
        assert len(changed) <= len(trigger)


class TestDivideTextSemantic:
    def test_worked_example(self):
        groups = divide_text_semantic(
            tuple("cbadbe"), mock_cfg(), frozenset("abc")
        ).groups
        assert groups == (
            ("c", "a", "d", "e"),
            ("b", "d", "b", "e"),
            ("d", "e"),
        )

    def test_empty_restriction_replicates_everywhere(self):
        text = tuple("cbadbe")
        groups = divide_text_semantic(text, mock_cfg(), frozenset()).groups
        assert groups == (text, text, text)

    def test_full_restriction_matches_hash_partition_in_input_order(self):
        text = tuple("cbadbe")
        cfg = mock_cfg()
        groups = divide_text_semantic(text, cfg, frozenset(text)).groups
        for j, group in enumerate(groups, start=1):
            assert group == tuple(tok for tok in text if hash_group(tok, cfg) == j)


class TestPartitionConfig:
    def test_group_count_must_be_positive(self):
        with pytest.raises(ConfigError):
            PartitionConfig(m=0)

    def test_unknown_algorithm(self):
        with pytest.raises(ConfigError):
            PartitionConfig(m=3, hash_algorithm="crc32")

    def test_mock_requires_table(self):
        with pytest.raises(ConfigError):
            PartitionConfig(m=3, hash_algorithm="mock")

    def test_mock_table_range_checked(self):
        with pytest.raises(ConfigError):
            PartitionConfig(m=2, hash_algorithm="mock", mock_table={"a": 3})

    def test_table_without_mock_rejected(self):
        with pytest.raises(ConfigError):
            PartitionConfig(m=2, hash_algorithm="md5", mock_table={"a": 1})

    def test_mock_table_keys_normalized(self):
        cfg = PartitionConfig(m=3, hash_algorithm="mock", mock_table={"A": 1})
        assert hash_group("a", cfg) == 1
