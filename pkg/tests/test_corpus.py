"""Dataset model, on-disk format, sub-dataset construction, relabeling."""

import pytest

from hashvote.corpus import (
    LabeledDataset,
    LabeledExample,
    PoisonSpec,
    build_subdatasets,
    load_dataset,
    make_certified_training_set,
    save_dataset,
    select_poison_ids,
)
from hashvote.errors import ConfigError, DataError

from helpers import dataset_from_pairs, mock_cfg, sentiment_corpus


class TestLoadSave:
    def test_basic_line(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("1\tthe film is good\n2\tbad\n", encoding="utf-8")
        ds = load_dataset(path)
        assert ds.num_classes == 2
        assert ds.examples[0] == LabeledExample(id=0, text=("the", "film", "is", "good"), label=1)

    def test_header_declares_classes(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("#classes=4\n1\ta\n", encoding="utf-8")
        assert load_dataset(path).num_classes == 4

    def test_empty_file_without_header_rejected(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(DataError):
            load_dataset(path)

    def test_header_only_file_loads_empty(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("#classes=2\n", encoding="utf-8")
        assert len(load_dataset(path)) == 0

    def test_missing_tab_reports_line_number(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("#classes=2\n1\ta\nbroken line\n", encoding="utf-8")
        with pytest.raises(DataError, match=":3"):
            load_dataset(path)

    def test_label_above_class_count_rejected(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("#classes=2\n3\ta\n", encoding="utf-8")
        with pytest.raises(DataError):
            load_dataset(path)

    def test_label_zero_rejected(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("0\ta\n", encoding="utf-8")
        with pytest.raises(DataError):
            load_dataset(path)

    def test_invalid_utf8_rejected(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_bytes(b"1\t\xff\xfe\n")
        with pytest.raises(DataError):
            load_dataset(path)

    def test_byte_round_trip_for_normalized_file(self, tmp_path):
        path = tmp_path / "d.tsv"
        content = "#classes=3\n1\tthe film , good .\n3\tawful\n2\tso so\n"
        path.write_text(content, encoding="utf-8")
        out = tmp_path / "copy.tsv"
        save_dataset(load_dataset(path), out)
        assert out.read_bytes() == path.read_bytes()

    def test_object_round_trip(self, tmp_path):
        train, _ = sentiment_corpus(20, 0)
        path = tmp_path / "d.tsv"
        save_dataset(train, path)
        assert load_dataset(path) == train

    def test_comment_lines_ignored(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("# provenance here\n#classes=2\n1\ta\n", encoding="utf-8")
        assert len(load_dataset(path)) == 1


class TestDatasetInvariants:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(DataError):
            LabeledDataset(
                examples=(
                    LabeledExample(id=0, text=("a",), label=1),
                    LabeledExample(id=0, text=("b",), label=2),
                ),
                num_classes=2,
            )

    def test_single_class_count_rejected(self):
        with pytest.raises(DataError):
            LabeledDataset(examples=(), num_classes=1)


class TestBuildSubdatasets:
    def test_worked_example_training_rows(self):
        ds = dataset_from_pairs([(tuple("cbadbe"), 1)])
        subs = build_subdatasets(ds, mock_cfg())
        assert [sub.examples[0].text for sub in subs] == [
            ("a", "c"),
            ("b", "b", "d"),
            ("e",),
        ]
        assert all(sub.examples[0].label == 1 for sub in subs)
        assert all(sub.examples[0].id == 0 for sub in subs)

    def test_single_group_sorts_whole_text(self):
        from hashvote.partition import PartitionConfig

        ds = dataset_from_pairs([(("c", "a", "b"), 1)])
        (sub,) = build_subdatasets(ds, PartitionConfig(m=1))
        assert sub.examples[0].text == ("a", "b", "c")

    def test_every_subdataset_has_every_example(self):
        from hashvote.partition import PartitionConfig

        train, _ = sentiment_corpus(12, 0)
        subs = build_subdatasets(train, PartitionConfig(m=5))
        assert all(len(sub) == len(train) for sub in subs)
        for sub in subs:
            assert [ex.label for ex in sub] == [ex.label for ex in train]

    def test_semantic_mode_uses_semantic_division(self):
        ds = dataset_from_pairs([(tuple("cbadbe"), 2)])
        subs = build_subdatasets(ds, mock_cfg(), mode="semantic", trigger_words=frozenset("abc"))
        assert subs[0].examples[0].text == ("c", "a", "d", "e")
        assert subs[2].examples[0].text == ("d", "e")


class TestMakeCertifiedTrainingSet:
    def test_clean_mode_returns_input_unchanged(self):
        train, _ = sentiment_corpus(10, 0)
        spec = PoisonSpec(mode="clean", rate=0.5, target_class=1, seed=3)
        assert make_certified_training_set(train, spec) is train

    def test_zero_rate_changes_nothing(self):
        train, _ = sentiment_corpus(10, 0)
        spec = PoisonSpec(mode="mixed", rate=0.0, target_class=1, seed=3)
        assert make_certified_training_set(train, spec) == train

    def test_mixed_relabels_exact_count_texts_untouched(self):
        # Mixed mode selects over all examples, so a selected example may
        # already carry the target label; exactly floor(p*n) are assigned it.
        train, _ = sentiment_corpus(100, 0)
        spec = PoisonSpec(mode="mixed", rate=0.1, target_class=1, seed=3)
        out = make_certified_training_set(train, spec)
        selected = select_poison_ids(train, spec)
        assert len(selected) == 10
        for before, after in zip(train, out):
            if before.id in selected:
                assert after.label == 1
            else:
                assert after.label == before.label
            assert after.text == before.text

    def test_dirty_relabels_only_non_target(self):
        train, _ = sentiment_corpus(100, 0)
        spec = PoisonSpec(mode="dirty", rate=0.2, target_class=1, seed=3)
        out = make_certified_training_set(train, spec)
        non_target = sum(1 for ex in train if ex.label != 1)
        changed = [a.id for a, b in zip(train, out) if a.label != b.label]
        assert len(changed) == int(0.2 * non_target)
        assert all(train.examples[i].label != 1 for i in changed)

    def test_seeded_determinism(self):
        train, _ = sentiment_corpus(50, 0)
        spec = PoisonSpec(mode="mixed", rate=0.3, target_class=2, seed=11)
        assert make_certified_training_set(train, spec) == make_certified_training_set(
            train, spec
        )
        other = PoisonSpec(mode="mixed", rate=0.3, target_class=2, seed=12)
        assert select_poison_ids(train, spec) != select_poison_ids(train, other)

    def test_target_class_validated_against_dataset(self):
        train, _ = sentiment_corpus(10, 0)
        spec = PoisonSpec(mode="mixed", rate=0.1, target_class=5, seed=0)
        with pytest.raises(ConfigError):
            make_certified_training_set(train, spec)


class TestPoisonSpecValidation:
    def test_rate_range(self):
        with pytest.raises(ConfigError):
            PoisonSpec(mode="mixed", rate=1.5, target_class=1, seed=0)

    def test_mode_names(self):
        with pytest.raises(ConfigError):
            PoisonSpec(mode="sneaky", rate=0.1, target_class=1, seed=0)
