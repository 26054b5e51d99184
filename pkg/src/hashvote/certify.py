"""Vote-margin robustness certificates for partitioned ensembles.

Because every word maps to exactly one group, an attacker whose trigger uses
at most ``t`` distinct words can corrupt at most ``t`` of the ``m`` base
models, counting both training-time poisoning and test-time injection. The
certificates here are all consequences of that containment:

* ``certified_size``: half the tie-adjusted vote margin of one input; the
  prediction provably survives any attack whose trigger size is at most this
  value. Exact rational arithmetic, never floats.
* ``individual_certified_accuracy``: the fraction of test examples that are
  correct and certified at trigger size ``t``, treating each example's
  corrupted groups independently.
* ``joint_certified_accuracy``: a tighter dataset-level bound using the fact
  that one attack corrupts the same group set for every example: minimize
  over all group subsets of size ``t`` the fraction of examples whose vote
  survives worst-case behavior of exactly those groups.
* ``verify_certificate``: the executable form of the guarantee; exhaustively
  re-labels every corrupted-group combination and checks the majority vote.
* ``sample_partition_certify``: a baseline that partitions training examples
  (not words) and certifies a budget of poisoned examples; used to show why
  word-level partitioning tolerates far more poisoned data.

Dataset-level accuracies are reported as 0 beyond floor((m-1)/2): past that
point a majority of groups can be corrupted and no meaningful certificate
remains, so the report clips the one corner case (even m, unanimous votes,
tie-favored class) where the raw margin would still reach m/2.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import combinations, product
from math import comb, floor
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import LabeledDataset
from .ensemble import EnsembleModel, VoteVector, vote, vote_winner
from .errors import BudgetError, ConfigError, DataError
from .hashing import derive_seed, digest_int
from .learners import ConstantModel, LearnerSpec, train
from .partition import Text

CertifiedSize = Fraction

METHOD_INDIVIDUAL = "individual"
METHOD_JOINT = "joint"
METHOD_SAMPLE_PARTITION = "dpa_baseline"

DEFAULT_ENUMERATION_BUDGET = 2_000_000


def max_certifiable_size(m: int) -> int:
    """Largest trigger size at which a meaningful certificate exists."""
    return (m - 1) // 2


def certified_size(votes: VoteVector, predicted: int) -> CertifiedSize:
    """Half the tie-adjusted margin between the winner and the runner-up.

    The prediction for this input provably survives any attack with trigger
    size at most this value (a half-integer rational).
    """
    runner_up = max(
        votes.counts[c - 1] + (1 if predicted > c else 0)
        for c in range(1, len(votes.counts) + 1)
        if c != predicted
    )
    return Fraction(votes.counts[predicted - 1] - runner_up, 2)


@dataclass(frozen=True)
class _Row:
    example_id: int
    votes: VoteVector
    predicted: int
    truth: int

    @property
    def correct(self) -> bool:
        return self.predicted == self.truth

    @property
    def size(self) -> CertifiedSize:
        return certified_size(self.votes, self.predicted)


def _evaluate(ensemble: EnsembleModel, testset: LabeledDataset) -> list[_Row]:
    if len(testset) == 0:
        raise DataError("cannot certify an empty test set")
    rows = []
    for ex in testset:
        votes = vote(ensemble, ex.text)
        rows.append(
            _Row(
                example_id=ex.id,
                votes=votes,
                predicted=vote_winner(votes.counts),
                truth=ex.label,
            )
        )
    return rows


def individual_certified_accuracy(
    ensemble: EnsembleModel, testset: LabeledDataset, t: int
) -> Fraction:
    """Fraction of test examples that are correct with certified size >= t."""
    if t < 0:
        raise ConfigError(f"trigger size must be >= 0, got {t}")
    rows = _evaluate(ensemble, testset)
    return _individual_from_rows(rows, t, ensemble.m)


def _individual_from_rows(rows: Sequence[_Row], t: int, m: int) -> Fraction:
    if t > max_certifiable_size(m):
        return Fraction(0)
    hits = sum(1 for row in rows if row.correct and row.size >= t)
    return Fraction(hits, len(rows))


def _joint_certified(row: _Row, gamma: tuple[int, ...]) -> bool:
    """Does the vote for one example survive worst-case behavior of the
    groups in ``gamma`` (0-based indices)?

    Surviving votes for the winner come only from uncorrupted groups; every
    rival class may additionally gain the corrupted groups not already
    voting for it.
    """
    labels = row.votes.per_group_labels
    y = row.predicted
    surviving = row.votes.counts[y - 1] - sum(1 for j in gamma if labels[j] == y)
    worst_rival = max(
        row.votes.counts[c - 1]
        + sum(1 for j in gamma if labels[j] != c)
        + (1 if y > c else 0)
        for c in range(1, len(row.votes.counts) + 1)
        if c != y
    )
    return surviving >= worst_rival


def _joint_hits(rows: Sequence[_Row], gamma: tuple[int, ...]) -> int:
    return sum(1 for row in rows if row.correct and _joint_certified(row, gamma))


def joint_certified_accuracy(
    ensemble: EnsembleModel, testset: LabeledDataset, t: int, workers: int = 1
) -> Fraction:
    """Certified accuracy with the corrupted group set shared across examples.

    Minimizes over all C(m, t) group subsets, enumerated in lexicographic
    order; never below the individual bound. The min-reduction is order-free,
    so parallel and serial evaluation agree; the serial path stops early once
    a subset drives the count to zero.
    """
    if t < 0:
        raise ConfigError(f"trigger size must be >= 0, got {t}")
    if t > ensemble.m:
        raise ConfigError(f"trigger size {t} exceeds group count {ensemble.m}")
    rows = _evaluate(ensemble, testset)
    return _joint_from_rows(rows, t, ensemble.m, workers)


def _joint_from_rows(rows: Sequence[_Row], t: int, m: int, workers: int = 1) -> Fraction:
    if t > max_certifiable_size(m):
        return Fraction(0)
    gammas = combinations(range(m), t)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            best = min(pool.map(lambda g: _joint_hits(rows, g), gammas))
    else:
        best = len(rows)
        for gamma in gammas:
            best = min(best, _joint_hits(rows, gamma))
            if best == 0:
                break
    return Fraction(best, len(rows))


@dataclass(frozen=True)
class CorruptionWitness:
    """Outcome of the exhaustive corruption check for one input.

    When ``holds`` is false, the counterexample fields name the corrupted
    groups (1-based), the labels forced onto them, and the label the
    manipulated vote flips to.
    """

    holds: bool
    baseline_label: int
    corrupted_groups: tuple[int, ...] | None = None
    forced_labels: tuple[int, ...] | None = None
    flipped_label: int | None = None


def verify_certificate(
    ensemble: EnsembleModel,
    text: Text,
    t: int,
    max_enumerations: int = DEFAULT_ENUMERATION_BUDGET,
) -> CorruptionWitness:
    """Exhaustively check that no t groups can change this input's label.

    Enumerates every group subset of size at most ``t`` and every way of
    re-labeling those groups' votes, and recomputes the tie-broken majority
    each time. Must hold whenever t is at most the input's certified size;
    when it fails, the returned witness carries a flipping manipulation.
    """
    if t < 0:
        raise ConfigError(f"trigger size must be >= 0, got {t}")
    m, C = ensemble.m, ensemble.num_classes
    depth = min(t, m)
    total = sum(comb(m, k) * C**k for k in range(depth + 1))
    if total > max_enumerations:
        raise BudgetError(
            f"exhaustive check needs {total} manipulations for m={m}, C={C}, t={t}; "
            f"budget is {max_enumerations}"
        )
    baseline = vote(ensemble, text)
    y = vote_winner(baseline.counts)
    for k in range(depth + 1):
        for gamma in combinations(range(m), k):
            for forced in product(range(1, C + 1), repeat=k):
                labels = list(baseline.per_group_labels)
                for j, label in zip(gamma, forced):
                    labels[j] = label
                counts = [0] * C
                for label in labels:
                    counts[label - 1] += 1
                flipped = vote_winner(tuple(counts))
                if flipped != y:
                    return CorruptionWitness(
                        holds=False,
                        baseline_label=y,
                        corrupted_groups=tuple(j + 1 for j in gamma),
                        forced_labels=forced,
                        flipped_label=flipped,
                    )
    return CorruptionWitness(holds=True, baseline_label=y)


def sample_partition_certify(
    dataset: LabeledDataset,
    testset: LabeledDataset,
    num_partitions: int,
    poisoned_example_budget: int,
    learner_spec: LearnerSpec,
) -> Fraction:
    """Baseline certifier that partitions training examples instead of words.

    Each example is assigned to one of ``num_partitions`` sub-datasets by a
    digest of its text; one base model is trained per partition and votes on
    the raw test text. One poisoned example corrupts at most one partition,
    so an example is certified against ``poisoned_example_budget`` poisoned
    training examples when half its tie-adjusted vote margin covers the
    budget. The tolerated budget is bounded by the partition count, which is
    why this baseline collapses under realistic poisoning volumes.
    """
    if num_partitions < 1:
        raise ConfigError(f"partition count must be >= 1, got {num_partitions}")
    if poisoned_example_budget < 0:
        raise ConfigError(f"budget must be >= 0, got {poisoned_example_budget}")
    if len(testset) == 0:
        raise DataError("cannot certify an empty test set")
    if poisoned_example_budget > max_certifiable_size(num_partitions):
        return Fraction(0)

    parts: list[list] = [[] for _ in range(num_partitions)]
    for ex in dataset:
        index = digest_int(" ".join(ex.text).encode("utf-8"), "sha256") % num_partitions
        parts[index].append(ex)

    majority = vote_winner(
        tuple(
            sum(1 for ex in dataset if ex.label == c)
            for c in range(1, dataset.num_classes + 1)
        )
    )
    models = []
    for j, rows in enumerate(parts):
        if rows:
            spec = replace(learner_spec, seed=derive_seed(learner_spec.seed, "sample-partition", j))
            models.append(
                train(spec, LabeledDataset(examples=tuple(rows), num_classes=dataset.num_classes))
            )
        else:
            # An empty partition contributes a fixed global-prior vote.
            models.append(ConstantModel(dataset.num_classes, majority))

    hits = 0
    for ex in testset:
        labels = [model.predict(ex.text) for model in models]
        counts = [0] * dataset.num_classes
        for label in labels:
            counts[label - 1] += 1
        predicted = vote_winner(tuple(counts))
        budget = certified_size(
            VoteVector(counts=tuple(counts), per_group_labels=tuple(labels)), predicted
        )
        if predicted == ex.label and budget >= poisoned_example_budget:
            hits += 1
    return Fraction(hits, len(testset))


@dataclass(frozen=True)
class ExampleRecord:
    example_id: int
    predicted: int
    truth: int
    counts: tuple[int, ...]
    size: CertifiedSize


@dataclass(frozen=True)
class CertificationReport:
    """Per-example certificates plus dataset-level certified-accuracy tables.

    ``accuracy`` maps a method tag to {trigger size: exact fraction}; the
    sample-partition baseline instead maps its poisoned-example budget to its
    single value, recorded in ``baseline_budget``.
    """

    m: int
    num_classes: int
    records: tuple[ExampleRecord, ...]
    accuracy: dict[str, dict[int, Fraction]]
    baseline_budget: int | None = None


def build_report(
    ensemble: EnsembleModel,
    testset: LabeledDataset,
    max_t: int | None = None,
    joint: bool = True,
    workers: int = 1,
) -> CertificationReport:
    """Certify a test set at every trigger size up to ``max_t``."""
    rows = _evaluate(ensemble, testset)
    if max_t is None:
        max_t = max_certifiable_size(ensemble.m)
    records = tuple(
        ExampleRecord(
            example_id=row.example_id,
            predicted=row.predicted,
            truth=row.truth,
            counts=row.votes.counts,
            size=row.size,
        )
        for row in rows
    )
    accuracy: dict[str, dict[int, Fraction]] = {
        METHOD_INDIVIDUAL: {
            t: _individual_from_rows(rows, t, ensemble.m) for t in range(max_t + 1)
        }
    }
    if joint:
        accuracy[METHOD_JOINT] = {
            t: _joint_from_rows(rows, t, ensemble.m, workers) for t in range(max_t + 1)
        }
    return CertificationReport(
        m=ensemble.m,
        num_classes=ensemble.num_classes,
        records=records,
        accuracy=accuracy,
    )


def _format_size(size: Fraction) -> str:
    # Canonical numerator-over-two rendering: 3/2, 4/2, -1/2, ...
    return f"{int(size * 2)}/2"


def render_records(report: CertificationReport, header_lines: Iterable[str] = ()) -> str:
    """Machine-readable report: one TAB-separated record per example, then a
    certified-accuracy footer, one line per (method, trigger size)."""
    out = [f"# {line}\n" for line in header_lines]
    out.append("# record\tid\tpredicted\ttruth\tcounts\tcertified_size\n")
    for rec in report.records:
        counts = ",".join(str(c) for c in rec.counts)
        out.append(
            f"record\t{rec.example_id}\t{rec.predicted}\t{rec.truth}\t{counts}"
            f"\t{_format_size(rec.size)}\n"
        )
    for method, table in sorted(report.accuracy.items()):
        for t, value in sorted(table.items()):
            out.append(
                f"ca\t{method}\t{t}\t{value.numerator}/{value.denominator}"
                f"\t{float(value):.4f}\n"
            )
    return "".join(out)


def render_table(report: CertificationReport, header_lines: Iterable[str] = ()) -> str:
    """Human-readable aligned certified-accuracy table.

    Word-partition methods share the trigger-size axis; the sample-partition
    baseline certifies a poisoned-example budget instead, so it is reported
    as a footer line rather than a column.
    """
    out = [f"# {line}\n" for line in header_lines]
    methods = [m for m in sorted(report.accuracy) if m != METHOD_SAMPLE_PARTITION]
    ts = sorted({t for m in methods for t in report.accuracy[m]})
    width = max((len(m) for m in methods), default=10)
    out.append(f"{'trigger size':>14} | " + " | ".join(f"{m:>{width}}" for m in methods) + "\n")
    out.append("-" * (17 + (width + 3) * len(methods)) + "\n")
    for t in ts:
        cells = []
        for method in methods:
            value = report.accuracy[method].get(t)
            cells.append(f"{float(value):>{width}.4f}" if value is not None else " " * width)
        out.append(f"{t:>14} | " + " | ".join(cells) + "\n")
    if METHOD_SAMPLE_PARTITION in report.accuracy:
        for budget, value in sorted(report.accuracy[METHOD_SAMPLE_PARTITION].items()):
            out.append(
                f"sample-partition baseline: CA={float(value):.4f} "
                f"at poisoned-example budget {budget}\n"
            )
    correct = sum(1 for r in report.records if r.predicted == r.truth)
    out.append(
        f"# m={report.m} classes={report.num_classes} examples={len(report.records)} "
        f"clean_correct={correct}\n"
    )
    return "".join(out)
