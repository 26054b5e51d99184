"""Command-line surface tying the modules into reproducible runs.

Commands:

* ``poison``            write a backdoored training set and its trigger-free
                        (relabel-only) counterpart with coupled seeds
* ``train``             train the partitioned ensemble and persist it
* ``predict``           predict a dataset with a persisted ensemble
* ``certify``           certified-accuracy report (individual, joint, and
                        optionally the sample-partition baseline)
* ``attack-eval``       clean accuracy and attack success rate of an ensemble
* ``identify-triggers`` influence-score trigger word identification
* ``compare``           word-partition vs sample-partition certification

Every run is a pure function of (input files, configuration): reruns with
the same config produce byte-identical outputs. Wall-clock timings are the
one exception and go to a separate ``timings.txt``. Exit codes: 0 success,
2 configuration error, 3 data error, 4 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import certify as cert
from .attacks import build_backdoored_testset, poison_dataset
from .config import ENV_OUT_DIR, RunConfig, iter_options, load_config
from .corpus import (
    LabeledDataset,
    load_dataset,
    make_certified_training_set,
    save_dataset,
    select_poison_ids,
)
from .ensemble import EnsembleModel, load_ensemble, predict_ensemble, save_ensemble, train_ensemble
from .errors import ConfigError, HashvoteError
from .triggerid import identify_trigger_words, load_trigger_words, save_trigger_words


class _Phases:
    """Collects wall-clock phase durations for the timing sidecar."""

    def __init__(self) -> None:
        self.entries: list[tuple[str, float]] = []

    def run(self, name: str, fn, *args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        self.entries.append((name, time.perf_counter() - start))
        return result

    def write(self, path: Path) -> None:
        lines = [f"{name}\t{seconds:.3f}s\n" for name, seconds in self.entries]
        path.write_bytes("".join(lines).encode("utf-8"))


def _provenance(cfg: RunConfig, command: str) -> tuple[str, ...]:
    return (f"config-digest: {cfg.digest()}", f"command: {command}")


def _out_dir(cfg: RunConfig) -> Path:
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _model_dir(cfg: RunConfig) -> Path:
    explicit = cfg.get("model", "path")
    path = Path(explicit) if explicit else cfg.out_dir() / "ensemble"
    if not path.is_dir():
        raise ConfigError(f"no ensemble directory at {path}; run 'train' first or set [model] path")
    return path


def _load_omega(cfg: RunConfig):
    path = cfg.get("partition", "trigger_words")
    if path is None:
        return frozenset()
    return load_trigger_words(cfg.require_path("partition", "trigger_words"))


def _accuracy(model: EnsembleModel, dataset: LabeledDataset) -> Fraction:
    hits = sum(1 for ex in dataset if predict_ensemble(model, ex.text) == ex.label)
    return Fraction(hits, len(dataset))


def cmd_poison(cfg: RunConfig) -> None:
    out = _out_dir(cfg)
    phases = _Phases()
    dataset = phases.run("load", load_dataset, cfg.require_path("data", "train"))
    poison = cfg.poison_spec()
    attack = cfg.attack_spec()
    backdoored = phases.run("poison", poison_dataset, dataset, poison, attack)
    reference = phases.run("relabel", make_certified_training_set, dataset, poison)
    save_dataset(backdoored, out / "train_backdoored.tsv")
    save_dataset(reference, out / "train_certified.tsv")
    selected = select_poison_ids(dataset, poison)
    meta = [
        *(f"# {line}\n" for line in _provenance(cfg, "poison")),
        f"examples\t{len(dataset)}\n",
        f"poisoned\t{len(selected)}\n",
        f"mode\t{poison.mode}\n",
        f"attack\t{attack.kind}\n",
        f"trigger_size\t{attack.trigger_size}\n",
    ]
    (out / "poison_meta.txt").write_bytes("".join(meta).encode("utf-8"))
    phases.write(out / "timings.txt")
    print(f"poisoned {len(selected)}/{len(dataset)} examples -> {out}")


def cmd_train(cfg: RunConfig) -> None:
    out = _out_dir(cfg)
    phases = _Phases()
    dataset = phases.run("load", load_dataset, cfg.require_path("data", "train"))
    mode = cfg.get("partition", "mode")
    omega = _load_omega(cfg)
    model = phases.run(
        "train",
        train_ensemble,
        dataset,
        cfg.partition_config(),
        cfg.learner_spec(),
        mode,
        omega,
        cfg.workers(),
    )
    target = Path(cfg.get("model", "path")) if cfg.get("model", "path") else out / "ensemble"
    phases.run("save", save_ensemble, model, target, _provenance(cfg, "train"))
    phases.write(out / "timings.txt")
    print(f"trained {model.m} base models ({mode} mode) -> {target}")


def cmd_predict(cfg: RunConfig) -> None:
    out = _out_dir(cfg)
    model = load_ensemble(_model_dir(cfg))
    dataset = load_dataset(cfg.require_path("data", "test"))
    lines = [*(f"# {line}\n" for line in _provenance(cfg, "predict"))]
    lines.append("# id\tpredicted\ttruth\n")
    hits = 0
    for ex in dataset:
        predicted = predict_ensemble(model, ex.text)
        hits += predicted == ex.label
        lines.append(f"{ex.id}\t{predicted}\t{ex.label}\n")
    (out / "predictions.tsv").write_bytes("".join(lines).encode("utf-8"))
    print(f"accuracy {hits}/{len(dataset)} -> {out / 'predictions.tsv'}")


def cmd_certify(cfg: RunConfig) -> None:
    out = _out_dir(cfg)
    phases = _Phases()
    model = load_ensemble(_model_dir(cfg))
    if model.mode != "certified":
        raise ConfigError("certification requires an ensemble trained in certified mode")
    testset = load_dataset(cfg.require_path("data", "test"))
    methods = cfg.certify_methods()
    report = phases.run(
        "certify",
        cert.build_report,
        model,
        testset,
        cfg.max_t(),
        "joint" in methods,
        cfg.workers(),
    )
    baseline_budget = None
    if "baseline" in methods:
        train_data = load_dataset(cfg.require_path("data", "train"))
        baseline_budget = cfg.get("baseline", "budget")
        if baseline_budget is None:
            baseline_budget = int(cfg.get("poison", "rate") * len(train_data))
        value = phases.run(
            "baseline",
            cert.sample_partition_certify,
            train_data,
            testset,
            cfg.get("baseline", "partitions"),
            baseline_budget,
            cfg.learner_spec(),
        )
        report = cert.CertificationReport(
            m=report.m,
            num_classes=report.num_classes,
            records=report.records,
            accuracy={**report.accuracy, cert.METHOD_SAMPLE_PARTITION: {baseline_budget: value}},
            baseline_budget=baseline_budget,
        )
    header = list(_provenance(cfg, "certify"))
    if cfg.get("certify", "verify"):
        checked = phases.run("verify", _verify_records, model, testset, report)
        header.append(f"exhaustive-check: {checked} inputs verified at their certified sizes")
    (out / "report.txt").write_bytes(cert.render_table(report, header).encode("utf-8"))
    (out / "report.tsv").write_bytes(cert.render_records(report, header).encode("utf-8"))
    phases.write(out / "timings.txt")
    print(cert.render_table(report), end="")


def _verify_records(
    model: EnsembleModel, testset: LabeledDataset, report: cert.CertificationReport
) -> int:
    """Re-check every certificate by exhaustive corruption enumeration."""
    by_id = {ex.id: ex for ex in testset}
    for record in report.records:
        t = max(0, int(record.size))
        witness = cert.verify_certificate(model, by_id[record.example_id].text, t)
        if not witness.holds:
            raise HashvoteError(
                f"certificate violated for example {record.example_id}: "
                f"groups {witness.corrupted_groups} forced to {witness.forced_labels} "
                f"flip {witness.baseline_label} -> {witness.flipped_label}"
            )
    return len(report.records)


def cmd_attack_eval(cfg: RunConfig) -> None:
    out = _out_dir(cfg)
    phases = _Phases()
    model = load_ensemble(_model_dir(cfg))
    testset = load_dataset(cfg.require_path("data", "test"))
    attack = cfg.attack_spec()
    target = cfg.get("poison", "target")
    cacc = phases.run("clean", _accuracy, model, testset)
    backdoored = build_backdoored_testset(testset, attack, target)
    flipped = phases.run(
        "attacked",
        lambda: sum(1 for ex in backdoored if predict_ensemble(model, ex.text) == target),
    )
    asr = Fraction(flipped, len(backdoored))
    lines = [
        *(f"# {line}\n" for line in _provenance(cfg, "attack-eval")),
        f"CACC\t{cacc.numerator}/{cacc.denominator}\t{float(cacc):.4f}\n",
        f"ASR\t{asr.numerator}/{asr.denominator}\t{float(asr):.4f}\n",
        f"attack\t{attack.kind}\n",
        f"target_class\t{target}\n",
        f"non_target_examples\t{len(backdoored)}\n",
    ]
    (out / "metrics.txt").write_bytes("".join(lines).encode("utf-8"))
    phases.write(out / "timings.txt")
    print(f"CACC={float(cacc):.4f} ASR={float(asr):.4f} -> {out / 'metrics.txt'}")


def cmd_identify_triggers(cfg: RunConfig) -> None:
    out = _out_dir(cfg)
    phases = _Phases()
    dataset = phases.run("load", load_dataset, cfg.require_path("data", "train"))
    omega = phases.run("identify", identify_trigger_words, dataset, cfg.trigger_id_config())
    save_trigger_words(omega, out / "trigger_words.txt", _provenance(cfg, "identify-triggers"))
    phases.write(out / "timings.txt")
    print(f"flagged {len(omega)} potential trigger words -> {out / 'trigger_words.txt'}")


def cmd_compare(cfg: RunConfig) -> None:
    """Word-partition certification vs the sample-partition baseline on the
    same training data (expected: the trigger-free reference set)."""
    out = _out_dir(cfg)
    phases = _Phases()
    train_data = load_dataset(cfg.require_path("data", "train"))
    testset = load_dataset(cfg.require_path("data", "test"))
    model = phases.run(
        "train",
        train_ensemble,
        train_data,
        cfg.partition_config(),
        cfg.learner_spec(),
        "certified",
        frozenset(),
        cfg.workers(),
    )
    report = phases.run(
        "certify", cert.build_report, model, testset, cfg.max_t(), True, cfg.workers()
    )
    budget = cfg.get("baseline", "budget")
    if budget is None:
        budget = int(cfg.get("poison", "rate") * len(train_data))
    value = phases.run(
        "baseline",
        cert.sample_partition_certify,
        train_data,
        testset,
        cfg.get("baseline", "partitions"),
        budget,
        cfg.learner_spec(),
    )
    report = cert.CertificationReport(
        m=report.m,
        num_classes=report.num_classes,
        records=report.records,
        accuracy={**report.accuracy, cert.METHOD_SAMPLE_PARTITION: {budget: value}},
        baseline_budget=budget,
    )
    rendered = cert.render_table(report, _provenance(cfg, "compare"))
    (out / "compare.txt").write_bytes(rendered.encode("utf-8"))
    phases.write(out / "timings.txt")
    print(rendered, end="")


_COMMANDS = {
    "poison": cmd_poison,
    "train": cmd_train,
    "predict": cmd_predict,
    "certify": cmd_certify,
    "attack-eval": cmd_attack_eval,
    "identify-triggers": cmd_identify_triggers,
    "compare": cmd_compare,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hashvote",
        description="Hash-partitioned ensemble text classification with "
        "provable poisoning-robustness certificates.",
        epilog=f"The {ENV_OUT_DIR} environment variable overrides [run] out; "
        "command-line options override both it and the config file.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        sub = subparsers.add_parser(name, help=(fn.__doc__ or "").split("\n")[0] or None)
        sub.add_argument("--config", metavar="FILE", help="configuration file (INI sections)")
        for opt in iter_options():
            flag = f"{opt.section}-{opt.key}".replace("_", "-")
            sub.add_argument(
                f"--{flag}",
                dest=f"{opt.section}__{opt.key}",
                metavar=opt.type.__name__.upper(),
                help=opt.help,
            )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {
        key.replace("__", "-"): value
        for key, value in vars(args).items()
        if "__" in key and value is not None
    }
    try:
        cfg = load_config(args.config, overrides)
        _COMMANDS[args.command](cfg)
    except HashvoteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
