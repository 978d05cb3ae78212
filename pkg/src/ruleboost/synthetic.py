"""Synthetic keyword-topic corpus for scripted end-to-end runs.

Each class owns a disjoint keyword pool split into a few subtopic clusters;
a document draws its keywords from one cluster plus shared noise tokens, so
one labeling rule only reaches its own cluster and coverage has to be won
cluster by cluster. A slice of the unlabeled pool is pure noise and stays
unmatchable, which keeps self-training busy. The initial weak source covers
only a subset of classes, leaving the rest for the iterative loop.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .data import Dataset, Instance, LabelSpace, Rule, make_instance, save_dataset, save_rules
from .rulegen import RuleTemplate, render_rule_text

CLASS_NAMES = ("alpha", "beta", "gamma", "delta", "epsilon", "zeta")


@dataclass(frozen=True)
class SyntheticTask:
    labels: LabelSpace
    clean: Dataset
    unlabeled: Dataset
    dev: Dataset
    test: Dataset
    initial_rules: tuple[Rule, ...]
    template: RuleTemplate
    class_keywords: dict[int, tuple[str, ...]]


def make_synthetic_task(
    seed: int = 0,
    n_clean: int = 100,
    n_unlabeled: int = 5000,
    n_dev: int = 100,
    n_test: int = 1000,
    n_classes: int = 4,
    clusters_per_class: int = 3,
    cluster_size: int = 24,
    noise_vocab_size: int = 150,
    kw_per_doc: tuple[int, int] = (3, 6),
    noise_per_doc: tuple[int, int] = (4, 9),
    noise_doc_fraction: float = 0.05,
    cross_cluster_leak: float = 0.45,
    feature_space: int = 4096,
    initial_rule_classes: tuple[int, ...] = (1, 2),
    initial_rule_clusters: tuple[int, ...] = (0, 1),
    initial_rule_tokens: int = 8,
) -> SyntheticTask:
    if n_classes < 2 or n_classes > len(CLASS_NAMES):
        raise ValueError(f"n_classes must be in 2..{len(CLASS_NAMES)}")
    rng = np.random.default_rng(seed)
    names = CLASS_NAMES[:n_classes]
    labels = LabelSpace(names)
    keywords_per_class = clusters_per_class * cluster_size
    keywords = {
        c: tuple(f"{names[c - 1]}{j:02d}" for j in range(keywords_per_class))
        for c in labels.ids()
    }
    clusters = {
        c: [
            keywords[c][g * cluster_size : (g + 1) * cluster_size]
            for g in range(clusters_per_class)
        ]
        for c in labels.ids()
    }
    noise = [f"noise{j:03d}" for j in range(noise_vocab_size)]

    def make_doc(prefix: str, i: int, allow_noise_doc: bool) -> Instance:
        label = int(rng.integers(1, n_classes + 1))
        n_noise = int(rng.integers(noise_per_doc[0], noise_per_doc[1] + 1))
        tokens = list(rng.choice(noise, size=n_noise, replace=True))
        if not (allow_noise_doc and rng.random() < noise_doc_fraction):
            g = int(rng.integers(clusters_per_class))
            cluster = clusters[label][g]
            n_kw = int(rng.integers(kw_per_doc[0], kw_per_doc[1] + 1))
            tokens += list(rng.choice(cluster, size=n_kw, replace=False))
            if clusters_per_class > 1 and rng.random() < cross_cluster_leak:
                # Within-class bridge: a couple of tokens from a sibling
                # subtopic, so partially-covered regions stay reachable.
                other = clusters[label][(g + 1 + int(rng.integers(clusters_per_class - 1))) % clusters_per_class]
                tokens += list(rng.choice(other, size=int(rng.integers(1, 3)), replace=False))
        rng.shuffle(tokens)
        return make_instance(
            f"{prefix}{i:05d}", " ".join(tokens), feature_space, gold_label=label
        )

    def make_split(prefix: str, n: int, kind: str, allow_noise_doc: bool = False) -> Dataset:
        return Dataset(
            tuple(make_doc(prefix, i, allow_noise_doc) for i in range(n)), kind
        )

    clean = make_split("c", n_clean, "clean_labeled")
    # gold labels on the unlabeled pool are hidden; they only feed post-hoc metrics
    unlabeled = make_split("u", n_unlabeled, "unlabeled", allow_noise_doc=True)
    dev = make_split("d", n_dev, "dev")
    test = make_split("t", n_test, "dev")

    template = RuleTemplate(
        id="topic-v1", pattern="[MASK] topic: [INPUT]", task_kind="classification"
    )
    initial: list[Rule] = []
    for c in initial_rule_classes:
        for g in initial_rule_clusters:
            vocab = frozenset(clusters[c][g][:initial_rule_tokens])
            initial.append(
                Rule(
                    id=f"seed-{c}-{g}",
                    template_id=template.id,
                    mask_vocabulary=vocab,
                    label=c,
                    source_instance_id="seed",
                    iteration=0,
                    status="accepted",
                    rule_text=render_rule_text(vocab, labels.name_of(c)),
                )
            )
    return SyntheticTask(
        labels=labels,
        clean=clean,
        unlabeled=unlabeled,
        dev=dev,
        test=test,
        initial_rules=tuple(initial),
        template=template,
        class_keywords=keywords,
    )


def write_task(task: SyntheticTask, outdir: str | Path) -> dict[str, Path]:
    """Materialize the task's datasets, templates, and initial rules on disk."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "clean": outdir / "clean.jsonl",
        "unlabeled": outdir / "unlabeled.jsonl",
        "dev": outdir / "dev.jsonl",
        "test": outdir / "test.jsonl",
        "templates": outdir / "templates.json",
        "initial_rules": outdir / "initial_rules.json",
    }
    save_dataset(task.clean, paths["clean"])
    save_dataset(task.unlabeled, paths["unlabeled"])
    save_dataset(task.dev, paths["dev"])
    save_dataset(task.test, paths["test"])
    paths["templates"].write_text(_templates_json(task), encoding="utf-8")
    save_rules(list(task.initial_rules), paths["initial_rules"])
    return paths


def _templates_json(task: SyntheticTask) -> str:
    return json.dumps(
        [
            {
                "id": task.template.id,
                "pattern": task.template.pattern,
                "task_kind": task.template.task_kind,
            }
        ],
        indent=2,
    )


def write_config(
    task: SyntheticTask,
    task_dir: str | Path,
    checkpoint_dir: str | Path = "run",
    seed: int = 0,
    iterations: int = 5,
    feature_space: int = 4096,
    **overrides,
) -> Path:
    """Write a ready-to-run YAML config next to the task files."""
    task_dir = Path(task_dir)
    cfg = {
        "seed": seed,
        "feature_space": feature_space,
        "class_names": list(task.labels.class_names),
        "iterations": iterations,
        "top_n": 10,
        "candidates_per_instance": 10,
        "budget": 100,
        "annotators": 3,
        "ensemble_mode": "equal_weighted",
        "use_ensemble_for_weights": False,
        "include_clean_in_train": False,
        "self_training": True,
        "checkpoint_dir": str(checkpoint_dir),
        "datasets": {
            "clean": "clean.jsonl",
            "unlabeled": "unlabeled.jsonl",
            "dev": "dev.jsonl",
            "test": "test.jsonl",
        },
        "templates": "templates.json",
        "template_id": task.template.id,
        "initial_rules": "initial_rules.json",
        "match": {"alpha": 0.5, "sigma": 0.13, "k": 10},
        "train": {
            "learning_rate": 0.5,
            "epochs": 20,
            "batch_size": 32,
            "l2": 1e-4,
            "self_train_epochs": 2,
            "seed": seed,
        },
        "filler": {"kind": "corpus_stats", "lexicon_size": 6},
        "annotator": {
            "policy": "oracle",
            "p_flip": 0.0,
            "seed": seed,
            "precision_threshold": 0.8,
        },
        "evaluation": {"metric": "accuracy", "null_class": None},
    }
    cfg.update(overrides)
    path = task_dir / "config.yaml"
    path.write_text(yaml.safe_dump(cfg, sort_keys=False), encoding="utf-8")
    return path
