"""Shared domain vocabulary: label spaces, instances, datasets, rules, weak labels.

Everything in this module is an immutable value; construction validates the
cheap invariants and :func:`validate_dataset` reports the rest as data.
"""

from __future__ import annotations

import json
import math
import re
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Literal, Mapping

#: Reserved label id meaning "no rule matched / abstain". Never a real class.
ABSTAIN = 0

DatasetKind = Literal["clean_labeled", "unlabeled", "weak_labeled", "dev"]
RuleStatus = Literal["candidate", "accepted", "rejected"]

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase, split on non-alphanumeric boundaries, drop empty pieces."""
    return tuple(_TOKEN_RE.findall(text.lower()))


def stable_hash(text: str) -> int:
    """Process-independent 32-bit hash (CRC32); used for feature hashing and seeds."""
    return zlib.crc32(text.encode("utf-8"))


@dataclass(frozen=True)
class SparseVec:
    """Sparse real vector in a fixed-size hashed feature space.

    ``entries`` holds only nonzero components, keyed by feature id in
    ``range(size)``.
    """

    size: int
    entries: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.size <= 0:
            raise ValueError(f"feature space size must be positive, got {self.size}")

    @property
    def is_zero(self) -> bool:
        return not self.entries

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.entries.values()))

    def dot(self, other: "SparseVec") -> float:
        if self.size != other.size:
            raise ValueError(
                f"feature space mismatch: {self.size} vs {other.size}"
            )
        small, big = self.entries, other.entries
        if len(big) < len(small):
            small, big = big, small
        return sum(v * big[i] for i, v in small.items() if i in big)


def featurize(tokens: tuple[str, ...] | list[str], space_size: int) -> SparseVec:
    """Hashed bag-of-tokens counts, L2-normalized.

    Deterministic across runs (CRC32 hashing). An empty token list yields the
    zero vector; every nonempty result has unit L2 norm.
    """
    if space_size <= 0:
        raise ValueError(f"space_size must be positive, got {space_size}")
    counts: dict[int, float] = {}
    for tok in tokens:
        idx = stable_hash(tok) % space_size
        counts[idx] = counts.get(idx, 0.0) + 1.0
    if not counts:
        return SparseVec(space_size, {})
    norm = math.sqrt(sum(v * v for v in counts.values()))
    return SparseVec(space_size, {i: v / norm for i, v in sorted(counts.items())})


@dataclass(frozen=True)
class LabelSpace:
    """K named classes with ids 1..K; id 0 is reserved for ABSTAIN."""

    class_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.class_names) < 2:
            raise ValueError("label space needs at least 2 classes")
        if len(set(self.class_names)) != len(self.class_names):
            raise ValueError("class names must be distinct")

    @property
    def k(self) -> int:
        return len(self.class_names)

    def name_of(self, label: int) -> str:
        if not 1 <= label <= self.k:
            raise ValueError(f"label {label} outside 1..{self.k}")
        return self.class_names[label - 1]

    def id_of(self, name: str) -> int:
        return self.class_names.index(name) + 1

    def ids(self) -> range:
        return range(1, self.k + 1)


@dataclass(frozen=True)
class EntityPair:
    """Typed head/tail entity mention spans (character offsets into text)."""

    head_type: str
    tail_type: str
    head_span: tuple[int, int]
    tail_span: tuple[int, int]


@dataclass(frozen=True)
class Instance:
    """One text example with tokens, hashed features, and an optional gold label."""

    id: str
    text: str
    tokens: tuple[str, ...]
    features: SparseVec
    entity_pair: EntityPair | None = None
    gold_label: int | None = None


def make_instance(
    id: str,
    text: str,
    space_size: int,
    gold_label: int | None = None,
    entity_pair: EntityPair | None = None,
) -> Instance:
    """Build an Instance with tokens and features derived from ``text``."""
    tokens = tokenize(text)
    return Instance(
        id=id,
        text=text,
        tokens=tokens,
        features=featurize(tokens, space_size),
        entity_pair=entity_pair,
        gold_label=gold_label,
    )


@dataclass(frozen=True)
class WeakLabelRecord:
    """Provenance of one weak label: which rule matched, how well, and when."""

    instance_id: str
    label: int
    rule_id: str
    matching_score: float
    iteration: int

    def __post_init__(self) -> None:
        if self.label == ABSTAIN:
            raise ValueError("weak label cannot be ABSTAIN")
        if not 0.0 <= self.matching_score <= 1.0:
            raise ValueError(f"matching_score {self.matching_score} outside [0,1]")


@dataclass(frozen=True)
class Dataset:
    """Ordered instances plus their role; weak-labeled sets carry provenance records."""

    instances: tuple[Instance, ...]
    kind: DatasetKind
    records: Mapping[str, WeakLabelRecord] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[Instance]:
        return iter(self.instances)

    def by_id(self, instance_id: str) -> Instance:
        for inst in self.instances:
            if inst.id == instance_id:
                return inst
        raise KeyError(instance_id)

    def training_label(self, inst: Instance) -> int:
        """The label a trainer may use; hidden gold on unlabeled data is off limits."""
        if self.kind == "weak_labeled":
            return self.records[inst.id].label
        if self.kind in ("clean_labeled", "dev"):
            if inst.gold_label is None:
                raise ValueError(f"instance {inst.id} has no gold label")
            return inst.gold_label
        raise ValueError(f"{self.kind} dataset provides no training labels")


@dataclass(frozen=True)
class Rule:
    """Conjunctive labeling rule: optional entity-type gate plus a mask-token vocabulary."""

    id: str
    template_id: str
    mask_vocabulary: frozenset[str]
    label: int
    source_instance_id: str
    iteration: int
    status: RuleStatus = "candidate"
    entity_constraint: tuple[str, str] | None = None
    rule_text: str = ""

    def __post_init__(self) -> None:
        if not self.mask_vocabulary:
            raise ValueError("mask_vocabulary must be non-empty")
        if self.label == ABSTAIN:
            raise ValueError("rule label cannot be ABSTAIN")


def with_status(rule: Rule, status: RuleStatus) -> Rule:
    """Return the rule with its status advanced; only candidate rules may move."""
    if rule.status == status:
        return rule
    if rule.status != "candidate":
        raise ValueError(
            f"rule {rule.id} is {rule.status}; status can only move from candidate"
        )
    return replace(rule, status=status)


def validate_dataset(dataset: Dataset, labels: LabelSpace) -> list[str]:
    """Check every dataset/instance invariant; violations are returned, not raised."""
    problems: list[str] = []
    seen: set[str] = set()
    for inst in dataset.instances:
        if inst.id in seen:
            problems.append(f"duplicate id {inst.id}")
        seen.add(inst.id)
        if inst.tokens != tokenize(inst.text):
            problems.append(f"instance {inst.id}: tokens disagree with tokenizer")
        if inst.gold_label is not None and not 1 <= inst.gold_label <= labels.k:
            problems.append(
                f"instance {inst.id}: gold label {inst.gold_label} outside 1..{labels.k}"
            )
        if dataset.kind in ("clean_labeled", "dev") and inst.gold_label is None:
            problems.append(f"instance {inst.id}: {dataset.kind} requires a gold label")
        feats = inst.features
        for idx, val in feats.entries.items():
            if val == 0.0:
                problems.append(f"instance {inst.id}: explicit zero feature {idx}")
            elif val < 0.0:
                problems.append(f"instance {inst.id}: negative feature {idx}")
            if not 0 <= idx < feats.size:
                problems.append(f"instance {inst.id}: feature id {idx} outside space")
        if not feats.is_zero and abs(feats.norm() - 1.0) > 1e-9:
            problems.append(f"instance {inst.id}: features not L2-normalized")
    if dataset.kind == "weak_labeled":
        for iid, rec in dataset.records.items():
            if iid not in seen:
                problems.append(f"weak record for unknown instance {iid}")
            if not 1 <= rec.label <= labels.k:
                problems.append(f"weak record {iid}: label {rec.label} outside 1..{labels.k}")
        for inst in dataset.instances:
            if inst.id not in dataset.records:
                problems.append(f"instance {inst.id}: weak_labeled but no record")
    return problems


# --- JSONL / JSON persistence -------------------------------------------------

def _instance_to_json(inst: Instance, record: WeakLabelRecord | None) -> dict:
    row: dict = {"id": inst.id, "text": inst.text, "label": inst.gold_label}
    if inst.entity_pair is None:
        row["entity_pair"] = None
    else:
        ep = inst.entity_pair
        row["entity_pair"] = {
            "head_type": ep.head_type,
            "tail_type": ep.tail_type,
            "head": list(ep.head_span),
            "tail": list(ep.tail_span),
        }
    if record is not None:
        row["label"] = record.label
        row["gold_label"] = inst.gold_label
        row["rule_id"] = record.rule_id
        row["matching_score"] = record.matching_score
        row["iteration"] = record.iteration
    return row


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write one instance per line; weak-labeled sets add provenance columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for inst in dataset.instances:
            rec = dataset.records.get(inst.id) if dataset.kind == "weak_labeled" else None
            fh.write(json.dumps(_instance_to_json(inst, rec), sort_keys=True) + "\n")


def load_dataset(path: str | Path, kind: DatasetKind, space_size: int) -> Dataset:
    """Read the JSONL instance format; tokens and features are recomputed."""
    instances: list[Instance] = []
    records: dict[str, WeakLabelRecord] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            pair = None
            if row.get("entity_pair"):
                ep = row["entity_pair"]
                pair = EntityPair(
                    head_type=ep["head_type"],
                    tail_type=ep["tail_type"],
                    head_span=tuple(ep["head"]),
                    tail_span=tuple(ep["tail"]),
                )
            if kind == "weak_labeled" and "rule_id" in row:
                gold = row.get("gold_label")
                records[row["id"]] = WeakLabelRecord(
                    instance_id=row["id"],
                    label=row["label"],
                    rule_id=row["rule_id"],
                    matching_score=row["matching_score"],
                    iteration=row["iteration"],
                )
            else:
                gold = row.get("label")
            instances.append(
                make_instance(row["id"], row["text"], space_size, gold, pair)
            )
    return Dataset(tuple(instances), kind, records)


def rule_to_json(rule: Rule) -> dict:
    return {
        "id": rule.id,
        "template_id": rule.template_id,
        "mask_vocabulary": sorted(rule.mask_vocabulary),
        "entity_constraint": list(rule.entity_constraint) if rule.entity_constraint else None,
        "label": rule.label,
        "source_instance_id": rule.source_instance_id,
        "iteration": rule.iteration,
        "status": rule.status,
        "rule_text": rule.rule_text,
    }


def rule_from_json(row: dict) -> Rule:
    constraint = row.get("entity_constraint")
    return Rule(
        id=row["id"],
        template_id=row["template_id"],
        mask_vocabulary=frozenset(row["mask_vocabulary"]),
        entity_constraint=tuple(constraint) if constraint else None,
        label=row["label"],
        source_instance_id=row["source_instance_id"],
        iteration=row["iteration"],
        status=row["status"],
        rule_text=row.get("rule_text", ""),
    )


def save_rules(rules: list[Rule] | tuple[Rule, ...], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps([rule_to_json(r) for r in rules], indent=2, sort_keys=True),
        encoding="utf-8",
    )


def load_rules(path: str | Path) -> list[Rule]:
    rows = json.loads(Path(path).read_text(encoding="utf-8"))
    return [rule_from_json(row) for row in rows]
