"""Candidate rule generation: prompt templates plus pluggable mask fillers.

Large-error instances are rendered into prompts with a single ``[MASK]``
slot; a mask filler proposes top-k tokens for the slot, and each proposed
token becomes one singleton candidate rule carrying the source instance's
gold label. Two fillers ship here: a deterministic corpus-statistics filler
(self-contained, used for tests and scripted runs) and an HTTP client for an
external masked-language-model service.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Protocol, Sequence

import requests

from .data import Dataset, Instance, LabelSpace, Rule, stable_hash

MASK = "[MASK]"
TaskKind = Literal["classification", "relation"]


class FillerError(Exception):
    """Base class for mask-filler failures."""


class FillerConnectionError(FillerError):
    """The endpoint could not be reached after the configured retries."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class FillerProtocolError(FillerError):
    """The endpoint answered, but the payload violates the wire contract."""


@dataclass(frozen=True)
class RuleTemplate:
    """Prompt pattern with [INPUT] (plus [HEAD]/[TAIL] for relations) and one [MASK]."""

    id: str
    pattern: str
    task_kind: TaskKind = "classification"

    def __post_init__(self) -> None:
        if self.pattern.count(MASK) != 1:
            raise ValueError(
                f"template {self.id!r} must contain exactly one {MASK}, "
                f"found {self.pattern.count(MASK)}"
            )


@dataclass(frozen=True)
class MaskPrediction:
    token: str
    probability: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability {self.probability} outside [0,1]")


@dataclass(frozen=True)
class MaskFillerSpec:
    """Declarative filler choice for configs; build with :func:`build_filler`."""

    kind: Literal["corpus_stats", "http_lm"] = "corpus_stats"
    lexicon_size: int = 25
    seed: int = 0
    endpoint: str = ""
    retries: int = 2
    timeout: float = 5.0


class MaskFiller(Protocol):
    def fill(self, prompt: str, source: Instance, k: int) -> list[MaskPrediction]:
        ...


def load_templates(path: str | Path) -> list[RuleTemplate]:
    """Template file format: JSON list of {id, pattern, task_kind}."""
    rows = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        RuleTemplate(id=row["id"], pattern=row["pattern"], task_kind=row["task_kind"])
        for row in rows
    ]


def render_prompt(template: RuleTemplate, x: Instance) -> str:
    """Substitute [INPUT]/[HEAD]/[TAIL] from the instance, keeping [MASK] verbatim."""
    if template.task_kind == "relation" and x.entity_pair is None:
        raise ValueError(
            f"relation template {template.id!r} needs an entity pair on instance {x.id}"
        )
    prompt = template.pattern.replace("[INPUT]", x.text)
    if x.entity_pair is not None:
        hs, he = x.entity_pair.head_span
        ts, te = x.entity_pair.tail_span
        prompt = prompt.replace("[HEAD]", x.text[hs:he]).replace("[TAIL]", x.text[ts:te])
    return prompt


def validate_predictions(preds: Sequence[MaskPrediction], k: int) -> None:
    """Enforce the filler response contract: 1..k items, sorted, mass <= 1."""
    if not 1 <= len(preds) <= k:
        raise FillerProtocolError(f"expected 1..{k} predictions, got {len(preds)}")
    probs = [p.probability for p in preds]
    if any(b > a for a, b in zip(probs, probs[1:])):
        raise FillerProtocolError("predictions not sorted by descending probability")
    if sum(probs) > 1.0 + 1e-6:
        raise FillerProtocolError(f"probabilities sum to {sum(probs)} > 1")


class CorpusStatsFiller:
    """Deterministic mask filler backed by class-conditional token statistics.

    Candidate tokens are the source instance's own tokens plus a per-class
    lexicon of the corpus's most class-indicative tokens. Each candidate is
    scored by add-one-smoothed log-odds toward a target class (the source's
    gold label, or the naive-Bayes argmax when the source is unlabeled), a
    softmax turns scores into probabilities, and the top-k come back with
    ties broken alphabetically.
    """

    def __init__(
        self,
        documents: Iterable[tuple[tuple[str, ...], int]],
        n_classes: int,
        lexicon_size: int = 25,
    ):
        if n_classes < 2:
            raise ValueError("need at least 2 classes")
        self.n_classes = n_classes
        self.lexicon_size = lexicon_size
        self._counts: dict[str, list[float]] = {}
        self._class_totals = [0.0] * (n_classes + 1)  # index by class id, 0 unused
        n_docs = 0
        for tokens, label in documents:
            if not 1 <= label <= n_classes:
                raise ValueError(f"corpus label {label} outside 1..{n_classes}")
            n_docs += 1
            for tok in tokens:
                row = self._counts.setdefault(tok, [0.0] * (n_classes + 1))
                row[label] += 1.0
                self._class_totals[label] += 1.0
        if n_docs == 0:
            raise ValueError("corpus has no labeled documents")
        self._vocab_size = max(len(self._counts), 1)
        self._grand_total = sum(self._class_totals)
        self._lexicons = {c: self._build_lexicon(c) for c in range(1, n_classes + 1)}

    @classmethod
    def from_datasets(
        cls,
        datasets: Sequence[Dataset],
        labels: LabelSpace,
        lexicon_size: int = 25,
    ) -> "CorpusStatsFiller":
        docs = []
        for ds in datasets:
            for inst in ds.instances:
                docs.append((inst.tokens, ds.training_label(inst)))
        return cls(docs, labels.k, lexicon_size)

    def log_odds(self, token: str, label: int) -> float:
        """Add-one-smoothed log P(token|label) - log P(token|other labels)."""
        row = self._counts.get(token)
        in_class = row[label] if row else 0.0
        total = sum(row[1:]) if row else 0.0
        n_class = self._class_totals[label]
        n_rest = self._grand_total - n_class
        p_in = (in_class + 1.0) / (n_class + self._vocab_size)
        p_out = (total - in_class + 1.0) / (n_rest + self._vocab_size)
        return math.log(p_in) - math.log(p_out)

    def _build_lexicon(self, label: int) -> tuple[str, ...]:
        ranked = sorted(
            self._counts, key=lambda tok: (-self.log_odds(tok, label), tok)
        )
        return tuple(ranked[: self.lexicon_size])

    def lexicon(self, label: int) -> tuple[str, ...]:
        return self._lexicons[label]

    def posterior_class(self, tokens: Sequence[str]) -> int:
        """Naive-Bayes argmax with uniform class prior; ties go to the lowest id."""
        best_label, best_score = 1, -math.inf
        for c in range(1, self.n_classes + 1):
            n_class = self._class_totals[c]
            score = 0.0
            for tok in tokens:
                row = self._counts.get(tok)
                in_class = row[c] if row else 0.0
                score += math.log((in_class + 1.0) / (n_class + self._vocab_size))
            if score > best_score:
                best_label, best_score = c, score
        return best_label

    def fill(self, prompt: str, source: Instance, k: int) -> list[MaskPrediction]:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        target = source.gold_label
        if target is None:
            target = self.posterior_class(source.tokens)
        pool = sorted(set(source.tokens) | set(self._lexicons[target]))
        if not pool:
            raise FillerError("no candidate tokens")
        scores = [self.log_odds(tok, target) for tok in pool]
        peak = max(scores)
        exps = [math.exp(s - peak) for s in scores]
        total = sum(exps)
        probs = [e / total for e in exps]
        ranked = sorted(zip(pool, probs), key=lambda item: (-item[1], item[0]))
        return [MaskPrediction(tok, p) for tok, p in ranked[:k]]


def corpus_stats_fill(
    prompt: str, source: Instance, k: int, weak_corpus: Dataset
) -> list[MaskPrediction]:
    """One-shot corpus-statistics fill; the class count is inferred from the corpus."""
    docs = [
        (inst.tokens, weak_corpus.training_label(inst)) for inst in weak_corpus.instances
    ]
    if not docs:
        raise FillerError("corpus has no labeled documents")
    n_classes = max(label for _, label in docs)
    if source.gold_label is not None:
        n_classes = max(n_classes, source.gold_label)
    filler = CorpusStatsFiller(docs, max(n_classes, 2))
    return filler.fill(prompt, source, k)


def http_lm_fill(
    prompt: str,
    k: int,
    endpoint: str,
    retries: int = 2,
    timeout: float = 5.0,
    backoff: float = 0.1,
) -> list[MaskPrediction]:
    """POST {"prompt", "k"} to a mask-filling service and validate the response.

    Network failures and non-200 statuses are retried ``retries`` times before
    raising :class:`FillerConnectionError`; contract violations in an otherwise
    successful response raise :class:`FillerProtocolError` immediately.
    """
    attempts = 0
    last_error = "no attempt made"
    while attempts <= retries:
        attempts += 1
        try:
            resp = requests.post(
                endpoint, json={"prompt": prompt, "k": k}, timeout=timeout
            )
        except requests.RequestException as exc:
            last_error = str(exc)
        else:
            if resp.status_code == 200:
                return _parse_fill_response(resp, k)
            last_error = f"HTTP {resp.status_code}"
        if attempts <= retries:
            time.sleep(backoff)
    raise FillerConnectionError(
        f"mask filler at {endpoint} failed after {attempts} attempts: {last_error}",
        attempts=attempts,
    )


def _parse_fill_response(resp: requests.Response, k: int) -> list[MaskPrediction]:
    try:
        body = resp.json()
        preds = [
            MaskPrediction(token=row["token"], probability=float(row["probability"]))
            for row in body["predictions"]
        ]
    except (ValueError, KeyError, TypeError) as exc:
        raise FillerProtocolError(f"malformed filler response: {exc}") from exc
    validate_predictions(preds, k)
    return preds


@dataclass(frozen=True)
class HttpLMFiller:
    endpoint: str
    retries: int = 2
    timeout: float = 5.0
    backoff: float = 0.1

    def fill(self, prompt: str, source: Instance, k: int) -> list[MaskPrediction]:
        return http_lm_fill(
            prompt, k, self.endpoint, self.retries, self.timeout, self.backoff
        )


def build_filler(
    spec: MaskFillerSpec,
    corpus: Sequence[Dataset] = (),
    labels: LabelSpace | None = None,
) -> MaskFiller:
    if spec.kind == "http_lm":
        if not spec.endpoint:
            raise ValueError("http_lm filler needs an endpoint")
        return HttpLMFiller(spec.endpoint, spec.retries, spec.timeout)
    if labels is None or not corpus:
        raise ValueError("corpus_stats filler needs a labeled corpus and label space")
    return CorpusStatsFiller.from_datasets(corpus, labels, spec.lexicon_size)


def render_rule_text(
    mask_vocabulary: frozenset[str] | set[str],
    label_display: str,
    entity_constraint: tuple[str, str] | None = None,
) -> str:
    vocab = " | ".join(sorted(mask_vocabulary))
    gate = (
        f"entity_pair == ({entity_constraint[0]}, {entity_constraint[1]}) and "
        if entity_constraint
        else ""
    )
    return f"{gate}[MASK] in {{{vocab}}} -> {label_display}"


def assemble_candidates(
    large_error_instances: Sequence[Instance],
    template: RuleTemplate,
    filler: MaskFiller,
    k: int,
    per_instance: int,
    iteration: int,
    labels: LabelSpace | None = None,
) -> list[Rule]:
    """Turn each large-error instance into ``per_instance`` singleton candidate rules.

    Exact duplicates in (template, vocabulary, entity constraint, label) are
    dropped, keeping the earliest, so the result never exceeds
    ``len(instances) * per_instance``.
    """
    if per_instance < 1 or per_instance > k:
        raise ValueError(f"per_instance must be in 1..k, got {per_instance} (k={k})")
    candidates: list[Rule] = []
    seen: set[tuple] = set()
    for inst in large_error_instances:
        if inst.gold_label is None:
            raise ValueError(f"instance {inst.id} has no gold label to seed a rule")
        prompt = render_prompt(template, inst)
        preds = filler.fill(prompt, inst, k)
        constraint = None
        if template.task_kind == "relation" and inst.entity_pair is not None:
            constraint = (inst.entity_pair.head_type, inst.entity_pair.tail_type)
        display = labels.name_of(inst.gold_label) if labels else str(inst.gold_label)
        for pred in preds[:per_instance]:
            vocab = frozenset({pred.token})
            key = (template.id, vocab, constraint, inst.gold_label)
            if key in seen:
                continue
            seen.add(key)
            candidates.append(
                Rule(
                    id=f"r{iteration}-{inst.id}-{pred.token}",
                    template_id=template.id,
                    mask_vocabulary=vocab,
                    entity_constraint=constraint,
                    label=inst.gold_label,
                    source_instance_id=inst.id,
                    iteration=iteration,
                    status="candidate",
                    rule_text=render_rule_text(vocab, display, constraint),
                )
            )
    return candidates


def derive_seed(*parts: object) -> int:
    """Stable sub-seed from heterogeneous parts (reproducible across processes)."""
    return stable_hash(":".join(str(p) for p in parts))
