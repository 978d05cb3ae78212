"""The iterative loop: large errors -> candidate rules -> annotation -> matching
-> weak-model training -> self-training -> ensembling.

Every iteration is checkpointed to disk and the whole run is resumable:
per-iteration seeds are derived from the global seed, so a resumed run
produces reports identical to an uninterrupted one.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal, Sequence

import yaml

from . import annotation as ann
from .boosting import (
    BoostState,
    boost_state_from_json,
    boost_state_to_json,
    init_weights,
    model_coefficient,
    top_n_large_error,
    update_weights,
    weighted_error,
)
from .data import (
    Dataset,
    LabelSpace,
    Rule,
    WeakLabelRecord,
    load_dataset,
    load_rules,
    rule_from_json,
    rule_to_json,
    save_rules,
    validate_dataset,
)
from .ensemble import (
    EnsembleModel,
    add_member,
    ensemble_predict_batch,
)
from .learner import (
    TrainConfig,
    WeakModel,
    model_from_json,
    model_to_json,
    predict_labels,
    self_train,
    to_design_matrix,
    train_ce,
)
from .matching import MatchConfig, RuleMatcher
from .rulegen import (
    MaskFillerSpec,
    RuleTemplate,
    assemble_candidates,
    build_filler,
    derive_seed,
    load_templates,
    render_prompt,
)

AnnotatorSource = Literal["scripted", "http_sessions"]


class SessionTimeout(Exception):
    """The annotation stage did not reach quorum within the configured window."""


@dataclass(frozen=True)
class HttpConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    session_timeout: float = 3600.0


@dataclass(frozen=True)
class EvalConfig:
    metric: Literal["accuracy", "micro_f1_excluding_class"] = "accuracy"
    null_class: int | None = None


@dataclass(frozen=True)
class PipelineConfig:
    class_names: tuple[str, ...]
    clean_path: str
    unlabeled_path: str
    dev_path: str
    checkpoint_dir: str
    templates_path: str
    initial_rules_path: str
    test_path: str | None = None
    template_id: str | None = None
    iterations: int = 10
    top_n: int = 10
    candidates_per_instance: int = 10
    budget: int = 100
    annotators: int = 3
    feature_space: int = 4096
    seed: int = 0
    ensemble_mode: Literal["alpha_weighted", "equal_weighted"] = "equal_weighted"
    use_ensemble_for_weights: bool = False
    include_clean_in_train: bool = False
    self_training: bool = True
    self_train_pool: Literal["all_unlabeled", "unmatched"] = "all_unlabeled"
    quorum: int | None = None
    match: MatchConfig = field(default_factory=MatchConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    filler: MaskFillerSpec = field(default_factory=MaskFillerSpec)
    annotator_spec: ann.ScriptedAnnotatorSpec = field(
        default_factory=ann.ScriptedAnnotatorSpec
    )
    http: HttpConfig = field(default_factory=HttpConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.top_n < 1 or self.candidates_per_instance < 1:
            raise ValueError("top_n and candidates_per_instance must be >= 1")
        if self.top_n * self.candidates_per_instance > self.budget:
            raise ValueError(
                f"top_n * candidates_per_instance = "
                f"{self.top_n * self.candidates_per_instance} exceeds budget {self.budget}"
            )
        if self.annotators < 1:
            raise ValueError("need at least 1 annotator")


def load_config(path: str | Path) -> PipelineConfig:
    """Read the YAML config; relative paths resolve against the file's directory."""
    path = Path(path)
    raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    base = path.parent

    def resolve(p: str | None) -> str | None:
        if p is None:
            return None
        candidate = Path(p)
        return str(candidate if candidate.is_absolute() else base / candidate)

    datasets = raw.get("datasets", {})
    annotator = raw.get("annotator", {})
    http = raw.get("http", {})
    evaluation = raw.get("evaluation", {})
    return PipelineConfig(
        class_names=tuple(raw["class_names"]),
        clean_path=resolve(datasets["clean"]),
        unlabeled_path=resolve(datasets["unlabeled"]),
        dev_path=resolve(datasets["dev"]),
        test_path=resolve(datasets.get("test")),
        checkpoint_dir=resolve(raw["checkpoint_dir"]),
        templates_path=resolve(raw["templates"]),
        initial_rules_path=resolve(raw["initial_rules"]),
        template_id=raw.get("template_id"),
        iterations=raw.get("iterations", 10),
        top_n=raw.get("top_n", 10),
        candidates_per_instance=raw.get("candidates_per_instance", 10),
        budget=raw.get("budget", 100),
        annotators=raw.get("annotators", 3),
        feature_space=raw.get("feature_space", 4096),
        seed=raw.get("seed", 0),
        ensemble_mode=raw.get("ensemble_mode", "equal_weighted"),
        use_ensemble_for_weights=raw.get("use_ensemble_for_weights", False),
        include_clean_in_train=raw.get("include_clean_in_train", False),
        self_training=raw.get("self_training", True),
        self_train_pool=raw.get("self_train_pool", "all_unlabeled"),
        quorum=raw.get("quorum"),
        match=MatchConfig(**raw.get("match", {})),
        train=TrainConfig(**raw.get("train", {})),
        filler=MaskFillerSpec(**raw.get("filler", {})),
        annotator_spec=ann.ScriptedAnnotatorSpec(**annotator),
        http=HttpConfig(**http),
        evaluation=EvalConfig(**evaluation),
    )


@dataclass(frozen=True)
class IterationReport:
    iteration: int
    err_t: float
    alpha_t: float
    rules_proposed: int
    rules_accepted: int
    accepted_total: int
    coverage: float
    rule_accuracy: float | None
    ensemble_accuracy_dev: float
    ensemble_accuracy_test: float | None
    kappa: dict | None
    wall_time: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError(f"coverage {self.coverage} outside [0,1]")

    def to_json(self) -> dict:
        return {
            "iteration": self.iteration,
            "err_t": self.err_t,
            "alpha_t": self.alpha_t,
            "rules_proposed": self.rules_proposed,
            "rules_accepted": self.rules_accepted,
            "accepted_total": self.accepted_total,
            "coverage": self.coverage,
            "rule_accuracy": self.rule_accuracy,
            "ensemble_accuracy_dev": self.ensemble_accuracy_dev,
            "ensemble_accuracy_test": self.ensemble_accuracy_test,
            "kappa": self.kappa,
            "wall_time": self.wall_time,
        }


def report_from_json(row: dict) -> IterationReport:
    return IterationReport(**row)


def evaluate(
    ensemble: EnsembleModel,
    test: Dataset,
    metric: str = "accuracy",
    null_class: int | None = None,
) -> float:
    """Accuracy, or micro-F1 that gives no credit to a designated null class."""
    if not test.instances:
        raise ValueError("empty test set")
    x = to_design_matrix(test.instances, ensemble.members[0].n_features)
    preds = ensemble_predict_batch(ensemble, x)
    gold = [inst.gold_label for inst in test.instances]
    if any(g is None for g in gold):
        raise ValueError("test set must be fully labeled")
    if metric == "accuracy":
        return sum(p == g for p, g in zip(preds, gold)) / len(gold)
    if metric == "micro_f1_excluding_class":
        if null_class is None:
            raise ValueError("micro_f1_excluding_class needs a null class id")
        pred_pos = sum(p != null_class for p in preds)
        gold_pos = sum(g != null_class for g in gold)
        correct = sum(
            p == g for p, g in zip(preds, gold) if p != null_class and g != null_class
        )
        precision = correct / pred_pos if pred_pos else 0.0
        recall = correct / gold_pos if gold_pos else 0.0
        if precision + recall == 0.0:
            return 0.0
        return 2 * precision * recall / (precision + recall)
    raise ValueError(f"unknown metric {metric!r}")


@dataclass
class _Context:
    """Loaded, validated inputs shared across iterations."""

    config: PipelineConfig
    labels: LabelSpace
    clean: Dataset
    unlabeled: Dataset
    dev: Dataset
    test: Dataset | None
    template: RuleTemplate
    matcher: RuleMatcher
    initial_rules: list[Rule]
    annotator_ids: tuple[str, ...]
    x_clean: object = None
    x_dev: object = None
    x_test: object = None

    def __post_init__(self) -> None:
        fs = self.config.feature_space
        self.x_clean = to_design_matrix(self.clean.instances, fs)
        self.x_dev = to_design_matrix(self.dev.instances, fs)
        if self.test is not None:
            self.x_test = to_design_matrix(self.test.instances, fs)


def load_context(config: PipelineConfig) -> _Context:
    labels = LabelSpace(config.class_names)
    clean = load_dataset(config.clean_path, "clean_labeled", config.feature_space)
    unlabeled = load_dataset(config.unlabeled_path, "unlabeled", config.feature_space)
    dev = load_dataset(config.dev_path, "dev", config.feature_space)
    test = (
        load_dataset(config.test_path, "dev", config.feature_space)
        if config.test_path
        else None
    )
    for name, ds in (("clean", clean), ("unlabeled", unlabeled), ("dev", dev)):
        problems = validate_dataset(ds, labels)
        if problems:
            raise ValueError(f"{name} dataset invalid: {problems[:5]}")
    templates = load_templates(config.templates_path)
    if config.template_id:
        matches = [t for t in templates if t.id == config.template_id]
        if not matches:
            raise ValueError(f"template {config.template_id!r} not in template file")
        template = matches[0]
    else:
        template = templates[0]
    initial_rules = load_rules(config.initial_rules_path)
    for rule in initial_rules:
        if rule.status != "accepted":
            raise ValueError(f"initial rule {rule.id} must be accepted")
    filler = build_filler(config.filler, corpus=[clean], labels=labels)
    matcher = RuleMatcher(config.match, filler, template)
    annotator_ids = tuple(f"a{i + 1}" for i in range(config.annotators))
    return _Context(
        config=config,
        labels=labels,
        clean=clean,
        unlabeled=unlabeled,
        dev=dev,
        test=test,
        template=template,
        matcher=matcher,
        initial_rules=initial_rules,
        annotator_ids=annotator_ids,
    )


def _clean_gold(ctx: _Context) -> list[int]:
    return [inst.gold_label for inst in ctx.clean.instances]


def _merge_clean(weak: Dataset, clean: Dataset) -> Dataset:
    """Optionally fold the clean set into training data as perfect-score records."""
    records = dict(weak.records)
    extra = []
    for inst in clean.instances:
        if inst.id in records:
            continue
        extra.append(inst)
        records[inst.id] = WeakLabelRecord(
            instance_id=inst.id,
            label=inst.gold_label,
            rule_id="clean",
            matching_score=1.0,
            iteration=0,
        )
    return Dataset(weak.instances + tuple(extra), "weak_labeled", records)


def _dev_accuracy(ctx: _Context, model: WeakModel) -> float:
    preds = predict_labels(model, ctx.x_dev)
    gold = [inst.gold_label for inst in ctx.dev.instances]
    return sum(p == g for p, g in zip(preds, gold)) / len(gold)


def _ensemble_metrics(ctx: _Context, ensemble: EnsembleModel) -> tuple[float, float | None]:
    dev_preds = ensemble_predict_batch(ensemble, ctx.x_dev)
    dev_gold = [inst.gold_label for inst in ctx.dev.instances]
    dev_acc = sum(p == g for p, g in zip(dev_preds, dev_gold)) / len(dev_gold)
    test_metric = None
    if ctx.test is not None:
        test_metric = evaluate(
            ensemble,
            ctx.test,
            ctx.config.evaluation.metric,
            ctx.config.evaluation.null_class,
        )
    return dev_acc, test_metric


def _iteration_seed(config: PipelineConfig, iteration: int) -> int:
    return derive_seed(config.seed, "train", iteration)


def _train_model(ctx: _Context, weak: Dataset, iteration: int) -> WeakModel:
    cfg = ctx.config
    train_cfg = replace(cfg.train, seed=_iteration_seed(cfg, iteration))
    data = _merge_clean(weak, ctx.clean) if cfg.include_clean_in_train else weak
    model = train_ce(data, train_cfg, ctx.labels)
    if cfg.self_training and iteration > 0:
        if cfg.self_train_pool == "all_unlabeled":
            # Pseudo-labels over the whole unlabeled pool keep the class-mass
            # correction anchored to the full distribution; a skewed
            # unmatched-only pool can tilt it against its own majority class.
            pool = ctx.unlabeled
        else:
            pool = Dataset(
                tuple(i for i in ctx.unlabeled.instances if i.id not in weak.records),
                "unlabeled",
            )
        model = self_train(model, pool, train_cfg)
    return model


def _finish_model(
    ctx: _Context, model: WeakModel, boost: BoostState, iteration: int
) -> WeakModel:
    preds = predict_labels(model, ctx.x_clean)
    err = weighted_error(boost, preds, _clean_gold(ctx))
    alpha = model_coefficient(err, ctx.labels.k)
    return replace(model, err_t=err, alpha_t=alpha, iteration=iteration)


class CheckpointStore:
    """Per-iteration JSON checkpoints plus cumulative rules and reports."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.iter_dir = self.root / "checkpoints"
        self.ensemble_path = self.iter_dir / "ensemble.json"
        self.rules_path = self.root / "rules" / "accepted.json"
        self.reports_path = self.root / "reports" / "iterations.jsonl"

    def reset(self) -> None:
        for path in sorted(self.iter_dir.glob("iter_*.json")):
            path.unlink()
        for path in (self.rules_path, self.reports_path, self.ensemble_path):
            if path.exists():
                path.unlink()

    def prune_from(self, iteration: int) -> None:
        """Drop checkpoints at or beyond ``iteration`` (stale after a shorter rerun)."""
        for t in self.completed_iterations():
            if t >= iteration:
                (self.iter_dir / f"iter_{t:03d}.json").unlink()

    def completed_iterations(self) -> list[int]:
        return sorted(
            int(p.stem.split("_")[1]) for p in self.iter_dir.glob("iter_*.json")
        )

    def write_iteration(
        self,
        iteration: int,
        boost: BoostState,
        model: WeakModel,
        voting: bool,
        accepted_new: Sequence[Rule],
        session: ann.AnnotationSession | None,
        report: IterationReport,
        accepted_all: Sequence[Rule],
        reports: Sequence[IterationReport],
        mode: str = "equal_weighted",
    ) -> None:
        self.iter_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "iteration": iteration,
            "boost": boost_state_to_json(boost),
            "model": model_to_json(model),
            "voting": voting,
            "accepted_new": [rule_to_json(r) for r in accepted_new],
            "session": ann.session_to_json(session) if session else None,
            "report": report.to_json(),
        }
        path = self.iter_dir / f"iter_{iteration:03d}.json"
        path.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
        save_rules(list(accepted_all), self.rules_path)
        self.reports_path.parent.mkdir(parents=True, exist_ok=True)
        with self.reports_path.open("w", encoding="utf-8") as fh:
            for rep in reports:
                fh.write(json.dumps(rep.to_json(), sort_keys=True) + "\n")
        self._write_ensemble_manifest(mode)

    def _write_ensemble_manifest(self, mode: str) -> None:
        members = [
            {
                "checkpoint": f"iter_{t:03d}.json",
                "voting": self.load_iteration(t)["voting"],
            }
            for t in self.completed_iterations()
        ]
        self.ensemble_path.write_text(
            json.dumps({"mode": mode, "members": members}, sort_keys=True),
            encoding="utf-8",
        )

    def load_iteration(self, iteration: int) -> dict:
        path = self.iter_dir / f"iter_{iteration:03d}.json"
        return json.loads(path.read_text(encoding="utf-8"))


@dataclass
class _RunState:
    boost: BoostState
    ensemble: EnsembleModel
    accepted: list[Rule]
    reports: list[IterationReport]
    next_iteration: int


def _iteration_zero(ctx: _Context, store: CheckpointStore) -> _RunState:
    cfg = ctx.config
    start = time.perf_counter()
    weak0, coverage, rule_acc = ctx.matcher.apply_rules(
        ctx.unlabeled, ctx.initial_rules, iteration=0
    )
    if not weak0.instances:
        raise ValueError("initial rules match nothing; cannot bootstrap a model")
    model = _train_model(ctx, weak0, 0)
    boost = init_weights(len(ctx.clean.instances))
    model = _finish_model(ctx, model, boost, 0)
    dev_acc_model = _dev_accuracy(ctx, model)
    ensemble = add_member(
        EnsembleModel(mode=cfg.ensemble_mode), model, dev_acc_model, ctx.labels.k
    )
    dev_acc, test_acc = _ensemble_metrics(ctx, ensemble)
    report = IterationReport(
        iteration=0,
        err_t=model.err_t,
        alpha_t=model.alpha_t,
        rules_proposed=0,
        rules_accepted=0,
        accepted_total=len(ctx.initial_rules),
        coverage=coverage,
        rule_accuracy=rule_acc,
        ensemble_accuracy_dev=dev_acc,
        ensemble_accuracy_test=test_acc,
        kappa=None,
        wall_time=time.perf_counter() - start,
    )
    state = _RunState(
        boost=boost,
        ensemble=ensemble,
        accepted=list(ctx.initial_rules),
        reports=[report],
        next_iteration=1,
    )
    store.write_iteration(
        0,
        boost,
        model,
        ensemble.voting[-1],
        [],
        None,
        report,
        state.accepted,
        state.reports,
        mode=cfg.ensemble_mode,
    )
    return state


def candidate_payloads(
    ctx: _Context, session: ann.AnnotationSession
) -> dict[str, dict]:
    """What an annotation client sees for each candidate rule."""
    payloads = {}
    for rule in session.rules:
        source = ctx.clean.by_id(rule.source_instance_id)
        payloads[rule.id] = {
            "rule_id": rule.id,
            "rule_text": rule.rule_text,
            "prompt": render_prompt(ctx.template, source),
            "source_text": source.text,
            "label_name": ctx.labels.name_of(rule.label),
            "iteration": rule.iteration,
        }
    return payloads


def _novel_candidates(
    candidates: list[Rule], accepted: Sequence[Rule]
) -> list[Rule]:
    """Drop candidates whose token is already inside an accepted rule's
    vocabulary for the same (template, entity constraint, label); the budget
    should buy rules that complement the current set, not repeats of it."""
    covered: set[tuple] = set()
    for rule in accepted:
        for tok in rule.mask_vocabulary:
            covered.add((rule.template_id, tok, rule.entity_constraint, rule.label))
    out = []
    for cand in candidates:
        keys = {
            (cand.template_id, tok, cand.entity_constraint, cand.label)
            for tok in cand.mask_vocabulary
        }
        if keys & covered:
            continue
        out.append(cand)
    return out


def _annotate(
    ctx: _Context,
    session: ann.AnnotationSession,
    annotator_source: AnnotatorSource,
    hub,
) -> ann.AnnotationSession:
    cfg = ctx.config
    if annotator_source == "scripted":
        return ann.scripted_annotate(
            session,
            cfg.annotator_spec,
            eval_pool=ctx.dev,
            cfg=cfg.match,
            filler=ctx.matcher.filler,
            template=ctx.template,
        )
    if hub is None:
        raise ValueError("http_sessions annotation needs a session hub")
    hub.publish(session, candidate_payloads(ctx, session), cfg.quorum)
    done = hub.wait_complete(cfg.http.session_timeout)
    hub.clear_session()
    return done


def _run_iteration(
    ctx: _Context,
    state: _RunState,
    iteration: int,
    store: CheckpointStore,
    annotator_source: AnnotatorSource,
    hub,
) -> None:
    cfg = ctx.config
    start = time.perf_counter()
    newest = state.ensemble.members[-1]
    gold = _clean_gold(ctx)
    newest_preds = predict_labels(newest, ctx.x_clean)
    ens_preds = ensemble_predict_batch(state.ensemble, ctx.x_clean)
    indicator = ens_preds if cfg.use_ensemble_for_weights else newest_preds
    state.boost = update_weights(state.boost, newest.alpha_t, indicator, gold)
    hard = top_n_large_error(state.boost, ctx.clean, ens_preds, cfg.top_n)
    candidates = assemble_candidates(
        hard,
        ctx.template,
        ctx.matcher.filler,
        k=cfg.match.k,
        per_instance=cfg.candidates_per_instance,
        iteration=iteration,
        labels=ctx.labels,
    )
    candidates = _novel_candidates(candidates, state.accepted)[: cfg.budget]
    session = ann.open_session(candidates, ctx.annotator_ids, iteration, k=cfg.match.k)
    session = _annotate(ctx, session, annotator_source, hub)
    session, accepted_new = ann.close_and_vote(session, cfg.quorum, ctx.labels)
    kappa = None
    if len(ctx.annotator_ids) >= 2 and session.rules:
        p_bar, p_e, k_val = ann.fleiss_kappa(ann.decision_matrix(session))
        kappa = {"p_bar": p_bar, "p_e": p_e, "kappa": k_val}
        if hub is not None:
            hub.add_agreement({"iteration": iteration, **kappa})
    state.accepted.extend(accepted_new)
    weak, coverage, rule_acc = ctx.matcher.apply_rules(
        ctx.unlabeled, state.accepted, iteration=iteration
    )
    model = _train_model(ctx, weak, iteration)
    model = _finish_model(ctx, model, state.boost, iteration)
    dev_acc_model = _dev_accuracy(ctx, model)
    state.ensemble = add_member(state.ensemble, model, dev_acc_model, ctx.labels.k)
    dev_acc, test_acc = _ensemble_metrics(ctx, state.ensemble)
    report = IterationReport(
        iteration=iteration,
        err_t=model.err_t,
        alpha_t=model.alpha_t,
        rules_proposed=len(candidates),
        rules_accepted=len(accepted_new),
        accepted_total=len(state.accepted),
        coverage=coverage,
        rule_accuracy=rule_acc,
        ensemble_accuracy_dev=dev_acc,
        ensemble_accuracy_test=test_acc,
        kappa=kappa,
        wall_time=time.perf_counter() - start,
    )
    state.reports.append(report)
    state.next_iteration = iteration + 1
    store.write_iteration(
        iteration,
        state.boost,
        model,
        state.ensemble.voting[-1],
        accepted_new,
        session,
        report,
        state.accepted,
        state.reports,
        mode=cfg.ensemble_mode,
    )


def _restore(ctx: _Context, store: CheckpointStore) -> _RunState | None:
    done = store.completed_iterations()
    if not done or done[0] != 0:
        return None
    members: list[WeakModel] = []
    voting: list[bool] = []
    accepted = list(ctx.initial_rules)
    reports: list[IterationReport] = []
    boost: BoostState | None = None
    last = -1
    for t in done:
        if t != last + 1 or t > ctx.config.iterations:
            break  # hole in the sequence or beyond the configured horizon
        payload = store.load_iteration(t)
        members.append(model_from_json(payload["model"]))
        voting.append(payload["voting"])
        accepted.extend(rule_from_json(r) for r in payload["accepted_new"])
        reports.append(report_from_json(payload["report"]))
        boost = boost_state_from_json(payload["boost"])
        last = t
    ensemble = EnsembleModel(
        members=tuple(members), mode=ctx.config.ensemble_mode, voting=tuple(voting)
    )
    return _RunState(
        boost=boost,
        ensemble=ensemble,
        accepted=accepted,
        reports=reports,
        next_iteration=last + 1,
    )


def run(
    config: PipelineConfig,
    annotator_source: AnnotatorSource = "scripted",
    hub=None,
    resume: bool = False,
) -> list[IterationReport]:
    """Execute the full loop; returns one report per completed iteration.

    With ``resume=True``, completed iterations found under the checkpoint
    directory are reloaded instead of recomputed.
    """
    ctx = load_context(config)
    store = CheckpointStore(config.checkpoint_dir)
    state = _restore(ctx, store) if resume else None
    if state is None:
        store.reset()
        state = _iteration_zero(ctx, store)
    else:
        store.prune_from(state.next_iteration)
    if hub is not None:
        hub.set_reports([r.to_json() for r in state.reports])
        for rep in state.reports:
            if rep.kappa:
                hub.add_agreement({"iteration": rep.iteration, **rep.kappa})
    for t in range(state.next_iteration, config.iterations + 1):
        _run_iteration(ctx, state, t, store, annotator_source, hub)
        if hub is not None:
            hub.set_reports([r.to_json() for r in state.reports])
    if hub is not None:
        hub.mark_finished()
    return state.reports


def load_ensemble(config: PipelineConfig) -> EnsembleModel:
    """Rebuild the ensemble from the checkpoint manifest on disk."""
    store = CheckpointStore(config.checkpoint_dir)
    if store.ensemble_path.exists():
        manifest = json.loads(store.ensemble_path.read_text(encoding="utf-8"))
        members = []
        voting = []
        for ref in manifest["members"]:
            payload = json.loads(
                (store.iter_dir / ref["checkpoint"]).read_text(encoding="utf-8")
            )
            members.append(model_from_json(payload["model"]))
            voting.append(ref["voting"])
        return EnsembleModel(
            members=tuple(members),
            mode=manifest.get("mode", config.ensemble_mode),
            voting=tuple(voting),
        )
    done = store.completed_iterations()
    if not done:
        raise ValueError(f"no checkpoints under {config.checkpoint_dir}")
    members = []
    voting = []
    for t in done:
        payload = store.load_iteration(t)
        members.append(model_from_json(payload["model"]))
        voting.append(payload["voting"])
    return EnsembleModel(
        members=tuple(members), mode=config.ensemble_mode, voting=tuple(voting)
    )


def load_reports(config: PipelineConfig) -> list[IterationReport]:
    store = CheckpointStore(config.checkpoint_dir)
    if not store.reports_path.exists():
        return []
    reports = []
    for line in store.reports_path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            reports.append(report_from_json(json.loads(line)))
    return reports
