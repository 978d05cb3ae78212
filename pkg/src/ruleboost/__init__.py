"""Interactive weak supervision: boosted rule discovery, soft matching, ensembles."""

from .annotation import (
    AnnotationSession,
    ScriptedAnnotatorSpec,
    close_and_vote,
    decision_matrix,
    fleiss_kappa,
    kappa_from_agreement,
    open_session,
    record_decision,
    scripted_annotate,
)
from .boosting import (
    BoostState,
    init_weights,
    is_worse_than_chance,
    model_coefficient,
    top_n_large_error,
    update_weights,
    weighted_error,
)
from .data import (
    ABSTAIN,
    Dataset,
    EntityPair,
    Instance,
    LabelSpace,
    Rule,
    SparseVec,
    WeakLabelRecord,
    featurize,
    load_dataset,
    load_rules,
    make_instance,
    save_dataset,
    save_rules,
    tokenize,
    validate_dataset,
)
from .ensemble import (
    EnsembleModel,
    add_member,
    ensemble_predict,
    ensemble_proba,
)
from .learner import (
    TrainConfig,
    WeakModel,
    predict_proba,
    self_train,
    sharpen_pseudo_labels,
    train_ce,
)
from .matching import (
    MatchConfig,
    RuleMatcher,
    apply_rules,
    embedding_similarity,
    match_instance,
    matching_score,
    sweep_sigma,
    vocab_similarity,
)
from .pipeline import (
    IterationReport,
    PipelineConfig,
    evaluate,
    load_config,
    run,
)
from .rulegen import (
    CorpusStatsFiller,
    HttpLMFiller,
    MaskFillerSpec,
    MaskPrediction,
    RuleTemplate,
    assemble_candidates,
    corpus_stats_fill,
    http_lm_fill,
    render_prompt,
)
from .synthetic import SyntheticTask, make_synthetic_task, write_config, write_task

__version__ = "0.1.0"
