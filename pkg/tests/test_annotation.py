import itertools
import random

import numpy as np
import pytest

from ruleboost.annotation import (
    ScriptedAnnotatorSpec,
    close_and_vote,
    decision_matrix,
    fleiss_kappa,
    kappa_from_agreement,
    open_session,
    record_decision,
    rule_precision,
    scripted_annotate,
    session_from_json,
    session_to_json,
)
from ruleboost.data import Dataset, LabelSpace, Rule, make_instance
from ruleboost.matching import MatchConfig
from ruleboost.rulegen import MaskPrediction

SPACE = 64
LS = LabelSpace(("ham", "spam"))


def _candidate(rid, token="tok", label=1, source="s0"):
    return Rule(
        id=rid,
        template_id="t",
        mask_vocabulary=frozenset({token}),
        label=label,
        source_instance_id=source,
        iteration=1,
        status="candidate",
    )


def _session(n_rules=3, annotators=("a1", "a2", "a3"), **kw):
    rules = [_candidate(f"r{i}", token=f"tok{i}") for i in range(n_rules)]
    return open_session(rules, annotators, iteration=1, **kw)


def test_open_session_expected_decisions():
    rules = [_candidate(f"r{i}", token=f"tok{i}") for i in range(100)]
    s = open_session(rules, ["a1", "a2", "a3"], iteration=1)
    assert s.expected() == 300
    assert s.decided() == 0


def test_open_session_minimal():
    s = open_session([_candidate("r0")], ["solo"], iteration=0)
    assert s.expected() == 1


def test_open_session_rejects_non_candidates():
    done = Rule("r", "t", frozenset({"x"}), 1, "s", 0, status="accepted")
    with pytest.raises(ValueError, match="already accepted"):
        open_session([done], ["a1"], iteration=1)


def test_record_decision_stores_once():
    s = _session()
    s = record_decision(s, "r0", "a1", "accept", latency_ms=812.0)
    assert s.decisions[("r0", "a1")] == "accept"
    assert s.latencies[("r0", "a1")] == 812.0
    with pytest.raises(ValueError, match="already decided"):
        record_decision(s, "r0", "a1", "reject")


def test_record_decision_unknown_ids():
    s = _session()
    with pytest.raises(KeyError):
        record_decision(s, "nope", "a1", "accept")
    with pytest.raises(KeyError):
        record_decision(s, "r0", "nobody", "accept")


def test_record_decision_on_closed_session():
    s = _session(n_rules=1, annotators=("a1",))
    s = record_decision(s, "r0", "a1", "accept")
    closed, _ = close_and_vote(s)
    with pytest.raises(ValueError, match="closed"):
        record_decision(closed, "r0", "a1", "reject")


def _decide_all(s, decide):
    for rule in s.rules:
        for a in s.annotators:
            s = record_decision(s, rule.id, a, decide(rule.id, a))
    return s


def test_close_and_vote_strict_majority():
    s = _session(n_rules=1)
    votes = {"a1": "accept", "a2": "accept", "a3": "reject"}
    s = _decide_all(s, lambda r, a: votes[a])
    closed, accepted = close_and_vote(s)
    assert closed.state == "closed"
    assert [r.id for r in accepted] == ["r0"]
    assert accepted[0].status == "accepted"


def test_close_and_vote_tie_rejects():
    s = _session(n_rules=1, annotators=("a1", "a2"))
    s = record_decision(s, "r0", "a1", "accept")
    s = record_decision(s, "r0", "a2", "reject")
    _, accepted = close_and_vote(s)
    assert accepted == []


def test_close_and_vote_quorum_unmet_lists_missing():
    s = _session(n_rules=2)
    s = record_decision(s, "r0", "a1", "accept")
    with pytest.raises(ValueError, match="missing decisions"):
        close_and_vote(s)


def test_close_and_vote_merges_same_source_rules():
    rules = [
        _candidate("r0", token="alpha", label=2, source="s7"),
        _candidate("r1", token="beta", label=2, source="s7"),
        _candidate("r2", token="gamma", label=2, source="s7"),
    ]
    s = open_session(rules, ["a1"], iteration=1, k=10)
    s = _decide_all(s, lambda r, a: "accept")
    _, accepted = close_and_vote(s, labels=LS)
    assert len(accepted) == 1
    assert accepted[0].mask_vocabulary == frozenset({"alpha", "beta", "gamma"})
    assert "spam" in accepted[0].rule_text


def test_close_and_vote_merge_caps_vocabulary_at_k():
    rules = [
        _candidate(f"r{i}", token=f"tok{i:02d}", label=1, source="s1") for i in range(6)
    ]
    s = open_session(rules, ["a1"], iteration=1, k=4)
    s = _decide_all(s, lambda r, a: "accept")
    _, accepted = close_and_vote(s)
    assert len(accepted) == 1
    assert len(accepted[0].mask_vocabulary) == 4
    # Earliest rule ids contribute first.
    assert accepted[0].mask_vocabulary == frozenset({"tok00", "tok01", "tok02", "tok03"})


def test_close_and_vote_order_independent():
    votes = {
        ("r0", "a1"): "accept", ("r0", "a2"): "accept", ("r0", "a3"): "reject",
        ("r1", "a1"): "reject", ("r1", "a2"): "reject", ("r1", "a3"): "accept",
        ("r2", "a1"): "accept", ("r2", "a2"): "accept", ("r2", "a3"): "accept",
    }
    outcomes = set()
    pairs = list(votes)
    for perm in itertools.islice(itertools.permutations(pairs), 0, 24, 6):
        s = _session(n_rules=3)
        for rid, a in perm:
            s = record_decision(s, rid, a, votes[(rid, a)])
        _, accepted = close_and_vote(s)
        outcomes.add(
            tuple((r.id, tuple(sorted(r.mask_vocabulary))) for r in accepted)
        )
    # r0 and r2 share a source instance and label, so they merge under r0's id.
    assert outcomes == {(("r0", ("tok0", "tok2")),)}


def test_close_and_vote_respects_quorum_parameter():
    s = _session(n_rules=1, annotators=("a1", "a2", "a3"))
    s = record_decision(s, "r0", "a1", "accept")
    s = record_decision(s, "r0", "a2", "accept")
    _, accepted = close_and_vote(s, quorum=2)
    assert [r.id for r in accepted] == ["r0"]


# --- Fleiss' kappa -------------------------------------------------------------


def test_fleiss_complete_agreement():
    matrix = np.array([[3, 0], [0, 3], [3, 0]])
    p_bar, p_e, kappa = fleiss_kappa(matrix)
    assert p_bar == 1.0
    assert kappa == 1.0


def test_kappa_from_overall_agreement_row():
    # (0.90 - 0.65) / (1 - 0.65) = 5/7
    assert kappa_from_agreement(0.90, 0.65) == pytest.approx(5 / 7, abs=1e-12)
    assert round(kappa_from_agreement(0.90, 0.65), 2) == 0.71


def test_kappa_from_high_agreement_row():
    # (0.90 - 0.59) / (1 - 0.59) = 31/41
    assert kappa_from_agreement(0.90, 0.59) == pytest.approx(31 / 41, abs=1e-12)


def test_fleiss_matches_direct_formula():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n_items, n_raters = rng.integers(2, 12), rng.integers(2, 6)
        accepts = rng.integers(0, n_raters + 1, size=n_items)
        matrix = np.stack([accepts, n_raters - accepts], axis=1)
        p_bar, p_e, kappa = fleiss_kappa(matrix)
        # Independent recomputation, scalar-by-scalar.
        p_is = [
            (a * a + r * r - n_raters) / (n_raters * (n_raters - 1))
            for a, r in matrix
        ]
        exp_p_bar = sum(p_is) / n_items
        pa = matrix[:, 0].sum() / (n_items * n_raters)
        exp_p_e = pa * pa + (1 - pa) * (1 - pa)
        assert p_bar == pytest.approx(exp_p_bar, abs=1e-12)
        assert p_e == pytest.approx(exp_p_e, abs=1e-12)
        if exp_p_e < 1:
            assert kappa == pytest.approx((exp_p_bar - exp_p_e) / (1 - exp_p_e), abs=1e-12)


def test_fleiss_invariant_under_category_swap():
    rng = np.random.default_rng(1)
    accepts = rng.integers(0, 4, size=8)
    matrix = np.stack([accepts, 3 - accepts], axis=1)
    swapped = matrix[:, ::-1]
    assert fleiss_kappa(matrix)[2] == pytest.approx(fleiss_kappa(swapped)[2], abs=1e-12)


def test_fleiss_bounds_and_perfect_agreement_condition():
    rng = np.random.default_rng(2)
    for _ in range(50):
        accepts = rng.integers(0, 4, size=6)
        matrix = np.stack([accepts, 3 - accepts], axis=1)
        p_bar, p_e, kappa = fleiss_kappa(matrix)
        assert -1.0 - 1e-9 <= kappa <= 1.0 + 1e-9
        assert (kappa == 1.0) == (p_bar == 1.0)


def test_fleiss_degenerate_agreement():
    matrix = np.array([[3, 0], [3, 0]])
    p_bar, p_e, kappa = fleiss_kappa(matrix)
    assert (p_bar, p_e, kappa) == (1.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="same number"):
        fleiss_kappa(np.array([[3, 0], [2, 0]]))


def test_fleiss_requires_two_raters():
    with pytest.raises(ValueError):
        fleiss_kappa(np.array([[1, 0], [0, 1]]))


# --- scripted annotators ---------------------------------------------------------


class PoolFiller:
    def fill(self, prompt, source, k):
        toks = sorted(set(source.tokens))[:k]
        return [MaskPrediction(t, 0.5 / (j + 1)) for j, t in enumerate(toks)]


def _pool():
    instances = [
        make_instance("p0", "alpha common", SPACE, 1),
        make_instance("p1", "alpha common", SPACE, 1),
        make_instance("p2", "beta common", SPACE, 2),
        make_instance("p3", "beta common", SPACE, 2),
    ]
    return Dataset(tuple(instances), "dev")


def test_scripted_accept_all():
    s = _session(n_rules=10, annotators=("a1",))
    out = scripted_annotate(s, ScriptedAnnotatorSpec(policy="accept_all"))
    assert out.decided() == 10
    assert all(d == "accept" for d in out.decisions.values())


def test_scripted_reject_all():
    s = _session(n_rules=4, annotators=("a1", "a2"))
    out = scripted_annotate(s, ScriptedAnnotatorSpec(policy="reject_all"))
    assert out.decided() == 8
    assert all(d == "reject" for d in out.decisions.values())


def test_oracle_accepts_precise_rule_and_rejects_wrong_one():
    pool = _pool()
    cfg = MatchConfig(alpha=0.0, sigma=0.2, k=2)
    good = _candidate("good", token="alpha", label=1)
    bad = _candidate("bad", token="alpha", label=2)  # matches class-1 docs, labels 2
    assert rule_precision(good, pool, cfg, PoolFiller()) == 1.0
    assert rule_precision(bad, pool, cfg, PoolFiller()) == 0.0
    s = open_session([good, bad], ["a1"], iteration=1)
    out = scripted_annotate(
        s, ScriptedAnnotatorSpec(policy="oracle"), pool, cfg, PoolFiller()
    )
    assert out.decisions[("good", "a1")] == "accept"
    assert out.decisions[("bad", "a1")] == "reject"


def test_oracle_rejects_rule_matching_nothing():
    pool = _pool()
    cfg = MatchConfig(alpha=0.0, sigma=0.2, k=2)
    phantom = _candidate("phantom", token="zzz", label=1)
    assert rule_precision(phantom, pool, cfg, PoolFiller()) == 0.0


def test_noisy_oracle_zero_flip_equals_oracle():
    pool = _pool()
    cfg = MatchConfig(alpha=0.0, sigma=0.2, k=2)
    rules = [
        _candidate("good", token="alpha", label=1),
        _candidate("bad", token="alpha", label=2),
    ]
    a = scripted_annotate(
        open_session(rules, ["a1", "a2"], 1),
        ScriptedAnnotatorSpec(policy="oracle"),
        pool, cfg, PoolFiller(),
    )
    b = scripted_annotate(
        open_session(rules, ["a1", "a2"], 1),
        ScriptedAnnotatorSpec(policy="noisy_oracle", p_flip=0.0),
        pool, cfg, PoolFiller(),
    )
    assert dict(a.decisions) == dict(b.decisions)


def test_noisy_oracle_deterministic_given_seed():
    pool = _pool()
    cfg = MatchConfig(alpha=0.0, sigma=0.2, k=2)
    rules = [_candidate(f"r{i}", token="alpha", label=1) for i in range(6)]
    spec = ScriptedAnnotatorSpec(policy="noisy_oracle", p_flip=0.4, seed=5)
    a = scripted_annotate(open_session(rules, ["a1", "a2"], 1), spec, pool, cfg, PoolFiller())
    b = scripted_annotate(open_session(rules, ["a1", "a2"], 1), spec, pool, cfg, PoolFiller())
    assert dict(a.decisions) == dict(b.decisions)


def test_oracle_requires_pool():
    s = _session(n_rules=1)
    with pytest.raises(ValueError, match="pool"):
        scripted_annotate(s, ScriptedAnnotatorSpec(policy="oracle"))


def test_session_json_roundtrip():
    s = _session(n_rules=2, annotators=("a1", "a2"))
    s = record_decision(s, "r0", "a1", "accept", latency_ms=101.5)
    s = record_decision(s, "r1", "a2", "reject")
    assert session_from_json(session_to_json(s)) == s


def test_decision_matrix_counts():
    s = _session(n_rules=2)
    votes = {
        ("r0", "a1"): "accept", ("r0", "a2"): "accept", ("r0", "a3"): "reject",
        ("r1", "a1"): "reject", ("r1", "a2"): "reject", ("r1", "a3"): "reject",
    }
    for (rid, a), d in votes.items():
        s = record_decision(s, rid, a, d)
    matrix = decision_matrix(s)
    assert matrix.tolist() == [[2, 1], [0, 3]]
