import json
import time

import pytest
import requests
import yaml

from ruleboost.pipeline import SessionTimeout, load_config
from ruleboost.service import AnnotationServer
from ruleboost.synthetic import make_synthetic_task, write_config, write_task


def _service_config(tmp_path, **overrides):
    task = make_synthetic_task(
        seed=3, n_clean=40, n_unlabeled=300, n_dev=40, n_test=100
    )
    write_task(task, tmp_path)
    settings = dict(
        checkpoint_dir=str(tmp_path / "run"),
        seed=3,
        iterations=1,
        top_n=2,
        candidates_per_instance=2,
        budget=4,
        annotators=1,
        train={
            "learning_rate": 0.5,
            "epochs": 6,
            "batch_size": 32,
            "l2": 1e-4,
            "self_train_epochs": 0,
            "seed": 3,
        },
        http={"host": "127.0.0.1", "port": 0, "session_timeout": 30.0},
    )
    settings.update(overrides)
    cfg_path = write_config(task, tmp_path, **settings)
    return load_config(cfg_path)


def _wait_for_session(base, timeout=20.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        body = requests.get(f"{base}/api/session", timeout=5).json()
        if body.get("active"):
            return body
        time.sleep(0.05)
    raise AssertionError("no session became active")


def test_service_round_trip(tmp_path):
    config = _service_config(tmp_path)
    server = AnnotationServer(config)
    server.start()
    base = f"http://127.0.0.1:{server.port}"
    try:
        summary = _wait_for_session(base)
        assert summary["annotators"] == ["a1"]
        n_candidates = summary["n_candidates"]
        assert 1 <= n_candidates <= 4

        progress = requests.get(f"{base}/api/session/progress", timeout=5).json()
        assert progress["decided"] == 0
        assert progress["expected"] == n_candidates

        # Annotate everything through the public API, accepting all.
        first_payload = None
        decided = 0
        while True:
            nxt = requests.get(
                f"{base}/api/session/next", params={"annotator": "a1"}, timeout=5
            ).json()
            if nxt.get("done"):
                break
            if first_payload is None:
                first_payload = nxt
            resp = requests.post(
                f"{base}/api/session/decision",
                json={
                    "rule_id": nxt["rule_id"],
                    "annotator": "a1",
                    "decision": "accept",
                    "latency_ms": 42.0,
                },
                timeout=5,
            )
            assert resp.status_code == 200
            decided += 1
            if decided == 1:
                # A duplicate decision while the session is open is a conflict.
                dup = requests.post(
                    f"{base}/api/session/decision",
                    json={
                        "rule_id": nxt["rule_id"],
                        "annotator": "a1",
                        "decision": "reject",
                    },
                    timeout=5,
                )
                assert dup.status_code == 409
        assert decided == n_candidates
        assert {"rule_id", "rule_text", "prompt", "source_text", "label_name"} <= set(
            first_payload
        )
        assert "[MASK]" in first_payload["prompt"]

        reports = server.join()
        assert len(reports) == 2
    finally:
        server.stop()
    # After shutdown the endpoints are gone; the in-process result stands.
    assert reports[1].rules_proposed == decided


def test_service_error_statuses(tmp_path):
    config = _service_config(tmp_path)
    server = AnnotationServer(config)
    server.start()
    base = f"http://127.0.0.1:{server.port}"
    try:
        _wait_for_session(base)
        unknown_rule = requests.post(
            f"{base}/api/session/decision",
            json={"rule_id": "nope", "annotator": "a1", "decision": "accept"},
            timeout=5,
        )
        assert unknown_rule.status_code == 400
        unknown_annotator = requests.get(
            f"{base}/api/session/next", params={"annotator": "ghost"}, timeout=5
        )
        assert unknown_annotator.status_code == 400
        missing_param = requests.get(f"{base}/api/session/next", timeout=5)
        assert missing_param.status_code == 400
        bad_body = requests.post(
            f"{base}/api/session/decision", data=b"not json", timeout=5
        )
        assert bad_body.status_code == 400
        not_found = requests.get(f"{base}/api/nothing", timeout=5)
        assert not_found.status_code == 404

        # Finish the session so the pipeline thread can exit cleanly.
        while True:
            nxt = requests.get(
                f"{base}/api/session/next", params={"annotator": "a1"}, timeout=5
            ).json()
            if nxt.get("done"):
                break
            requests.post(
                f"{base}/api/session/decision",
                json={"rule_id": nxt["rule_id"], "annotator": "a1", "decision": "reject"},
                timeout=5,
            )
        server.join()
    finally:
        server.stop()


def test_service_session_timeout_aborts(tmp_path):
    config = _service_config(tmp_path, http={"host": "127.0.0.1", "port": 0, "session_timeout": 0.3})
    server = AnnotationServer(config)
    server.start()
    with pytest.raises(SessionTimeout):
        server.join()
    # Iteration 0 completed before the stall, so its checkpoint survives.
    from ruleboost.pipeline import CheckpointStore

    assert CheckpointStore(config.checkpoint_dir).completed_iterations() == [0]


def test_metrics_and_agreement_endpoints(tmp_path):
    config = _service_config(tmp_path)
    server = AnnotationServer(config)
    server.start()
    base = f"http://127.0.0.1:{server.port}"
    try:
        _wait_for_session(base)
        metrics = requests.get(f"{base}/api/metrics", timeout=5).json()
        assert len(metrics["reports"]) == 1  # iteration 0 done before the session
        assert metrics["reports"][0]["iteration"] == 0
        agreement = requests.get(f"{base}/api/agreement", timeout=5).json()
        assert agreement["rows"] == []  # single annotator: no kappa
        while True:
            nxt = requests.get(
                f"{base}/api/session/next", params={"annotator": "a1"}, timeout=5
            ).json()
            if nxt.get("done"):
                break
            requests.post(
                f"{base}/api/session/decision",
                json={"rule_id": nxt["rule_id"], "annotator": "a1", "decision": "accept"},
                timeout=5,
            )
        server.join()
    finally:
        server.stop()
