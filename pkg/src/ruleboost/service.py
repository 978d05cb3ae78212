"""HTTP service carrying the annotation loop to human annotators.

The pipeline publishes each iteration's session into a :class:`SessionHub`
and blocks until quorum; annotation clients pull candidates and post
decisions over a small JSON API:

    GET  /api/session                   current session summary
    GET  /api/session/next?annotator=ID next undecided candidate for ID
    POST /api/session/decision          {rule_id, annotator, decision[, latency_ms]}
    GET  /api/session/progress          decided / expected counts
    GET  /api/metrics                   iteration report history
    GET  /api/agreement                 per-iteration kappa rows

Decision writes are atomic (single lock around the immutable-session swap);
duplicates come back as 409 conflicts.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .annotation import AnnotationSession, record_decision
from .pipeline import PipelineConfig, SessionTimeout, run


class SessionHub:
    """Thread-safe bridge between the pipeline loop and the HTTP handlers."""

    def __init__(self):
        self._lock = threading.Lock()
        self._complete = threading.Condition(self._lock)
        self._session: AnnotationSession | None = None
        self._payloads: dict[str, dict] = {}
        self._quorum: int | None = None
        self._reports: list[dict] = []
        self._agreement: list[dict] = []
        self._finished = False

    # -- pipeline side ----------------------------------------------------

    def publish(
        self,
        session: AnnotationSession,
        payloads: dict[str, dict],
        quorum: int | None,
    ) -> None:
        with self._lock:
            self._session = session
            self._payloads = payloads
            self._quorum = quorum

    def wait_complete(self, timeout: float) -> AnnotationSession:
        with self._complete:
            ok = self._complete.wait_for(
                lambda: self._session is not None
                and not self._session.missing_pairs(self._quorum),
                timeout=timeout,
            )
            if not ok:
                raise SessionTimeout(
                    f"annotation session incomplete after {timeout}s"
                )
            return self._session

    def clear_session(self) -> None:
        with self._lock:
            self._session = None
            self._payloads = {}

    def set_reports(self, reports: list[dict]) -> None:
        with self._lock:
            self._reports = list(reports)

    def add_agreement(self, row: dict) -> None:
        with self._lock:
            self._agreement = [
                r for r in self._agreement if r["iteration"] != row["iteration"]
            ] + [row]
            self._agreement.sort(key=lambda r: r["iteration"])

    def mark_finished(self) -> None:
        with self._lock:
            self._finished = True

    # -- client side ------------------------------------------------------

    def summary(self) -> dict:
        with self._lock:
            if self._session is None:
                return {"active": False, "finished": self._finished}
            s = self._session
            return {
                "active": True,
                "finished": self._finished,
                "id": s.id,
                "iteration": s.iteration,
                "state": s.state,
                "annotators": list(s.annotators),
                "n_candidates": len(s.rules),
                "expected_decisions": s.expected(),
            }

    def next_for(self, annotator: str) -> dict:
        with self._lock:
            if self._session is None:
                return {"done": True}
            try:
                pending = self._session.undecided_for(annotator)
            except KeyError:
                return {"error": f"unknown annotator {annotator}", "status": 400}
            if not pending:
                return {"done": True}
            return dict(self._payloads[pending[0]])

    def submit(
        self,
        rule_id: str,
        annotator: str,
        decision: str,
        latency_ms: float | None,
    ) -> tuple[int, dict]:
        with self._complete:
            if self._session is None:
                return 404, {"error": "no active session"}
            try:
                self._session = record_decision(
                    self._session, rule_id, annotator, decision, latency_ms
                )
            except KeyError as exc:
                return 400, {"error": str(exc)}
            except ValueError as exc:
                message = str(exc)
                status = 409 if "already decided" in message or "closed" in message else 400
                return status, {"error": message}
            self._complete.notify_all()
            return 200, {
                "ok": True,
                "decided": self._session.decided(),
                "expected": self._session.expected(),
            }

    def progress(self) -> dict:
        with self._lock:
            if self._session is None:
                return {"decided": 0, "expected": 0, "complete": False, "per_annotator": {}}
            s = self._session
            per = {
                a: sum(1 for (rid, who) in s.decisions if who == a)
                for a in s.annotators
            }
            return {
                "decided": s.decided(),
                "expected": s.expected(),
                "complete": not s.missing_pairs(self._quorum),
                "per_annotator": per,
            }

    def metrics(self) -> dict:
        with self._lock:
            return {"reports": list(self._reports)}

    def agreement(self) -> dict:
        with self._lock:
            return {"rows": list(self._agreement)}


class _Handler(BaseHTTPRequestHandler):
    hub: SessionHub  # set on the server

    def _send(self, status: int, body: dict) -> None:
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def do_OPTIONS(self):
        self._send(204, {})

    def do_GET(self):
        hub = self.server.hub  # type: ignore[attr-defined]
        parsed = urlparse(self.path)
        if parsed.path == "/api/session":
            self._send(200, hub.summary())
        elif parsed.path == "/api/session/next":
            query = parse_qs(parsed.query)
            annotator = query.get("annotator", [None])[0]
            if not annotator:
                self._send(400, {"error": "annotator query parameter required"})
                return
            body = hub.next_for(annotator)
            self._send(body.pop("status", 200), body)
        elif parsed.path == "/api/session/progress":
            self._send(200, hub.progress())
        elif parsed.path == "/api/metrics":
            self._send(200, hub.metrics())
        elif parsed.path == "/api/agreement":
            self._send(200, hub.agreement())
        else:
            self._send(404, {"error": f"unknown path {parsed.path}"})

    def do_POST(self):
        hub = self.server.hub  # type: ignore[attr-defined]
        parsed = urlparse(self.path)
        if parsed.path != "/api/session/decision":
            self._send(404, {"error": f"unknown path {parsed.path}"})
            return
        length = int(self.headers.get("Content-Length", 0))
        try:
            body = json.loads(self.rfile.read(length) or b"{}")
            rule_id = body["rule_id"]
            annotator = body["annotator"]
            decision = body["decision"]
        except (ValueError, KeyError) as exc:
            self._send(400, {"error": f"bad request body: {exc}"})
            return
        latency = body.get("latency_ms")
        status, payload = hub.submit(rule_id, annotator, decision, latency)
        self._send(status, payload)


class AnnotationServer:
    """HTTP server plus the pipeline thread it feeds."""

    def __init__(self, config: PipelineConfig, resume: bool = False):
        self.config = config
        self.hub = SessionHub()
        self.httpd = ThreadingHTTPServer((config.http.host, config.http.port), _Handler)
        self.httpd.hub = self.hub  # type: ignore[attr-defined]
        self._resume = resume
        self._thread: threading.Thread | None = None
        self._server_thread: threading.Thread | None = None
        self.reports = None
        self.error: BaseException | None = None

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    def start(self) -> None:
        def pipeline_target():
            try:
                self.reports = run(
                    self.config, "http_sessions", hub=self.hub, resume=self._resume
                )
            except BaseException as exc:  # surfaced by join()
                self.error = exc

        self._server_thread = threading.Thread(
            target=self.httpd.serve_forever, daemon=True
        )
        self._server_thread.start()
        self._thread = threading.Thread(target=pipeline_target, daemon=True)
        self._thread.start()

    def join(self):
        """Wait for the pipeline to finish, then tear the server down.

        The HTTP endpoints stay up until this is called, so clients can still
        observe the finished state after the last iteration completes.
        """
        self._thread.join()
        self.stop()
        if self.error is not None:
            raise self.error
        return self.reports

    def stop(self) -> None:
        self.httpd.shutdown()
        if self._server_thread is not None:
            self._server_thread.join()
        self.httpd.server_close()


def serve(config: PipelineConfig, resume: bool = False):
    """Run the pipeline in http_sessions mode, blocking until it finishes."""
    server = AnnotationServer(config, resume=resume)
    server.start()
    return server.join()
