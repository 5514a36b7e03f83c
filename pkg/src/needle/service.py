"""HTTP annotation service: a human oracle for one active-learning run.

The learning loop runs in a worker thread and blocks inside the
interactive oracle whenever it needs labels. A small JSON API feeds the
browser frontend: it exposes the pending batch, accepts labels, and
serves the live learning trace. Single session, localhost tool, no
authentication.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .activeloop import BatchItem, LoopConfig, run_loop
from .corpus import FoldPlan, LabeledCorpus

log = logging.getLogger(__name__)


class OracleTimeout(RuntimeError):
    pass


class AnnotationSession:
    """State shared between the loop thread and the HTTP handlers.

    States: waiting (loop is training), collecting (labels needed),
    complete (run finished). Labels are accepted only for pending ids;
    re-submitting an identical label is a no-op, a conflicting one is
    rejected.
    """

    def __init__(self):
        self.session_id = uuid.uuid4().hex
        self.state = "waiting"
        self.pending: list[BatchItem] = []
        self.received: dict[str, int] = {}
        self.history: dict[str, int] = {}
        self.batch_index = 0
        self.records: list[dict] = []
        self.lock = threading.Lock()
        self.batch_done = threading.Condition(self.lock)

    # ---- loop side

    def request_labels(self, items: list[BatchItem],
                       timeout: float | None = None) -> dict[str, int]:
        with self.lock:
            self.pending = list(items)
            self.received = {}
            self.state = "collecting"
            while len(self.received) < len(self.pending):
                if not self.batch_done.wait(timeout=timeout):
                    self.state = "waiting"
                    raise OracleTimeout(
                        f"no complete batch within {timeout}s")
            labels = dict(self.received)
            self.history.update(labels)
            self.pending = []
            self.received = {}
            self.state = "waiting"
            self.batch_index += 1
            return labels

    def add_record(self, record) -> None:
        with self.lock:
            self.records.append(record.to_dict())

    def finish(self) -> None:
        with self.lock:
            self.state = "complete"

    # ---- HTTP side

    def status(self) -> dict:
        with self.lock:
            return {"session_id": self.session_id, "state": self.state,
                    "batch_index": self.batch_index,
                    "pending_count": len(self.pending),
                    "received_count": len(self.received),
                    "labeled_total": len(self.history)}

    def batch(self) -> list[dict]:
        with self.lock:
            return [{"id": it.doc_id, "text": it.text,
                     "uncertainty": it.uncertainty}
                    for it in self.pending]

    def submit(self, labels: dict) -> tuple[int, str]:
        """Returns (http_status, message). Atomic: all labels or none."""
        clean = {}
        for doc_id, value in labels.items():
            if value not in (0, 1):
                return HTTPStatus.BAD_REQUEST, f"label for {doc_id!r} must be 0 or 1"
            clean[str(doc_id)] = int(value)
        with self.lock:
            pending_ids = {it.doc_id for it in self.pending}
            for doc_id, value in clean.items():
                if doc_id in pending_ids:
                    if doc_id in self.received and self.received[doc_id] != value:
                        return (HTTPStatus.CONFLICT,
                                f"{doc_id!r} already labeled differently")
                elif doc_id in self.history:
                    if self.history[doc_id] != value:
                        return (HTTPStatus.CONFLICT,
                                f"{doc_id!r} already labeled differently")
                else:
                    return HTTPStatus.CONFLICT, f"{doc_id!r} is not in the batch"
            fresh = {d: v for d, v in clean.items() if d in pending_ids}
            if not fresh:
                return HTTPStatus.NO_CONTENT, ""  # idempotent resubmission
            self.received.update(fresh)
            if len(self.received) == len(self.pending):
                self.batch_done.notify_all()
                return HTTPStatus.NO_CONTENT, ""
            return (HTTPStatus.ACCEPTED,
                    f"{len(self.pending) - len(self.received)} labels missing")

    def trace(self) -> dict:
        with self.lock:
            return {"state": self.state, "records": list(self.records)}


class InteractiveOracle:
    """Oracle that blocks until the annotation session delivers a batch."""

    def __init__(self, session: AnnotationSession,
                 timeout: float | None = None):
        self.session = session
        self.timeout = timeout

    def label(self, items: list[BatchItem]) -> dict[str, int]:
        return self.session.request_labels(items, timeout=self.timeout)


_CONTENT_TYPES = {".html": "text/html", ".js": "text/javascript",
                  ".css": "text/css", ".map": "application/json",
                  ".svg": "image/svg+xml"}


def _make_handler(session: AnnotationSession, static_dir: Path | None):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):
            log.debug("http: " + fmt, *args)

        def _json(self, status: int, payload) -> None:
            body = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _empty(self, status: int, message: str = "") -> None:
            if message:
                self._json(status, {"error": message})
                return
            self.send_response(status)
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            path = self.path.split("?", 1)[0]
            if path == "/status":
                self._json(HTTPStatus.OK, session.status())
            elif path == "/batch":
                self._json(HTTPStatus.OK, session.batch())
            elif path == "/trace":
                self._json(HTTPStatus.OK, session.trace())
            else:
                self._static(path)

        def do_POST(self):
            if self.path.split("?", 1)[0] != "/labels":
                self._empty(HTTPStatus.NOT_FOUND, "unknown endpoint")
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                payload = json.loads(self.rfile.read(length) or b"{}")
                labels = payload["labels"]
                if not isinstance(labels, dict):
                    raise TypeError
            except (ValueError, KeyError, TypeError):
                self._empty(HTTPStatus.BAD_REQUEST,
                            'body must be {"labels": {id: 0|1}}')
                return
            status, message = session.submit(labels)
            if status == HTTPStatus.NO_CONTENT:
                self._empty(status)
            else:
                self._json(status, {"error": message})

        def _static(self, path: str):
            if static_dir is None:
                self._empty(HTTPStatus.NOT_FOUND, "no static assets configured")
                return
            name = "index.html" if path in ("", "/") else path.lstrip("/")
            target = (static_dir / name).resolve()
            if not str(target).startswith(str(static_dir.resolve())) \
                    or not target.is_file():
                self._empty(HTTPStatus.NOT_FOUND, f"no such file {name!r}")
                return
            body = target.read_bytes()
            self.send_response(HTTPStatus.OK)
            self.send_header("Content-Type",
                             _CONTENT_TYPES.get(target.suffix, "text/plain"))
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return Handler


class AnnotationService:
    """Owns the HTTP server and the learning loop worker thread."""

    def __init__(self, corpus: LabeledCorpus, fold_plan: FoldPlan,
                 test_fold: int, cfg: LoopConfig, dtm=None,
                 host: str = "127.0.0.1", port: int = 0,
                 static_dir=None, oracle_timeout: float | None = None):
        self.session = AnnotationSession()
        self._corpus = corpus
        self._plan = fold_plan
        self._test_fold = test_fold
        self._cfg = cfg
        self._dtm = dtm
        self.trace = None
        self.error = None
        static = Path(static_dir) if static_dir else None
        self._server = ThreadingHTTPServer(
            (host, port), _make_handler(self.session, static))
        self._oracle = InteractiveOracle(self.session, timeout=oracle_timeout)
        self._server_thread = threading.Thread(
            target=self._server.serve_forever, daemon=True)
        self._loop_thread = threading.Thread(target=self._run, daemon=True)

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def _run(self):
        try:
            self.trace = run_loop(self._corpus, self._plan, self._test_fold,
                                  self._cfg, self._oracle, dtm=self._dtm,
                                  on_record=self.session.add_record)
        except Exception as exc:  # surfaced via wait()
            self.error = exc
            log.exception("annotation loop failed")
        finally:
            self.session.finish()

    def start(self) -> tuple[str, int]:
        self._server_thread.start()
        self._loop_thread.start()
        return self.address

    def wait(self, timeout: float | None = None):
        self._loop_thread.join(timeout)
        if self._loop_thread.is_alive():
            raise TimeoutError("annotation loop still running")
        if self.error is not None:
            raise self.error
        return self.trace

    def shutdown(self):
        self._server.shutdown()
        self._server.server_close()
