"""HTTP JSON API exposing a live loop to a human annotator.

One query is outstanding at a time (the human loop runs with batch size 1).
``GET /api/next`` is idempotent while a query is pending; ``POST /api/label``
applies exactly one outcome per query id and retrains synchronously, so the
API-driven state transitions replay bit-identically through `run_loop`.
All mutations funnel through a single lock; reads serve snapshots.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .dataset import Example
from .engine import LoopSession, OracleResponse, save_checkpoint

ASSET_SUFFIXES = (".png", ".jpg", ".jpeg", ".gif", ".webp", ".bmp")


@dataclass
class PendingQuery:
    query_id: str
    instance_id: str
    display_payload: dict
    strategy_score: float
    issued_at: float


class LabelSubmission(BaseModel):
    query_id: str
    label: int | None = None
    reject: bool = False
    annotator_id: str | None = None


def _error(status_code: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status_code, content={"code": code, "message": message})


def display_payload_for(example: Example) -> dict:
    """Asset reference when the source tag looks like an image path/URL,
    otherwise a numeric feature summary."""
    tag = example.source_tag
    if tag and (
        tag.startswith(("http://", "https://", "file://", "/", "./"))
        or tag.lower().endswith(ASSET_SUFFIXES)
    ):
        return {"kind": "asset", "ref": tag}
    features = example.features
    preview = [round(float(v), 4) for v in features[:8]]
    return {
        "kind": "features",
        "dimensionality": int(features.shape[0]),
        "preview": preview,
        "norm": round(float((features**2).sum() ** 0.5), 4),
        "tag": tag,
    }


class AnnotationServer:
    """Serialized writer around one LoopSession."""

    def __init__(
        self,
        session: LoopSession,
        checkpoint_path: str | Path | None = None,
        query_expiry_seconds: float | None = None,
    ):
        self.session = session
        self.checkpoint_path = Path(checkpoint_path) if checkpoint_path else None
        self.query_expiry_seconds = query_expiry_seconds
        self.pending: PendingQuery | None = None
        self.consumed: set[str] = set()
        self._lock = threading.Lock()
        self._nonce = uuid.uuid4().hex[:8]
        self._query_counter = 0

    # -- documents ------------------------------------------------------------

    def status_doc(self) -> dict:
        session = self.session
        return {
            "iteration": session.iteration - 1,
            "labeled_size": len(session.labeled),
            "pool_size": len(session.pool),
            "discarded": len(session.discarded),
            "test_accuracy": session.evaluate(),
            "strategy": session.cfg.strategy,
            "num_classes": session.ds.num_classes,
            "complete": session.complete,
            "curve": self.curve_doc(),
        }

    def curve_doc(self) -> list[dict]:
        return [
            {"iteration": p.iteration, "labeled_size": p.labeled_size, "accuracy": p.test_accuracy}
            for p in self.session.curve.points
        ]

    def _pending_doc(self) -> dict:
        q = self.pending
        return {
            "query_id": q.query_id,
            "instance_id": q.instance_id,
            "display_payload": q.display_payload,
            "strategy_score": q.strategy_score,
            "issued_at": q.issued_at,
        }

    # -- transitions ----------------------------------------------------------

    def _pending_expired(self) -> bool:
        if self.pending is None or self.query_expiry_seconds is None:
            return False
        return time.time() - self.pending.issued_at > self.query_expiry_seconds

    def next_query(self):
        with self._lock:
            if self._pending_expired():
                self.pending = None  # re-select with the current model
            if self.pending is not None:
                return JSONResponse(self._pending_doc())
            if self.session.complete:
                return _error(410, "pool_exhausted", "no instances left to query")
            self.session.record_checkpoint_if_due()
            example, score = self.session.select(k=1)[0]
            self._query_counter += 1
            self.pending = PendingQuery(
                query_id=f"q-{self._nonce}-{self._query_counter:06d}",
                instance_id=example.id,
                display_payload=display_payload_for(example),
                strategy_score=score,
                issued_at=time.time(),
            )
            return JSONResponse(self._pending_doc())

    def submit(self, submission: LabelSubmission):
        with self._lock:
            if self.pending is None or submission.query_id != self.pending.query_id:
                if submission.query_id in self.consumed:
                    return _error(409, "conflict", "query already labeled")
                return _error(404, "unknown_query", f"no such query {submission.query_id!r}")
            if submission.reject == (submission.label is not None):
                return _error(400, "validation", "provide exactly one of label or reject")
            if submission.label is not None and not (
                0 <= submission.label < self.session.ds.num_classes
            ):
                return _error(400, "validation", f"class index {submission.label} out of range")
            response = (
                OracleResponse.reject()
                if submission.reject
                else OracleResponse.labeled(submission.label)
            )
            self.session.apply_response(self.pending.instance_id, response)
            self.session.finish_iteration()
            self.consumed.add(submission.query_id)
            self.pending = None
            if self.checkpoint_path is not None:
                save_checkpoint(self.session, self.checkpoint_path)
            return JSONResponse({"ok": True, "status": self.status_doc()})


def create_app(server: AnnotationServer, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="activepool annotation service")

    @app.get("/api/status")
    def get_status():
        with server._lock:
            return JSONResponse(server.status_doc())

    @app.get("/api/classes")
    def get_classes():
        return JSONResponse({"classes": list(server.session.ds.class_names)})

    @app.get("/api/next")
    def get_next():
        return server.next_query()

    @app.post("/api/label")
    def post_label(submission: LabelSubmission):
        return server.submit(submission)

    @app.get("/api/curve")
    def get_curve():
        with server._lock:
            return JSONResponse(server.curve_doc())

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    else:

        @app.get("/")
        def index():
            return JSONResponse(
                {
                    "service": "activepool annotation",
                    "endpoints": [
                        "GET /api/status",
                        "GET /api/classes",
                        "GET /api/next",
                        "POST /api/label",
                        "GET /api/curve",
                    ],
                }
            )

    return app
