"""HTTP session service exposing the interactive workflow to the web UI.

JSON over HTTP.  Sessions hold an uploaded alignment, non-destructive repairs
(articulations are flagged off, not deleted), cached analysis results, and
the ambiguity-reduction state.  World enumeration and provenance run as
background jobs: the first request answers 202 with a job id to poll at
``/api/jobs/{id}``, and the same request returns 200 once the job is done.
One background job runs per session at a time.  Sessions persist as JSON
files under the data directory and are restored on demand, reproducing
identical responses after a restart.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from . import analysis, viz
from .engine import Budget, BudgetExceededError, WorldsResult, check_consistency, enumerate_worlds
from .model import Alignment, Diagnosis, World, diagnosis_to_json, mir_to_json, world_to_json
from .parser import AlignmentSyntaxError, parse_alignment
from .relations import RelationMask, relation_from_token


class ApiError(Exception):
    def __init__(self, status: int, message: str, **extra):
        self.status = status
        self.payload = {"error": message, **extra}
        super().__init__(message)


class Job:
    def __init__(self, job_id: str, session_id: str, kind: str):
        self.job_id = job_id
        self.session_id = session_id
        self.kind = kind
        self.status = "running"  # running | done | failed
        self.error: Optional[str] = None

    def to_json(self) -> dict:
        out = {
            "id": self.job_id,
            "session": self.session_id,
            "kind": self.kind,
            "status": self.status,
        }
        if self.error is not None:
            out["error"] = self.error
        return out


class Session:
    """Single-writer state; every mutation happens under the lock."""

    def __init__(self, session_id: str, text: str, coverage: bool):
        self.session_id = session_id
        self.text = text
        self.coverage = coverage
        self.base: Alignment = parse_alignment(text, coverage=coverage)
        self.disabled: List[int] = []
        self.answers: List[dict] = []  # {"left","right","bits"} in applied order
        self.history: List[dict] = []  # append-only event log
        self.lock = threading.RLock()
        self.job: Optional[Job] = None
        self.invalidate()

    # -- state ---------------------------------------------------------------

    def invalidate(self) -> None:
        self.consistency: Optional[bool] = None
        self.diagnosis: Optional[Diagnosis] = None
        self.worlds: Optional[WorldsResult] = None
        self.reduction: Optional[analysis.ReductionSession] = None
        self.provenance: Dict[Tuple[str, str, int], List[int]] = {}

    def alignment(self) -> Alignment:
        active = [a.index for a in self.base.articulations if a.index not in self.disabled]
        return self.base.restricted_to(active)

    def ensure_consistency(self) -> bool:
        if self.consistency is None:
            self.consistency = check_consistency(self.alignment()).consistent
        return self.consistency

    def compute_worlds(self, limit: int) -> None:
        result = enumerate_worlds(self.alignment(), limit=limit)
        with self.lock:
            self.worlds = result
            self.reduction = None
            if not result.truncated and result.worlds:
                self.reduction = analysis.ReductionSession.start(self.alignment(), result.worlds)
                for answer in self.answers:
                    self.reduction = analysis.apply_answer(
                        self.reduction,
                        (answer["left"], answer["right"]),
                        RelationMask(answer["bits"]),
                    )

    def summary(self) -> dict:
        return {
            "session_id": self.session_id,
            "taxonomies": [
                {
                    "id": t.id,
                    "label": t.label,
                    "concepts": len(t.concepts),
                }
                for t in (self.base.taxonomy1, self.base.taxonomy2)
            ],
            "articulations": [
                {
                    "index": a.index,
                    "text": a.text(),
                    "disabled": a.index in self.disabled,
                }
                for a in self.base.articulations
            ],
            "flags": {"coverage": self.coverage},
            "answers": len(self.answers),
            "history": list(self.history),
        }

    def persisted(self) -> dict:
        return {
            "session_id": self.session_id,
            "text": self.text,
            "coverage": self.coverage,
            "disabled": list(self.disabled),
            "answers": list(self.answers),
            "history": list(self.history),
        }


class ServiceState:
    def __init__(self, data_dir: str, budget: Optional[Budget] = None):
        self.data_dir = Path(data_dir)
        self.budget = budget or Budget.from_env()
        self.sessions: Dict[str, Session] = {}
        self.jobs: Dict[str, Job] = {}
        self.lock = threading.Lock()

    # -- persistence ----------------------------------------------------------

    def persist(self, session: Session) -> None:
        self.data_dir.mkdir(parents=True, exist_ok=True)
        path = self.data_dir / f"{session.session_id}.json"
        path.write_text(
            json.dumps(session.persisted(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    def restore(self, session_id: str) -> Optional[Session]:
        path = self.data_dir / f"{session_id}.json"
        if not path.exists():
            return None
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            session = Session(data["session_id"], data["text"], data["coverage"])
            session.disabled = list(data["disabled"])
            session.answers = list(data["answers"])
            session.history = list(data["history"])
        except (ValueError, KeyError, AlignmentSyntaxError) as e:
            raise ApiError(500, f"corrupt session record {session_id}: {e}")
        return session

    def get(self, session_id: str) -> Session:
        with self.lock:
            session = self.sessions.get(session_id)
            if session is None:
                session = self.restore(session_id)
                if session is not None:
                    self.sessions[session_id] = session
        if session is None:
            raise ApiError(404, f"unknown session {session_id}")
        return session

    # -- jobs ------------------------------------------------------------------

    def submit(self, session: Session, kind: str, work) -> Job:
        """Start one background job per session; a running one is returned as is."""
        with self.lock:
            if session.job is not None and session.job.status == "running":
                return session.job
            job = Job(uuid.uuid4().hex, session.session_id, kind)
            self.jobs[job.job_id] = job
            session.job = job

        def runner() -> None:
            try:
                work()
                job.status = "done"
            except BudgetExceededError as e:
                job.status = "failed"
                job.error = f"budget exceeded: {e}"
            except Exception as e:  # surfaced via the job record
                job.status = "failed"
                job.error = str(e)

        threading.Thread(target=runner, daemon=True).start()
        return job


def _pending(job: Job) -> JSONResponse:
    return JSONResponse(
        status_code=202,
        content={"status": "pending", "job": job.job_id, "poll": f"/api/jobs/{job.job_id}"},
    )


def _parse_mask(tokens: List[str]) -> RelationMask:
    if not tokens:
        raise ApiError(400, "relation list must not be empty")
    bits = 0
    for token in tokens:
        try:
            bits |= relation_from_token(str(token))
        except ValueError:
            raise ApiError(400, f"unknown relation token {token!r}")
    return RelationMask(bits)


def create_app(data_dir: str = "sessions", budget: Optional[Budget] = None,
               static_dir: Optional[str] = None, allow_origins: Tuple[str, ...] = ()) -> FastAPI:
    state = ServiceState(data_dir, budget)
    app = FastAPI(title="taxoalign service", version="0.1.0")
    app.state.service = state
    if allow_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(allow_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(ApiError)
    async def handle_api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.payload)

    @app.exception_handler(BudgetExceededError)
    async def handle_budget(_request: Request, exc: BudgetExceededError):
        return JSONResponse(status_code=503, content={"error": f"budget exceeded: {exc}"})

    def ready_worlds(session: Session) -> WorldsResult:
        """Cached full world list, or raise the 202/422/503 control flow."""
        if not session.ensure_consistency():
            raise ApiError(422, "alignment is inconsistent; repair it first")
        if session.worlds is None:
            job = state.submit(
                session, "worlds",
                lambda: session.compute_worlds(state.budget.max_worlds),
            )
            if job.status == "running":
                raise _PendingSignal(job)
            if job.status == "failed":
                raise ApiError(503, job.error or "world enumeration failed")
        assert session.worlds is not None
        if session.worlds.truncated:
            raise ApiError(503, "world list truncated at the budget; raise TAXOALIGN_BUDGET")
        return session.worlds

    class _PendingSignal(Exception):
        def __init__(self, job: Job):
            self.job = job

    @app.exception_handler(_PendingSignal)
    async def handle_pending(_request: Request, exc: _PendingSignal):
        return _pending(exc.job)

    # -- session lifecycle -----------------------------------------------------

    @app.post("/api/session")
    async def create_session(request: Request):
        try:
            body = await request.json()
        except Exception:
            raise ApiError(400, "request body must be JSON")
        text = body.get("text")
        if not isinstance(text, str):
            raise ApiError(400, "body must contain the alignment text under 'text'")
        coverage = bool(body.get("coverage", True))
        try:
            session = Session(uuid.uuid4().hex, text, coverage)
        except AlignmentSyntaxError as e:
            return JSONResponse(
                status_code=400,
                content={
                    "error": "parse failed",
                    "issues": [
                        {
                            "code": i.code,
                            "message": i.message,
                            "line": i.span.line,
                            "column_start": i.span.column_start,
                            "column_end": i.span.column_end,
                            "text": i.span.text,
                        }
                        for i in e.issues
                    ],
                },
            )
        session.history.append({"event": "created"})
        with state.lock:
            state.sessions[session.session_id] = session
        state.persist(session)
        return {"session_id": session.session_id}

    @app.get("/api/session/{session_id}")
    def session_summary(session_id: str):
        return state.get(session_id).summary()

    @app.get("/api/session/{session_id}/consistency")
    def consistency(session_id: str):
        session = state.get(session_id)
        with session.lock:
            return {"consistent": session.ensure_consistency()}

    @app.get("/api/session/{session_id}/diagnosis")
    def diagnosis(session_id: str):
        session = state.get(session_id)
        with session.lock:
            if session.ensure_consistency():
                raise ApiError(422, "alignment is consistent; nothing to diagnose")
            if session.diagnosis is None:
                session.diagnosis = analysis.diagnose(session.alignment())
            alignment = session.alignment()
            by_index = {a.index: a for a in alignment.articulations}
            payload = diagnosis_to_json(session.diagnosis)
            payload["articulations"] = {
                str(i): by_index[i].text() for i in session.diagnosis.mus
            }
            payload["structural_facts"] = analysis.structural_facts(
                alignment, session.diagnosis.mus
            )
            return payload

    @app.post("/api/session/{session_id}/repair")
    async def repair(session_id: str, request: Request):
        session = state.get(session_id)
        try:
            body = await request.json()
        except Exception:
            raise ApiError(400, "request body must be JSON")
        remove = body.get("remove", [])
        restore = body.get("restore", [])
        if not isinstance(remove, list) or not isinstance(restore, list):
            raise ApiError(400, "'remove' and 'restore' must be index lists")
        known = {a.index for a in session.base.articulations}
        for idx in list(remove) + list(restore):
            if not isinstance(idx, int) or idx not in known:
                raise ApiError(400, f"unknown articulation index {idx!r}")
        with session.lock:
            for idx in remove:
                if idx not in session.disabled:
                    session.disabled.append(idx)
            for idx in restore:
                if idx in session.disabled:
                    session.disabled.remove(idx)
            session.answers = []
            session.invalidate()
            session.history.append(
                {"event": "repair", "remove": list(remove), "restore": list(restore)}
            )
            state.persist(session)
            return session.summary()

    # -- analysis ----------------------------------------------------------------

    @app.get("/api/session/{session_id}/worlds")
    def worlds(session_id: str, limit: Optional[int] = None):
        session = state.get(session_id)
        with session.lock:
            if not session.ensure_consistency():
                raise ApiError(422, "alignment is inconsistent; repair it first")
            if session.worlds is None:
                requested = state.budget.max_worlds if limit is None else max(limit, 1)
                wanted = max(requested, state.budget.max_worlds)
                job = state.submit(session, "worlds", lambda: session.compute_worlds(wanted))
                if job.status == "running":
                    return _pending(job)
                if job.status == "failed":
                    raise ApiError(503, job.error or "world enumeration failed")
            result = session.worlds
            shown = list(result.worlds)
            truncated = result.truncated
            if limit is not None and limit < len(shown):
                shown = shown[:limit]
                truncated = True
            return {
                "count": len(shown),
                "truncated": truncated,
                "worlds": [world_to_json(w) for w in shown],
            }

    @app.get("/api/session/{session_id}/mir")
    def mir_endpoint(session_id: str):
        session = state.get(session_id)
        with session.lock:
            result = ready_worlds(session)
            return mir_to_json(analysis.mir(result.worlds))

    @app.get("/api/session/{session_id}/question")
    def question(session_id: str):
        session = state.get(session_id)
        with session.lock:
            ready_worlds(session)
            q = analysis.next_question(session.reduction)
            surviving = len(session.reduction.surviving)
            if q is None:
                return {"question": None, "surviving": surviving}
            return {
                "surviving": surviving,
                "question": {
                    "left": q.pair[0],
                    "right": q.pair[1],
                    "candidates": [
                        {"relation": r.long_name, "symbol": r.symbol, "worlds": count}
                        for r, count in q.candidates
                    ],
                },
            }

    @app.post("/api/session/{session_id}/answer")
    async def answer(session_id: str, request: Request):
        session = state.get(session_id)
        try:
            body = await request.json()
        except Exception:
            raise ApiError(400, "request body must be JSON")
        left, right = body.get("left"), body.get("right")
        mask = _parse_mask(body.get("relations", []))
        with session.lock:
            ready_worlds(session)
            if (left, right) not in session.reduction.worlds[0].relations:
                raise ApiError(404, f"unknown concept pair ({left}, {right})")
            try:
                session.reduction = analysis.apply_answer(
                    session.reduction, (left, right), mask
                )
            except analysis.EmptyAnswerError as e:
                raise ApiError(409, str(e))
            answer_record = {"left": left, "right": right, "bits": mask.bits}
            if answer_record not in session.answers:
                session.answers.append(answer_record)
                session.history.append({"event": "answer", **answer_record})
            state.persist(session)
            return {"surviving": len(session.reduction.surviving)}

    @app.post("/api/session/{session_id}/reset-answers")
    def reset_answers(session_id: str):
        session = state.get(session_id)
        with session.lock:
            ready_worlds(session)
            session.answers = []
            session.reduction = analysis.ReductionSession.start(
                session.alignment(), session.worlds.worlds
            )
            session.history.append({"event": "reset-answers"})
            state.persist(session)
            return {"surviving": len(session.reduction.surviving)}

    # -- visualization -------------------------------------------------------------

    @app.get("/api/session/{session_id}/rcg/{world_id}")
    def rcg(session_id: str, world_id: int):
        session = state.get(session_id)
        with session.lock:
            result = ready_worlds(session)
            for w in result.worlds:
                if w.world_id == world_id:
                    dot = viz.rcg_to_dot(viz.build_rcg(w, session.alignment()))
                    return PlainTextResponse(dot, media_type="text/vnd.graphviz")
            raise ApiError(404, f"unknown world id {world_id}")

    @app.get("/api/session/{session_id}/cluster")
    def cluster(session_id: str):
        session = state.get(session_id)
        with session.lock:
            result = ready_worlds(session)
            dot, csv_text = viz.cluster_to_dot(result.worlds)
            return {"dot": dot, "csv": csv_text}

    @app.get("/api/session/{session_id}/provenance")
    def provenance(session_id: str, left: str, right: str, mask: str):
        session = state.get(session_id)
        tokens = [t for t in mask.replace(",", " ").split() if t]
        target = _parse_mask(tokens)
        with session.lock:
            ready_worlds(session)
            key = (left, right, target.bits)
            if key in session.provenance:
                indices = session.provenance[key]
                alignment = session.alignment()
                by_index = {a.index: a for a in alignment.articulations}
                return {
                    "left": left,
                    "right": right,
                    "mask": [r.long_name for r in target],
                    "articulations": [
                        {"index": i, "text": by_index[i].text()} for i in indices
                    ],
                }
            if (left, right) not in session.worlds.worlds[0].relations:
                raise ApiError(404, f"unknown concept pair ({left}, {right})")

            def work() -> None:
                try:
                    result = analysis.mir_provenance(
                        session.alignment(), (left, right), target
                    )
                except analysis.NotEntailedError as e:
                    raise RuntimeError(str(e))
                with session.lock:
                    session.provenance[key] = result

            job = state.submit(session, "provenance", work)
            if job.status == "running":
                return _pending(job)
            if job.status == "failed":
                raise ApiError(422, job.error or "provenance failed")
            # finished synchronously between submit and here: fall through on next poll
            return _pending(job)

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            raise ApiError(404, f"unknown job {job_id}")
        return job.to_json()

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
