"""HTTP layer for the rating study.

Thin FastAPI wiring over SessionManager: JSON in, JSON out, package
exceptions mapped to status codes. Export is admin-only via a bearer token
taken from the STUDY_ADMIN_TOKEN environment variable unless one is passed
explicitly.
"""

from __future__ import annotations

import os
import secrets

from fastapi import FastAPI, Header, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..errors import (
    Conflict,
    InvalidInput,
    NotFound,
    StyleAtlasError,
    Unauthorized,
    ValidationError,
)
from .models import ExpertProfile, ProgressionResponse, RankingResponse, TuringResponse
from .sessions import SessionManager

_STATUS = (
    (Unauthorized, 401),
    (NotFound, 404),
    (Conflict, 409),
    (ValidationError, 422),
    (InvalidInput, 400),
)


class ProfileBody(BaseModel):
    user_id: str
    years_experience: int
    wce_familiarity: str
    institution: str | None = None


class SessionBody(BaseModel):
    profile: ProfileBody
    experiment_id: str
    task: str
    requested_images: int | None = None


class ResponseBody(BaseModel):
    stimulus: str
    verdict: str | None = None
    difficulty: int | None = None
    order: list[str] | None = None
    severities: list[int] | None = None
    plausibility: int | None = None
    elapsed_ms: int | None = None


def _response_from_body(task: str, token: str, body: ResponseBody):
    if task == "turing":
        if body.verdict is None or body.difficulty is None:
            raise ValidationError("turing responses need verdict and difficulty")
        return TuringResponse(session=token, stimulus=body.stimulus, verdict=body.verdict,
                              difficulty=body.difficulty, elapsed_ms=body.elapsed_ms)
    if task == "ranking":
        if body.order is None:
            raise ValidationError("ranking responses need an order")
        return RankingResponse(session=token, stimulus=body.stimulus,
                               order=tuple(body.order), elapsed_ms=body.elapsed_ms)
    if body.severities is None or body.plausibility is None:
        raise ValidationError("progression responses need severities and plausibility")
    return ProgressionResponse(session=token, stimulus=body.stimulus,
                               severities=tuple(body.severities),
                               plausibility=body.plausibility, elapsed_ms=body.elapsed_ms)


def create_app(manager: SessionManager, admin_token: str | None = None) -> FastAPI:
    app = FastAPI(title="rating-study", docs_url=None, redoc_url=None)
    app.state.manager = manager
    app.state.admin_token = admin_token

    @app.exception_handler(StyleAtlasError)
    def _handle(request: Request, exc: StyleAtlasError):
        for cls, code in _STATUS:
            if isinstance(exc, cls):
                return JSONResponse(status_code=code, content={"error": str(exc)})
        return JSONResponse(status_code=500, content={"error": str(exc)})

    def _admin_ok(authorization: str | None) -> None:
        expected = app.state.admin_token or os.environ.get("STUDY_ADMIN_TOKEN")
        if not expected:
            raise Unauthorized("no admin token is configured")
        if not authorization or not authorization.startswith("Bearer "):
            raise Unauthorized("missing bearer token")
        if not secrets.compare_digest(authorization[len("Bearer "):], expected):
            raise Unauthorized("bad admin token")

    @app.post("/api/sessions")
    def create_session(body: SessionBody):
        profile = ExpertProfile(**body.profile.model_dump())
        return manager.create_session(profile, body.experiment_id, body.task,
                                      requested_images=body.requested_images)

    @app.get("/api/sessions/{token}")
    def session_progress(token: str):
        return manager.session_progress(token)

    @app.get("/api/sessions/{token}/next")
    def next_stimulus(token: str):
        stim = manager.next_stimulus(token)
        if stim is None:
            return {"done": True, **manager.session_progress(token)}
        return {"done": False, "stimulus": stim.public_payload(),
                **manager.session_progress(token)}

    @app.post("/api/sessions/{token}/responses")
    def submit(token: str, body: ResponseBody):
        task = manager.session_progress(token)["task"]
        response = _response_from_body(task, token, body)
        return manager.submit(token, response)

    @app.get("/api/experiments/{experiment_id}/export")
    def export(experiment_id: str, authorization: str | None = Header(default=None)):
        _admin_ok(authorization)
        data = manager.export(experiment_id)
        return Response(content=data, media_type="application/x-ndjson")

    @app.get("/api/images/{image_id}")
    def image(image_id: str):
        return Response(content=manager.experiment.png_bytes(image_id),
                        media_type="image/png")

    return app
