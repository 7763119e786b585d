"""HTTP facade over sessions, retrieval, and corpus browsing.

All endpoints live under /v1/. Errors always carry a structured body
{"code": ..., "message": ...}; a turn either returns a complete ranking
or fails as a whole.
"""

from __future__ import annotations

from threading import Lock

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .decoder import DecodeConfig
from .dialogue import Engine, SessionStore, UserInput, post_turn
from .errors import (
    EmptyScope,
    InvalidOverride,
    ProductNotFound,
    RemoteUnavailable,
    SessionNotFound,
    UnresolvedReference,
)
from .ttr import TtrSettings

_ERROR_STATUS = {
    SessionNotFound: (404, "session_not_found"),
    ProductNotFound: (404, "product_not_found"),
    UnresolvedReference: (422, "unresolved_reference"),
    InvalidOverride: (422, "invalid_override"),
    EmptyScope: (422, "empty_scope"),
    RemoteUnavailable: (502, "remote_unavailable"),
}


class CreateSessionBody(BaseModel):
    beam_width: int | None = None
    top_b: int | None = None
    max_len: int | None = None
    k_results: int | None = None
    ttr_enabled: bool | None = None
    evaluator: str | None = None


class TurnBody(BaseModel):
    user_text: str
    ref_product_id: str | None = None


def _ranked_payload(r) -> dict:
    return {
        "rank": r.rank,
        "product_id": r.product_id,
        "rm_raw": r.rm_raw,
        "rm_ttr": r.rm_ttr,
        "best_sid": r.best_sid.text,
    }


def create_app(engine: Engine, snapshot_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="sidsearch", version="0.1.0")
    store = SessionStore(snapshot_dir=snapshot_dir)
    turn_lock = Lock()  # per-session turn ordering; sessions share one writer lock

    def _register(klass, status: int, code: str):
        async def handler(request: Request, exc: Exception):
            return JSONResponse(status_code=status, content={"code": code, "message": str(exc)})

        app.add_exception_handler(klass, handler)

    for klass, (status, code) in _ERROR_STATUS.items():
        _register(klass, status, code)

    @app.get("/v1/healthz")
    def healthz():
        return {"status": "ok", "products": engine.corpus.size, "sids": len(engine.sids)}

    @app.post("/v1/sessions")
    def create_session(body: CreateSessionBody):
        try:
            decode = DecodeConfig(
                beam_width=body.beam_width if body.beam_width is not None else engine.decode.beam_width,
                top_b=body.top_b if body.top_b is not None else engine.decode.top_b,
                max_len=body.max_len if body.max_len is not None else engine.decode.max_len,
                k_results=body.k_results if body.k_results is not None else engine.decode.k_results,
            )
        except ValueError as exc:
            raise InvalidOverride(str(exc)) from None
        ttr = TtrSettings(
            enabled=body.ttr_enabled if body.ttr_enabled is not None else engine.ttr.enabled,
            evaluator=body.evaluator or engine.ttr.evaluator,
            parallelism=engine.ttr.parallelism,
            strict=engine.ttr.strict,
        )
        session = store.create(decode, ttr)
        return {
            "session_id": session.session_id,
            "config": {"decode": decode.as_dict(), "ttr": ttr.as_dict()},
        }

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        session = store.get(session_id)
        return {
            "session_id": session.session_id,
            "config": {"decode": session.decode.as_dict(), "ttr": session.ttr.as_dict()},
            "turns": [
                {
                    "turn": i + 1,
                    "user_text": t.user_text,
                    "ref_product_id": t.ref_product_id,
                    "inferred_query": t.inferred_query,
                    "results": [_ranked_payload(r) for r in t.results],
                }
                for i, t in enumerate(session.turns)
            ],
        }

    @app.post("/v1/sessions/{session_id}/turns")
    def post_turn_api(session_id: str, body: TurnBody):
        session = store.get(session_id)
        with turn_lock:
            turn = post_turn(
                session,
                engine,
                UserInput(user_text=body.user_text, ref_product_id=body.ref_product_id),
            )
            store.snapshot(session)
        return {
            "session_id": session.session_id,
            "turn": len(session.turns),
            "user_text": turn.user_text,
            "inferred_query": turn.inferred_query,
            "results": [
                {
                    **_ranked_payload(r),
                    "caption": engine.corpus.get_product(r.product_id).caption,
                    "image_ref": engine.corpus.get_product(r.product_id).image_ref,
                }
                for r in turn.results
            ],
        }

    @app.get("/v1/products/{product_id}")
    def get_product_api(product_id: str):
        p = engine.corpus.get_product(product_id)
        return {
            "product_id": p.product_id,
            "title": p.title,
            "description": p.description,
            "caption": p.caption,
            "attributes": p.attributes,
            "image_ref": p.image_ref,
        }

    return app
