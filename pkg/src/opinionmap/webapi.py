"""HTTP/JSON binding of the annotation service, versioned under /v1.

Annotator-facing responses never carry model scores or predicted labels;
the batch-publication endpoint is loop-internal and is the only one that
ever sees sampling scores.
"""

from __future__ import annotations

from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .service import AnnotationService, ServiceError
from .store import DuplicateEntityError, StoreError, UnknownEntityError


class SelectionIn(BaseModel):
    topic: str
    posting_id: str
    strategy: str | None = None
    score: float | None = None


class BatchIn(BaseModel):
    selections: list[SelectionIn]


class NewOpinionIn(BaseModel):
    statement: str
    topic_ids: list[str]
    conspiracy: bool = False


class LabelsIn(BaseModel):
    annotator_id: str
    topics: list[str] = Field(default_factory=list)
    opinions: list[str] = Field(default_factory=list)
    new_opinions: list[NewOpinionIn] = Field(default_factory=list)


class OpinionIn(BaseModel):
    statement: str
    topic_ids: list[str]
    conspiracy: bool = False


class MergeIn(BaseModel):
    absorb_id: str


def _opinion_json(opinion):
    return {
        "id": opinion.id,
        "statement": opinion.statement,
        "topic_ids": sorted(opinion.topic_ids),
        "conspiracy": opinion.conspiracy,
        "status": opinion.status,
    }


def create_app(service: AnnotationService) -> FastAPI:
    app = FastAPI(title="opinionmap annotation service", version="1")
    # the annotation UI is served from its own origin
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.exception_handler(ServiceError)
    async def service_error(_: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"error": {"code": exc.code, "message": str(exc)}},
        )

    @app.exception_handler(StoreError)
    async def store_error(_: Request, exc: StoreError):
        status = 404 if isinstance(exc, UnknownEntityError) else 409 \
            if isinstance(exc, DuplicateEntityError) else 422
        code = {404: "unknown-entity", 409: "duplicate-entity"}.get(status, "invalid")
        return JSONResponse(status_code=status,
                            content={"error": {"code": code, "message": str(exc)}})

    @app.post("/v1/iterations/{iteration}/batch")
    def publish_batch(iteration: int, batch: BatchIn):
        task_ids = service.publish_batch(
            iteration, [(s.topic, s.posting_id) for s in batch.selections])
        return {"iteration": iteration, "task_ids": task_ids}

    @app.get("/v1/tasks/next")
    def claim_next(annotator: str = Query(...)):
        return {"task": service.claim_next(annotator)}

    @app.post("/v1/tasks/{task_id}/labels")
    def submit_labels(task_id: str, labels: LabelsIn):
        return service.submit_labels(
            task_id,
            labels.annotator_id,
            labels.topics,
            labels.opinions,
            [n.model_dump() for n in labels.new_opinions],
        )

    @app.post("/v1/opinions")
    def create_opinion(body: OpinionIn):
        existing = service.store.find_opinion_by_statement(body.statement)
        if existing is not None:
            return {"opinion": _opinion_json(existing), "created": False}
        opinion = service.store.create_opinion(
            body.statement, set(body.topic_ids), body.conspiracy)
        return {"opinion": _opinion_json(opinion), "created": True}

    @app.post("/v1/opinions/{opinion_id}/merge")
    def merge_opinion(opinion_id: str, body: MergeIn):
        kept = service.store.merge_opinions(opinion_id, body.absorb_id)
        return {"opinion": _opinion_json(kept)}

    @app.get("/v1/iterations/{iteration}/progress")
    def progress(iteration: int):
        return service.progress(iteration)

    @app.get("/v1/opinions")
    def list_opinions():
        return {"opinions": [_opinion_json(o)
                             for o in service.store.opinions(active_only=True)]}

    @app.get("/v1/topics")
    def list_topics():
        return {"topics": [{"id": t.id, "name": t.name} for t in service.store.topics()]}

    return app
