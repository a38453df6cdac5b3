"""HTTP/JSON API over the platform.

Admin routes require the static X-Admin-Token header. Mutating routes
honor an Idempotency-Key header: the first response under a key is
stored (surviving restarts) and replayed verbatim for retries.
Domain errors map to JSON bodies {"error": <ExceptionName>, "detail":
...} with 400 for invalid input, 404 for unknown entities, and 409 for
state conflicts.
"""

from __future__ import annotations

import json

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .. import intelops, knowledgebase, release, ruleforge
from ..datagen.techniques import DatagenError
from ..storage import dumps
from .config import ServiceConfig
from .platform import Platform, run_drill

_NOT_FOUND = (
    intelops.UnknownItem,
    knowledgebase.UnknownPrompt,
    knowledgebase.UnknownTask,
    release.UnknownVersion,
    release.UnknownComponent,
    release.UnknownEpoch,
)
_CONFLICT = (
    intelops.InvalidTransition,
    intelops.RevisionConflict,
    intelops.NotScored,
    release.GateNotPassed,
    release.NoDeployment,
    release.MutationOfFrozenVersion,
    release.DuplicateModelVersion,
    knowledgebase.LeaseExpired,
    ruleforge.NonMonotonicVersion,
)
_BAD_REQUEST = (
    intelops.EmptyBody,
    intelops.EmptySection,
    intelops.OutOfRange,
    knowledgebase.EmptyText,
    knowledgebase.ConfidenceOutOfRange,
    knowledgebase.EmptyCorpus,
    knowledgebase.InsufficientData,
    release.FractionSumInvalid,
    release.InsufficientOverlap,
    release.ReleaseError,
    ruleforge.RuleError,
    DatagenError,
    ValueError,
)


class CheckRequest(BaseModel):
    customer_id: str
    text: str
    environment: str = "production"


class IntelItemRequest(BaseModel):
    title: str = ""
    body: str = ""
    url: str | None = None
    origin: str = "adhoc"
    source_label: str | None = None
    affected_models: list[str] = Field(default_factory=list)
    ttps: list[str] = Field(default_factory=list)
    reported_asr: float | None = None


class IntelPatch(BaseModel):
    status: str | None = None
    affected_models: list[str] | None = None
    ttps: list[str] | None = None
    reported_asr: float | None = None
    source_label: str | None = None
    ease: dict | None = None


class ReportRequest(BaseModel):
    mode: str = "generate"  # generate | finalize
    edits: dict[str, str] = Field(default_factory=dict)
    base_revision: int | None = None


class ScoreRequest(BaseModel):
    susceptibility: float | str | None = None
    signature_opportunity: bool = False
    data_available: bool = False
    triage: bool = True


class PackageRequest(BaseModel):
    package_id: str
    version: int
    rules: list[str]


class ModelRequest(BaseModel):
    model_id: str
    version: int
    weights: dict[str, float]
    threshold: float = 0.5


class VersionRequest(BaseModel):
    signature_package: tuple[str, int]
    models: list[tuple[str, int]]
    surfaces: str = "input"


class DeploymentRequest(BaseModel):
    environment: str
    assignments: list[dict]


class GateRequest(BaseModel):
    baseline: str
    candidate: str
    corpus: str


class PromoteRequest(BaseModel):
    environment: str
    version_id: str
    schedule: list[float]
    steps: int | None = None


class RollbackRequest(BaseModel):
    environment: str
    epoch: int


_IDEMPOTENCY_SCHEMA = """
CREATE TABLE IF NOT EXISTS idempotency (
    key TEXT NOT NULL,
    path TEXT NOT NULL,
    status INTEGER NOT NULL,
    body TEXT NOT NULL,
    created_at REAL NOT NULL,
    PRIMARY KEY (key, path)
);
"""


def create_app(platform: Platform, config: ServiceConfig | None = None) -> FastAPI:
    config = config or platform.config
    app = FastAPI(title="rapidguard", version="0.1.0")
    platform.db.executescript(_IDEMPOTENCY_SCHEMA)

    def require_admin(x_admin_token: str | None = Header(default=None)):
        if x_admin_token != config.admin_token:
            raise HTTPException(status_code=401, detail="invalid admin token")

    async def domain_error_handler(request: Request, exc: Exception):
        name = type(exc).__name__
        if isinstance(exc, _NOT_FOUND):
            status = 404
        elif isinstance(exc, _CONFLICT):
            status = 409
        elif isinstance(exc, _BAD_REQUEST):
            status = 400
        else:
            return JSONResponse(
                status_code=500, content={"error": "InternalError", "detail": str(exc)}
            )
        return JSONResponse(status_code=status, content={"error": name, "detail": str(exc)})

    # register on the domain bases (not Exception) so starlette returns the
    # response instead of re-raising and dropping the connection
    for base in (
        intelops.models.IntelError,
        knowledgebase.KnowledgeError,
        release.ReleaseError,
        ruleforge.RuleError,
        DatagenError,
        ValueError,
    ):
        app.add_exception_handler(base, domain_error_handler)

    @app.middleware("http")
    async def idempotency_middleware(request: Request, call_next):
        key = request.headers.get("Idempotency-Key")
        if not key or request.method not in ("POST", "PATCH", "PUT", "DELETE"):
            platform.metrics.incr("http_requests")
            return await call_next(request)
        path = request.url.path
        row = platform.db.query_one(
            "SELECT status, body FROM idempotency WHERE key = ? AND path = ?",
            (key, path),
        )
        if row is not None:
            platform.metrics.incr("http_idempotent_replays")
            return Response(
                content=row["body"], status_code=row["status"], media_type="application/json"
            )
        platform.metrics.incr("http_requests")
        response = await call_next(request)
        if response.status_code < 500:
            body = b""
            async for chunk in response.body_iterator:
                body += chunk
            platform.db.execute(
                "INSERT OR IGNORE INTO idempotency (key, path, status, body, created_at) "
                "VALUES (?, ?, ?, ?, ?)",
                (key, path, response.status_code, body.decode("utf-8"), platform.kb.clock()),
            )
            return Response(
                content=body,
                status_code=response.status_code,
                media_type=response.media_type,
            )
        return response

    # --- operational -------------------------------------------------------

    @app.get("/healthz")
    def healthz():
        return platform.health()

    @app.get("/metrics")
    def metrics():
        return PlainTextResponse(platform.metrics_text())

    # --- serving -------------------------------------------------------------

    @app.post("/v1/check")
    def check(req: CheckRequest):
        verdict = platform.check(req.customer_id, req.text, req.environment)
        return {
            "request_id": verdict.request_id,
            "flagged": verdict.flagged,
            "version_id": verdict.version_id,
            "evidence": verdict.evidence,
        }

    # --- intel ------------------------------------------------------------------

    @app.post("/intel/items")
    def intel_ingest(req: IntelItemRequest):
        outcome = platform.intel.ingest_item(req.model_dump(), origin=req.origin)
        if isinstance(outcome, intelops.Duplicate):
            return {"duplicate_of": outcome.existing.id, "item": outcome.existing.to_dict()}
        return {"item": outcome.to_dict()}

    @app.get("/intel/queue")
    def intel_queue(
        status: str | None = Query(default="queued"),
        min_score: float | None = Query(default=None),
    ):
        return {"items": platform.intel_queue_rows(status=status or None, min_score=min_score)}

    @app.get("/intel/items/{item_id}")
    def intel_get(item_id: str):
        return {"item": platform.intel.get_item(item_id).to_dict()}

    @app.patch("/intel/items/{item_id}")
    def intel_patch(item_id: str, patch: IntelPatch):
        fields = {k: v for k, v in patch.model_dump().items() if v is not None}
        item = platform.intel.update_item(item_id, fields)
        return {"item": item.to_dict()}

    @app.post("/intel/items/{item_id}/score")
    def intel_score(item_id: str, req: ScoreRequest):
        score = platform.score_intel(
            item_id,
            susceptibility=req.susceptibility,
            signature_opportunity=req.signature_opportunity,
            data_available=req.data_available,
        )
        status = platform.triage_intel(item_id) if req.triage else None
        return {"item_id": item_id, "pir_score": score, "status": status}

    @app.post("/intel/items/{item_id}/report")
    def intel_report(item_id: str, req: ReportRequest):
        if req.mode == "generate":
            report = platform.intel.generate_report(item_id)
        elif req.mode == "finalize":
            report = platform.finalize_intel_report(
                item_id, req.edits, base_revision=req.base_revision, actor="admin-api"
            )
        else:
            raise ValueError(f"mode must be generate or finalize, got {req.mode!r}")
        return {"report": report.to_dict()}

    @app.get("/intel/items/{item_id}/reports")
    def intel_reports(item_id: str):
        return {"reports": [r.to_dict() for r in platform.intel.reports(item_id)]}

    # --- corpus -----------------------------------------------------------------------

    @app.post("/corpus/prompts")
    async def corpus_import(request: Request, corpus: str = Query(...)):
        raw = (await request.body()).decode("utf-8")
        entries = [json.loads(line) for line in raw.splitlines() if line.strip()]
        count = platform.kb.import_corpus(corpus, entries)
        return {"corpus": corpus, "imported": count}

    # --- admin ------------------------------------------------------------------------

    admin = Depends(require_admin)

    @app.post("/admin/packages", dependencies=[admin])
    def admin_publish_package(req: PackageRequest):
        package = platform.publish_package(
            "\n\n".join(req.rules), req.package_id, req.version, actor="admin-api"
        )
        return {"package": ruleforge.to_manifest(package)}

    @app.post("/admin/models", dependencies=[admin])
    def admin_register_model(req: ModelRequest):
        stub = platform.register_model(
            req.model_id, req.version, req.weights, req.threshold, actor="admin-api"
        )
        return {"model": stub.to_dict()}

    @app.post("/admin/versions", dependencies=[admin])
    def admin_register_version(req: VersionRequest):
        version = platform.register_version(
            tuple(req.signature_package),
            [tuple(m) for m in req.models],
            surfaces=req.surfaces,
            actor="admin-api",
        )
        return {"version": version.to_dict()}

    @app.get("/admin/versions", dependencies=[admin])
    def admin_list_versions():
        return {
            "versions": [
                platform.versions.get(vid).to_dict() for vid in platform.versions.list_ids()
            ]
        }

    @app.post("/admin/deployments", dependencies=[admin])
    def admin_create_deployment(req: DeploymentRequest):
        deployment = platform.create_deployment(
            req.environment, req.assignments, actor="admin-api"
        )
        return {"deployment": deployment.to_dict()}

    @app.get("/admin/deployments", dependencies=[admin])
    def admin_deployments():
        out = {}
        for environment in platform.deployments.environments():
            history = platform.deployments.history(environment)
            out[environment] = {
                "current": history[-1].to_dict(),
                "history": [d.to_dict() for d in history],
            }
        return {"environments": out}

    @app.post("/admin/gate", dependencies=[admin])
    def admin_gate(req: GateRequest):
        report = platform.gate(req.baseline, req.candidate, req.corpus, actor="admin-api")
        return {"gate": report.to_dict()}

    @app.get("/admin/gate-reports", dependencies=[admin])
    def admin_gate_reports(candidate: str | None = Query(default=None)):
        return {"reports": platform.deployments.gate_reports(candidate)}

    @app.post("/admin/promote", dependencies=[admin])
    def admin_promote(req: PromoteRequest):
        deployment = platform.promote(
            req.environment, req.version_id, req.schedule, req.steps, actor="admin-api"
        )
        return {"deployment": deployment.to_dict()}

    @app.post("/admin/rollback", dependencies=[admin])
    def admin_rollback(req: RollbackRequest):
        deployment = platform.rollback(req.environment, req.epoch, actor="admin-api")
        return {"deployment": deployment.to_dict()}

    @app.get("/admin/shadow-report", dependencies=[admin])
    def admin_shadow_report(
        serving: str = Query(...),
        shadow: str = Query(...),
        min_samples: int | None = Query(default=None),
    ):
        platform.engine.shadow.flush()
        return {
            "report": platform.deployments.shadow_compare(
                platform.kb, serving, shadow, min_samples=min_samples
            )
        }

    @app.get("/admin/audit", dependencies=[admin])
    def admin_audit():
        return {"entries": platform.audit.entries}

    @app.post("/admin/drill", dependencies=[admin])
    def admin_drill():
        return {"drill": run_drill(platform)}

    return app


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted (AddressInUse surfaces from the
    socket bind)."""
    import uvicorn

    platform = Platform(config)
    app = create_app(platform, config)
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    finally:
        platform.close()
