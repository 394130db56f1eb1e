"""HTTP meta-registry over a :class:`~trustmesh.store.RegistryStore`.

Every JSON response carries the ``sequence`` of the snapshot it was computed
from. Reads are served from one immutable snapshot each; writes go through the
store's single writer. Error bodies are ``{code, message, details}``.
"""
from __future__ import annotations

import json

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from .dataspace import interop_check
from .documents import parse_profile_document
from .equivalence import MODES, equivalence_report
from .errors import (
    DocumentSyntaxError,
    EmptyUniverse,
    InconsistentFramework,
    MissingDataspaceExtension,
    PartitionViolated,
    PropositionAbsent,
    SchemaError,
    TrustMeshError,
    UnknownEcosystem,
)
from .fragility import WithdrawalEvent, withdrawal_impact
from .model import TrustProposition
from .relations import foreign_trust, trust_realm
from .store import RegistryStore, replay

_STATUS = {
    UnknownEcosystem: 404,
    DocumentSyntaxError: 400,
    SchemaError: 400,
    PartitionViolated: 409,
    PropositionAbsent: 409,
    InconsistentFramework: 409,
    EmptyUniverse: 409,
    MissingDataspaceExtension: 422,
}


def _error(status: int, code: str, message: str, **details) -> JSONResponse:
    return JSONResponse({"code": code, "message": message, "details": details}, status_code=status)


def _status_for(exc: TrustMeshError) -> int:
    for cls in type(exc).__mro__:
        if cls in _STATUS:
            return _STATUS[cls]
    return 400


def _proposition_from_body(body) -> TrustProposition:
    if not isinstance(body, dict):
        raise SchemaError("$", "body must be a JSON object")
    fields = ("ecoTrustScope", "ecoTSP", "ecoCredentialType")
    extra = sorted(set(body) - set(fields))
    if extra:
        raise SchemaError(extra[0], "unknown field")
    for name in fields:
        value = body.get(name)
        if not isinstance(value, str) or not value:
            raise SchemaError(name, "required non-empty string")
    return TrustProposition(body["ecoTrustScope"], body["ecoTSP"], body["ecoCredentialType"])


def create_app(store: RegistryStore) -> FastAPI:
    app = FastAPI(title="trustmesh meta-registry", version="1")
    app.state.store = store

    @app.exception_handler(TrustMeshError)
    async def _domain_error(request: Request, exc: TrustMeshError):
        return JSONResponse(exc.to_dict(), status_code=_status_for(exc))

    @app.exception_handler(RequestValidationError)
    async def _request_error(request: Request, exc: RequestValidationError):
        first = exc.errors()[0]
        field = ".".join(str(p) for p in first["loc"])
        return _error(400, "BadRequest", first["msg"], field=field)

    def snap():
        return store.refresh()

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/v1/ecosystems")
    def list_ecosystems():
        s = snap()
        return {"sequence": s.sequence, "ecosystems": s.universe.eco_ids}

    @app.get("/v1/ecosystems/{eco_id}")
    def get_ecosystem(eco_id: str):
        s = snap()
        return {"sequence": s.sequence, "document": s.document(eco_id)}

    @app.put("/v1/ecosystems/{eco_id}")
    async def put_ecosystem(eco_id: str, request: Request):
        doc = parse_profile_document(await request.body())
        if doc.ecoID != eco_id:
            return _error(409, "IdMismatch", "body ecoID differs from path", path=eco_id, body=doc.ecoID)
        s, created = await run_in_threadpool(store.ingest_with_status, doc)
        return JSONResponse(
            {"sequence": s.sequence, "ecoID": eco_id, "created": created},
            status_code=201 if created else 200,
        )

    @app.post("/v1/ecosystems/{eco_id}/withdrawals")
    async def post_withdrawal(eco_id: str, request: Request):
        try:
            body = json.loads(await request.body())
        except ValueError as exc:
            raise DocumentSyntaxError(str(exc), getattr(exc, "pos", 0)) from None
        t = _proposition_from_body(body)
        return await run_in_threadpool(_withdraw, store, eco_id, t)

    @app.get("/v1/trust")
    def get_trust(trustor: str, trustee: str, scope: str):
        s = snap()
        result = foreign_trust(s.universe[trustor], s.universe[trustee], scope)
        return {
            "sequence": s.sequence,
            "trustor": trustor,
            "trustee": trustee,
            "scope": scope,
            "trusts": result.trusts,
            "witnesses": [w.to_dict() for w in result.witnesses],
        }

    @app.get("/v1/realm")
    def get_realm(scope: str):
        s = snap()
        return {"sequence": s.sequence, "scope": scope, "ecosystems": sorted(trust_realm(s.universe, scope))}

    @app.get("/v1/equivalence")
    def get_equivalence(mode: str = "v2", scope: str | None = None):
        if mode not in MODES:
            return _error(400, "BadMode", f"mode must be one of {list(MODES)}", mode=mode)
        s = snap()
        report = equivalence_report(s.universe, mode, scope)
        return {"sequence": s.sequence, **report.to_dict()}

    @app.get("/v1/interop")
    def get_interop(a: str, b: str):
        s = snap()
        spaces = []
        for eco_id in (a, b):
            if eco_id not in s.universe:
                raise UnknownEcosystem(eco_id)
            if eco_id not in s.dataspaces:
                raise MissingDataspaceExtension(f"{eco_id!r} has no data-space extension", eco_id=eco_id)
            spaces.append(s.dataspaces[eco_id])
        report = interop_check(*spaces)
        return {"sequence": s.sequence, "a": a, "b": b, **report.to_dict()}

    @app.get("/v1/trqp/authorization")
    def get_authorization(ecosystem: str, tsp: str, scope: str, credential: str | None = None):
        s = snap()
        profile = s.universe[ecosystem]
        authorized = any(
            t.provider == tsp and t.scope == scope and (credential is None or t.credential == credential)
            for t in profile.propositions
        )
        return {
            "sequence": s.sequence,
            "ecosystem": ecosystem,
            "tsp": tsp,
            "scope": scope,
            "credential": credential,
            "authorized": authorized,
        }

    return app


def _withdraw(store: RegistryStore, eco_id: str, t: TrustProposition) -> dict:
    before = store.refresh()
    impact = withdrawal_impact(before.universe, WithdrawalEvent(eco_id, t))
    after = store.apply_withdrawal(eco_id, t)
    if after.sequence != before.sequence + 1:
        # another writer got in between; diff against the state actually replaced
        universe = replay(r for r in store.records() if r.sequence < after.sequence).universe
        impact = withdrawal_impact(universe, WithdrawalEvent(eco_id, t))
    return {"sequence": after.sequence, "impact": impact.to_dict()}
