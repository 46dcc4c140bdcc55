"""Local HTTP service exposing one campaign to the dashboard and scripts.

Mutations are serialized by a process-wide lock and follow a strict
persist-before-acknowledge rule: the campaign file on disk is rewritten
(atomically) before any 2xx response leaves the server, so an acknowledged
outcome survives a crash.  Clients may pass the ``state_version`` they last
saw with any mutation; a mismatch is rejected with 409 instead of silently
applying the change to state the client has not seen.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .campaign import Campaign, resolve_config
from .errors import (
    BeamError,
    BudgetExhausted,
    ConstraintError,
    SpaceError,
    StateError,
    StorageError,
    ValidationError,
    VersionConflict,
)
from .storage import load_campaign, read_seed_rows, save_campaign

__all__ = ["create_app"]


class ObservationIn(BaseModel):
    index: int | None = None
    values: list[float] | dict[str, float] | None = None
    outcome: int
    manual: bool = False
    state_version: int | None = None


class SeedImportIn(BaseModel):
    csv: str
    state_version: int | None = None


class ExtendBudgetIn(BaseModel):
    extra: int
    state_version: int | None = None


def _metrics_payload(campaign: Campaign) -> dict:
    m = campaign.metrics()
    return {
        "budget": m.budget,
        "experiments_used": m.experiments_used,
        "budget_remaining": m.budget_remaining,
        "seed_observations": m.seed_observations,
        "discovery_rate": m.discovery_rate,
        "total_successes": m.total_successes,
        "space_cardinality": m.space_cardinality,
        "fraction_explored": m.fraction_explored,
    }


def _values_by_name(space, named: dict[str, float]) -> list[float]:
    """Order a name-keyed value mapping along the space's axes."""
    names = [a.name for a in space.axes]
    unknown = sorted(set(named) - set(names))
    if unknown:
        raise ValidationError(f"unknown axis names: {', '.join(unknown)}")
    missing = [n for n in names if n not in named]
    if missing:
        raise ValidationError(f"missing axis values: {', '.join(missing)}")
    return [float(named[n]) for n in names]


def _suggestions_payload(campaign: Campaign) -> list[dict]:
    return [
        {
            "index": s.config.index,
            "values": list(s.config.values),
            "p": s.p,
            "beta": s.beta,
            "alpha": s.alpha,
            "suggested_at": s.suggested_at,
        }
        for s in campaign.pending
    ]


def create_app(
    campaign_path: str | Path,
    *,
    campaign: Campaign | None = None,
    frontend_dir: str | Path | None = None,
) -> FastAPI:
    """Build the service around one campaign file.

    ``campaign`` short-circuits the initial load (used when the caller just
    created the file); the file at ``campaign_path`` remains the single
    source of truth either way.
    """
    path = Path(campaign_path)
    state = campaign if campaign is not None else load_campaign(path)
    app = FastAPI(title="beam campaign service")
    app.state.campaign = state
    app.state.path = path
    app.state.lock = threading.Lock()

    def current() -> Campaign:
        return app.state.campaign

    def check_version(given: int | None) -> None:
        if given is not None and given != current().state_version:
            raise VersionConflict(
                f"state_version {given} is stale; campaign is at "
                f"{current().state_version}"
            )

    def persist() -> None:
        save_campaign(current(), app.state.path)

    # ------------------------------------------------------------------
    # error mapping
    # ------------------------------------------------------------------

    _STATUS = (
        (VersionConflict, 409, "version-conflict"),
        (BudgetExhausted, 409, "budget-exhausted"),
        (StateError, 409, "state"),
        (ConstraintError, 422, "constraint"),
        (SpaceError, 422, "off-grid"),
        (ValidationError, 422, "validation"),
        (StorageError, 500, "storage"),
    )

    @app.exception_handler(BeamError)
    async def _beam_error(request: Request, exc: BeamError) -> JSONResponse:
        for klass, code, label in _STATUS:
            if isinstance(exc, klass):
                return JSONResponse(
                    status_code=code,
                    content={
                        "error": label,
                        "detail": str(exc),
                        "state_version": current().state_version,
                    },
                )
        return JSONResponse(
            status_code=500, content={"error": "internal", "detail": str(exc)}
        )

    # ------------------------------------------------------------------
    # read endpoints
    # ------------------------------------------------------------------

    @app.get("/status")
    def get_status() -> dict:
        c = current()
        return {
            "state_version": c.state_version,
            "created_at": c.created_at,
            "space": {
                "axes": [
                    {
                        "name": a.name,
                        "low": a.low,
                        "high": a.high,
                        "step": a.step,
                        "cardinality": a.cardinality,
                    }
                    for a in c.space.axes
                ],
                "fixed_context": dict(c.space.fixed_context),
                "cardinality": c.space.cardinality,
            },
            "settings": {
                "budget": c.settings.budget,
                "batch_size": c.settings.batch_size,
                "policy": c.settings.policy,
                "k": c.settings.k,
                "gamma": c.settings.gamma,
                "pool_cap": c.settings.pool_cap,
                "rng_seed": c.settings.rng_seed,
            },
            "metrics": _metrics_payload(c),
            "pending_count": len(c.pending),
        }

    @app.get("/observations")
    def get_observations() -> dict:
        c = current()
        return {
            "state_version": c.state_version,
            "observations": [
                {
                    "index": o.config.index,
                    "values": list(o.config.values),
                    "outcome": o.outcome,
                    "origin": o.origin,
                    "recorded_at": o.recorded_at,
                }
                for o in c.dataset
            ],
        }

    @app.get("/suggestions")
    def get_suggestions() -> dict:
        c = current()
        # an open batch is a pure read; an empty one is materialized under
        # the writer lock and persisted before the response leaves
        if not c.pending:
            with app.state.lock:
                if not c.pending:
                    c.suggest()
                    persist()
        return {
            "state_version": c.state_version,
            "budget_remaining": c.budget_remaining,
            "suggestions": _suggestions_payload(c),
        }

    @app.get("/posterior-slice")
    def get_posterior_slice(
        x: str,
        y: str,
        pin: list[str] = Query(default=[]),
    ) -> dict:
        c = current()
        pinned: dict[str, float] = {}
        for item in pin:
            name, sep, raw = item.rpartition(":")
            if not sep or not name:
                raise ValidationError(
                    f"pin {item!r} must look like axis:value (e.g. feed:0.2)"
                )
            try:
                pinned[name] = float(raw)
            except ValueError:
                raise ValidationError(f"pin {item!r} has a non-numeric value")
        result = c.posterior_slice(x, y, pinned)
        result["state_version"] = c.state_version
        return result

    # ------------------------------------------------------------------
    # mutation endpoints (persist before acknowledge)
    # ------------------------------------------------------------------

    @app.post("/observations")
    def post_observation(body: ObservationIn) -> dict:
        with app.state.lock:
            check_version(body.state_version)
            c = current()
            values = body.values
            if isinstance(values, dict):
                values = _values_by_name(c.space, values)
            config = resolve_config(c.space, index=body.index, values=values)
            obs = c.record(config, body.outcome, manual=body.manual)
            persist()
            return {
                "state_version": c.state_version,
                "recorded": {
                    "index": obs.config.index,
                    "values": list(obs.config.values),
                    "outcome": obs.outcome,
                    "origin": obs.origin,
                    "recorded_at": obs.recorded_at,
                },
                "metrics": _metrics_payload(c),
            }

    @app.post("/seed-import")
    def post_seed_import(body: SeedImportIn) -> dict:
        with app.state.lock:
            check_version(body.state_version)
            c = current()
            rows = read_seed_rows(body.csv, c.space)
            imported = c.import_seed(rows)
            persist()
            return {
                "state_version": c.state_version,
                "imported": imported,
                "metrics": _metrics_payload(c),
            }

    @app.post("/extend-budget")
    def post_extend_budget(body: ExtendBudgetIn) -> dict:
        with app.state.lock:
            check_version(body.state_version)
            c = current()
            budget = c.extend_budget(body.extra)
            persist()
            return {
                "state_version": c.state_version,
                "budget": budget,
                "metrics": _metrics_payload(c),
            }

    # ------------------------------------------------------------------
    # static dashboard bundle, when one has been built
    # ------------------------------------------------------------------

    if frontend_dir is not None:
        bundle = Path(frontend_dir)
        if bundle.is_dir():
            app.mount("/", StaticFiles(directory=bundle, html=True), name="dashboard")

    return app
