"""HTTP API over one immutable snapshot + fitted models.

Stateless per request except the sequence store, which appends exploration
results to a JSONL file through a single-writer lock. Every response carries
the snapshot checksum so a client can detect staleness after a swap.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from .analytics import build_lens_frame, heatmap_values, rank_sequence
from .dataset import Snapshot, load_snapshot, relation_kind
from .dataset import query_series as _query_series
from .errors import (
    ClinicapError,
    NoClinicsError,
    SchemaMismatchError,
    UnknownUnitError,
)
from .features import build_schema, build_training_set
from .forecast import WhatIfScenario, predict_breakdown, run_whatif
from .ingest import UnitKind
from .regress import RegressionModel, compare_models
from .analytics import positive_rate

DEFAULT_LENS_A = 2.0
DEFAULT_LENS_B = 100.0


@dataclass
class AppConfig:
    snapshot_path: str
    model_paths: dict[str, str]
    host: str = "127.0.0.1"
    port: int = 8040
    default_unit_kind: str = "lga"
    lens_a: float = DEFAULT_LENS_A
    lens_b: float = DEFAULT_LENS_B
    calibrate_default: bool = True
    seed: int = 0
    sequences_path: str = "sequences.jsonl"

    @classmethod
    def from_file(cls, path: str | Path) -> "AppConfig":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls(
            snapshot_path=doc["snapshot_path"],
            model_paths=dict(doc["model_paths"]),
            host=doc.get("host", "127.0.0.1"),
            port=int(doc.get("port", 8040)),
            default_unit_kind=doc.get("default_unit_kind", "lga"),
            lens_a=float(doc.get("lens_a", DEFAULT_LENS_A)),
            lens_b=float(doc.get("lens_b", DEFAULT_LENS_B)),
            calibrate_default=bool(doc.get("calibrate_default", True)),
            seed=int(doc.get("seed", 0)),
            sequences_path=doc.get("sequences_path", "sequences.jsonl"),
        )


class SequenceStore:
    """Append-only store for saved exploration sequences."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: list[dict] = []
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                self._entries = [json.loads(line) for line in fh if line.strip()]

    def append(self, payload: dict) -> dict:
        with self._lock:
            payload = {**payload, "sequence_number": len(self._entries) + 1}
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(payload, sort_keys=True) + "\n")
            self._entries.append(payload)
            return payload

    def all(self) -> list[dict]:
        with self._lock:
            return list(self._entries)

    def next_number(self) -> int:
        with self._lock:
            return len(self._entries) + 1


@dataclass
class AppState:
    snapshot: Snapshot
    models: dict[str, RegressionModel]
    config: AppConfig
    sequences: SequenceStore
    _compare_cache: dict = field(default_factory=dict)

    def model(self, name: str | None) -> tuple[str, RegressionModel]:
        if name is None:
            name = next(iter(self.models))
        if name not in self.models:
            raise UnknownUnitError(f"no model named {name!r}")
        return name, self.models[name]


def check_model_compatibility(model: RegressionModel) -> None:
    """The model's stored schema must be one this code produces."""
    expected = build_schema(model.schema.window)
    if model.schema.hash != expected.hash:
        raise SchemaMismatchError(
            "model feature schema does not match the engine's schema "
            f"(window {model.schema.window})")


def load_state(config: AppConfig) -> AppState:
    snapshot = load_snapshot(config.snapshot_path)
    models = {}
    for name, path in config.model_paths.items():
        model = RegressionModel.load(path)
        check_model_compatibility(model)
        models[name] = model
    if not models:
        raise ClinicapError("at least one model is required")
    return AppState(snapshot=snapshot, models=models, config=config,
                    sequences=SequenceStore(config.sequences_path))


def _parse_kind(value: str | None, default: str) -> UnitKind:
    try:
        return UnitKind((value or default).lower())
    except ValueError:
        raise ClinicapError(f"unknown unit kind {value!r}")


def _parse_date(value: str, name: str) -> date:
    try:
        return date.fromisoformat(value)
    except (TypeError, ValueError):
        raise ClinicapError(f"bad {name} date {value!r}; expected YYYY-MM-DD")


def create_app(state: AppState) -> FastAPI:
    app = FastAPI(title="clinic capacity engine", version="0.1.0")
    ds = state.snapshot.dataset
    checksum = state.snapshot.checksum

    def ok(payload: dict) -> JSONResponse:
        return JSONResponse({"snapshot_checksum": checksum, **payload})

    @app.exception_handler(ClinicapError)
    async def clinicap_error_handler(_: Request, exc: ClinicapError):
        status = 400
        if isinstance(exc, (UnknownUnitError, NoClinicsError)):
            status = 404
        elif isinstance(exc, SchemaMismatchError):
            status = 409
        return JSONResponse({"error": type(exc).__name__, "message": str(exc)},
                            status_code=status)

    @app.get("/api/meta")
    def meta():
        first, last = ds.period
        return ok({
            "period": [first.isoformat(), last.isoformat()],
            "units": {
                kind.value: len(ds.units_with_clinics(kind))
                for kind in (UnitKind.LGA, UnitKind.POSTCODE)
            },
            "n_clinics": len(ds.clinics),
            "n_interventions": len(ds.interventions),
            "models": sorted(state.models),
            "defaults": {
                "unit_kind": state.config.default_unit_kind,
                "lens_a": state.config.lens_a,
                "lens_b": state.config.lens_b,
                "calibrate": state.config.calibrate_default,
            },
            "snapshot_created_at": state.snapshot.created_at,
            "feature_schema": build_schema().to_descriptor(),
        })

    @app.get("/api/units")
    def units(kind: str | None = None):
        unit_kind = _parse_kind(kind, state.config.default_unit_kind)
        out = []
        for u in ds.units_with_clinics(unit_kind):
            rel, n = relation_kind(ds, u, unit_kind)
            demo = ds.demographic_for(u)
            out.append({
                "unit_id": u,
                "clinic_count": n,
                "relation": rel.value,
                "population": demo.population if demo else None,
                "density": demo.density if demo else None,
            })
        return ok({"kind": unit_kind.value, "units": out})

    @app.get("/api/units/{unit_id}/clinics")
    def unit_clinics(unit_id: str, kind: str | None = None):
        unit_kind = _parse_kind(kind, state.config.default_unit_kind)
        clinics = ds.clinics_in_unit(unit_kind, unit_id)
        if not clinics:
            raise UnknownUnitError(f"no clinics for {unit_kind.value} unit {unit_id!r}")
        return ok({"unit_id": unit_id, "clinics": [
            {
                "clinic_id": c.clinic_id,
                "name": c.name,
                "lga_id": c.lga_id,
                "postcode": c.postcode,
                "latitude": c.latitude,
                "longitude": c.longitude,
                "factors": [int(x) for x in c.factors],
                "schedule": c.schedule,
            }
            for c in clinics
        ]})

    @app.get("/api/series")
    def series(id: str, unit_kind: str | None = None,
               from_: str | None = Query(default=None, alias="from"),
               to: str | None = None):
        kind = _parse_kind(unit_kind, state.config.default_unit_kind)
        first, last = ds.period
        d1 = _parse_date(from_, "from") if from_ else first
        d2 = _parse_date(to, "to") if to else last
        rows = _query_series(ds, kind, id, d1, d2)
        return ok({"unit_id": id, "unit_kind": kind.value, "days": [
            {
                "date": r.date.isoformat(),
                "tests": r.tests,
                "cases": r.cases,
                "imputed": r.imputed,
                "rate": round(positive_rate(r.tests, r.cases).rate, 4),
            }
            for r in rows
        ]})

    @app.get("/api/lens")
    def lens(ids: str, unit_kind: str | None = None,
             from_: str | None = Query(default=None, alias="from"),
             to: str | None = None, a: float | None = None, b: float | None = None,
             model: str | None = None, heat: int = 1):
        kind = _parse_kind(unit_kind, state.config.default_unit_kind)
        first, last = ds.period
        d1 = _parse_date(from_, "from") if from_ else first
        d2 = _parse_date(to, "to") if to else last
        unit_ids = [u for u in ids.split(",") if u]
        _, mdl = state.model(model)
        frame = build_lens_frame(ds, kind, unit_ids, d1, d2,
                                 a=a or state.config.lens_a,
                                 b=b or state.config.lens_b,
                                 model=mdl if heat else None)
        return ok(frame.to_payload())

    @app.get("/api/heatmap")
    def heatmap(ids: str, unit_kind: str | None = None,
                from_: str | None = Query(default=None, alias="from"),
                to: str | None = None, model: str | None = None):
        kind = _parse_kind(unit_kind, state.config.default_unit_kind)
        first, last = ds.period
        d1 = _parse_date(from_, "from") if from_ else first
        d2 = _parse_date(to, "to") if to else last
        unit_ids = [u for u in ids.split(",") if u]
        _, mdl = state.model(model)
        values = heatmap_values(ds, kind, unit_ids, d1, d2, mdl)
        return ok({"heat": values, "from": d1.isoformat(), "to": d2.isoformat()})

    @app.get("/api/models/compare")
    def models_compare(kind: str | None = None):
        unit_kind = _parse_kind(kind, state.config.default_unit_kind)
        key = unit_kind.value
        if key not in state._compare_cache:
            first, last = ds.period
            matrix = build_training_set(ds, unit_kind, first, last)
            table = compare_models(matrix, seed=state.config.seed)
            state._compare_cache[key] = {"rows": table.as_dicts(), "split": table.split}
        return ok(state._compare_cache[key])

    @app.get("/api/models/importance")
    def models_importance(model: str | None = None):
        name, mdl = state.model(model)
        return ok({"model": name, "importance": mdl.feature_importance()})

    @app.post("/api/predict")
    async def predict(request: Request):
        body = await request.json()
        try:
            kind = _parse_kind(body.get("unit_kind"), state.config.default_unit_kind)
            unit_id = body["unit_id"]
            d1 = _parse_date(body["from"], "from")
            d2 = _parse_date(body["to"], "to")
        except KeyError as exc:
            raise ClinicapError(f"missing field {exc}")
        calibrate = bool(body.get("calibrate", state.config.calibrate_default))
        _, mdl = state.model(body.get("model"))
        ps = predict_breakdown(mdl, ds, unit_id, d1, d2, calibrate, kind)
        return ok(ps.to_payload())

    @app.post("/api/whatif")
    async def whatif(request: Request):
        body = await request.json()
        scenario = WhatIfScenario.from_payload(body)
        _, mdl = state.model(body.get("model"))
        result = run_whatif(mdl, ds, scenario)
        return ok(result.to_payload())

    @app.get("/api/sequences")
    def sequences_list():
        return ok({"sequences": state.sequences.all()})

    @app.post("/api/sequences")
    async def sequences_save(request: Request):
        body = await request.json()
        try:
            kind = _parse_kind(body.get("unit_kind"), state.config.default_unit_kind)
            unit_ids = list(body["unit_ids"])
            d1 = _parse_date(body["from"], "from")
            d2 = _parse_date(body["to"], "to")
        except KeyError as exc:
            raise ClinicapError(f"missing field {exc}")
        seq = rank_sequence(ds, kind, unit_ids, d1, d2,
                            sequence_number=state.sequences.next_number())
        stored = state.sequences.append(seq.to_payload())
        return ok(stored)

    return app


def serve(config: AppConfig) -> None:
    import uvicorn

    state = load_state(config)
    app = create_app(state)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
