"""HTTP API for on-demand predictions, flipsets, and audits.

The session triple (model, action set, percentiles) is frozen at startup;
what-if exploration happens through per-request overrides that apply to a
copy of the action set and never mutate session state. Flipset responses are
serialized with the same canonical JSON writer as the CLI, so identical
inputs yield byte-identical bodies across both interfaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Mapping

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .actions import ACTIONABILITIES, ActionSetSpec, PercentileModel
from .audit import run_audit
from .costs import VARIANTS, CostSpec
from .errors import InputError
from .flipset import enumerate_actions, render_flipset
from .model import Dataset, LinearModel, load_dataset, predict
from .serialize import dumps_canonical
from .solver import build_problem

MAX_FEATURES = 512
MAX_ITEMS = 100
TABLE_VARIANTS = tuple(v for v in VARIANTS if v != "l2")


@dataclass(frozen=True)
class SessionState:
    """The immutable (model, action set, percentiles) triple behind every request."""

    model: LinearModel
    spec: ActionSetSpec
    percentiles: PercentileModel


class RequestError(Exception):
    def __init__(self, message: str, field: str | None = None, status: int = 400):
        super().__init__(message)
        self.field = field
        self.status = status


def _canonical(payload: Any, status: int = 200) -> Response:
    return Response(
        content=dumps_canonical(payload), media_type="application/json", status_code=status
    )


def _error(message: str, field: str | None = None, status: int = 400) -> Response:
    body: dict = {"error": message}
    if field is not None:
        body["field"] = field
    return JSONResponse(status_code=status, content=body)


def _require_object(body: Any) -> Mapping:
    if not isinstance(body, Mapping):
        raise RequestError("request body must be a JSON object")
    return body


def _parse_point(state: SessionState, body: Mapping) -> np.ndarray:
    raw = body.get("x")
    if not isinstance(raw, Mapping):
        raise RequestError("'x' must be an object of feature: value", field="x")
    values = []
    for name in state.model.feature_names:
        if name not in raw:
            raise RequestError(f"point is missing feature '{name}'", field=f"x.{name}")
        v = raw[name]
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise RequestError(f"feature '{name}' must be a finite number", field=f"x.{name}")
        values.append(float(v))
    return np.asarray(values)


def _apply_overrides(spec: ActionSetSpec, overrides: Any) -> ActionSetSpec:
    if overrides is None:
        return spec
    if not isinstance(overrides, Mapping):
        raise RequestError("'overrides' must be an object keyed by feature name", field="overrides")
    if len(overrides) > MAX_FEATURES:
        raise RequestError(f"at most {MAX_FEATURES} overrides per request", field="overrides")
    known = {f.name for f in spec}
    edited = []
    for f in spec:
        if f.name not in overrides:
            edited.append(f)
            continue
        entry = overrides[f.name]
        if not isinstance(entry, Mapping):
            raise RequestError(
                f"override for '{f.name}' must be an object", field=f"overrides.{f.name}"
            )
        allowed = {"actionability", "lb", "ub", "grid_size"}
        extra = set(entry) - allowed
        if extra:
            raise RequestError(
                f"unknown override key '{sorted(extra)[0]}' for feature '{f.name}'",
                field=f"overrides.{f.name}",
            )
        changes: dict = {}
        if "actionability" in entry:
            if entry["actionability"] not in ACTIONABILITIES:
                raise RequestError(
                    f"actionability must be one of {', '.join(ACTIONABILITIES)}",
                    field=f"overrides.{f.name}.actionability",
                )
            changes["actionability"] = entry["actionability"]
        for key in ("lb", "ub"):
            if key in entry:
                v = entry[key]
                if not isinstance(v, (int, float)) or isinstance(v, bool):
                    raise RequestError(
                        f"'{key}' must be a number", field=f"overrides.{f.name}.{key}"
                    )
                changes[key] = float(v)
        if "grid_size" in entry:
            changes["grid_size"] = entry["grid_size"]
        try:
            edited.append(replace(f, **changes))
        except InputError as e:
            raise RequestError(str(e), field=f"overrides.{f.name}") from None
    unknown = set(overrides) - known
    if unknown:
        raise RequestError(
            f"override names an unknown feature '{sorted(unknown)[0]}'", field="overrides"
        )
    try:
        return ActionSetSpec(tuple(edited))
    except InputError as e:
        raise RequestError(str(e), field="overrides") from None


def _parse_cost(body: Mapping) -> CostSpec:
    variant = body.get("cost_variant", "total_log_pct")
    if variant not in TABLE_VARIANTS:
        raise RequestError(
            f"cost_variant must be one of {', '.join(TABLE_VARIANTS)}", field="cost_variant"
        )
    weights = body.get("weights")
    if weights is not None and not isinstance(weights, Mapping):
        raise RequestError("'weights' must be an object of feature: weight", field="weights")
    try:
        return CostSpec(variant=variant, weights=weights)
    except InputError as e:
        raise RequestError(str(e), field="weights") from None


def _parse_margin(body: Mapping) -> float:
    margin = body.get("margin", 0.0)
    if not isinstance(margin, (int, float)) or isinstance(margin, bool):
        raise RequestError("'margin' must be a nonnegative number", field="margin")
    if not (math.isfinite(margin) and margin >= 0):
        raise RequestError("'margin' must be a nonnegative number", field="margin")
    return float(margin)


SCHEMA = {
    "GET /v1/model": {
        "response": "model metadata: feature names, bounds, actionability, kinds",
    },
    "POST /v1/predict": {
        "request": {"x": "{feature: number, ...}"},
        "response": {"score": "number", "label": "-1 | 1"},
    },
    "POST /v1/flipset": {
        "request": {
            "x": "{feature: number, ...}",
            "overrides": "{feature: {actionability?, lb?, ub?, grid_size?}} (optional)",
            "cost_variant": f"one of {', '.join(TABLE_VARIANTS)} (default total_log_pct)",
            "T": f"1..{MAX_ITEMS} (default 5)",
            "margin": "number >= 0 (default 0)",
            "weights": "{feature: positive number} (optional)",
        },
        "response": "{prediction, items: [{changes, cost}], exhausted, caveat}",
        "errors": "422 when the point is already predicted +1",
    },
    "POST /v1/audit": {
        "request": {
            "rows": "[{feature: number, ...}, ...] or use dataset_path",
            "dataset_path": "server-side CSV path (alternative to rows)",
            "cost_variant": f"one of {', '.join(TABLE_VARIANTS)} (default max_pct)",
            "margin": "number >= 0 (default 0)",
        },
        "response": "audit report JSON",
    },
}


def create_app(
    model: LinearModel,
    spec: ActionSetSpec,
    percentiles: PercentileModel,
    frontend_dir: str | None = None,
) -> FastAPI:
    if model.dim > MAX_FEATURES:
        raise InputError(f"the service supports at most {MAX_FEATURES} features")
    spec.validate_for(model)
    state = SessionState(model=model, spec=spec, percentiles=percentiles)
    app = FastAPI(title="recoursekit", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestError)
    async def handle_request_error(_: Request, exc: RequestError) -> Response:
        return _error(str(exc), field=exc.field, status=exc.status)

    @app.exception_handler(InputError)
    async def handle_input_error(_: Request, exc: InputError) -> Response:
        return _error(str(exc))

    @app.exception_handler(Exception)
    async def handle_internal(_: Request, exc: Exception) -> Response:
        return _error("internal error", status=500)

    @app.get("/v1/model")
    async def model_metadata() -> Response:
        return _canonical(
            {
                "feature_names": list(state.model.feature_names),
                "intercept": state.model.intercept,
                "coefficients": {
                    n: c for n, c in zip(state.model.feature_names, state.model.coefficients)
                },
                "actions": [
                    {
                        "name": f.name,
                        "kind": f.kind,
                        "lb": f.lb,
                        "ub": f.ub,
                        "actionability": f.actionability,
                        "grid_size": f.grid_size,
                        "linked_group": f.linked_group,
                    }
                    for f in state.spec
                    if f.name in state.model.feature_names
                ],
                "cost_variants": list(TABLE_VARIANTS),
            }
        )

    @app.get("/v1/schema")
    async def schema() -> Response:
        return _canonical(SCHEMA)

    @app.post("/v1/predict")
    async def predict_point(request: Request) -> Response:
        body = _require_object(await _json_body(request))
        x = _parse_point(state, body)
        p = predict(state.model, x)
        return _canonical({"score": p.score, "label": p.label})

    @app.post("/v1/flipset")
    async def flipset_endpoint(request: Request) -> Response:
        body = _require_object(await _json_body(request))
        x = _parse_point(state, body)
        spec_used = _apply_overrides(state.spec, body.get("overrides"))
        cost_spec = _parse_cost(body)
        margin = _parse_margin(body)
        T = body.get("T", 5)
        if not isinstance(T, int) or isinstance(T, bool) or not (1 <= T <= MAX_ITEMS):
            raise RequestError(f"'T' must be an integer in 1..{MAX_ITEMS}", field="T")
        p = predict(state.model, x)
        if p.label == 1:
            raise RequestError(
                "the point is already predicted +1; no flipset is needed", status=422
            )
        problem = build_problem(
            state.model, x, spec_used, cost_spec, state.percentiles, margin=margin
        )
        fs = enumerate_actions(problem, T)
        doc = render_flipset(fs, prediction_score=p.score)
        return _canonical(doc.data)

    @app.post("/v1/audit")
    async def audit_endpoint(request: Request) -> Response:
        body = _require_object(await _json_body(request))
        cost_spec = _parse_cost({"cost_variant": body.get("cost_variant", "max_pct")})
        margin = _parse_margin(body)
        rows = body.get("rows")
        dataset_path = body.get("dataset_path")
        if (rows is None) == (dataset_path is None):
            raise RequestError("provide exactly one of 'rows' or 'dataset_path'", field="rows")
        if rows is not None:
            if not isinstance(rows, list) or not rows:
                raise RequestError("'rows' must be a non-empty array of objects", field="rows")
            matrix = []
            for i, entry in enumerate(rows):
                if not isinstance(entry, Mapping):
                    raise RequestError(f"row {i} is not an object", field=f"rows[{i}]")
                matrix.append(_parse_point(state, {"x": entry}))
            data = Dataset(feature_names=state.model.feature_names, rows=np.asarray(matrix))
        else:
            data = load_dataset(dataset_path)
        report = run_audit(
            state.model, data, state.spec, cost_spec, state.percentiles, margin=margin
        )
        return _canonical(report.to_json_dict())

    if frontend_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="explorer")

    return app


async def _json_body(request: Request) -> Any:
    try:
        return await request.json()
    except Exception:
        raise RequestError("request body is not valid JSON") from None
