"""HTTP service: fix ingestion, content submission, nearby queries, user
profiles, and admin train/eval.

All bodies are JSON.  Every error response is ``{"code": ..., "message":
...}`` with a stable machine code from the closed set documented in
docs/api.md: invalid_state, validation, unknown_user, out_of_order_fix,
duplicate_id, radius_too_large, malformed_dataset, missing_dataset,
invalid_k, too_few_records.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import vocab
from .bayes import (
    BayesNet,
    TooFewRecords,
    UnknownState,
    default_structure,
    learn_parameters,
    load_model,
    read_dataset,
    save_model,
)
from .geo import GeoPoint
from .selector import SelectionPipeline, SelectorConfig, UserContext
from .sim import eval_report
from .store import (
    ContentRecord,
    ContentStore,
    DuplicateId,
    Fix,
    OutOfOrderFix,
    TimeWindow,
    ValidationError,
)

PROFILES_FILENAME = "profiles.jsonl"
MODEL_FILENAME = "model.json"

PROFILE_FIELDS = ("locality", "willingness", "purpose", "walk_ability")
REQUIRED_PROFILE_FIELDS = ("locality", "willingness")


class ApiError(Exception):
    """An error with a stable machine code and a transport status."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _bad_request(code: str, message: str) -> ApiError:
    return ApiError(400, code, message)


def _validate_profile(body: object) -> dict[str, str]:
    if not isinstance(body, dict):
        raise _bad_request("invalid_state", "profile body must be a JSON object")
    profile: dict[str, str] = {}
    for name in PROFILE_FIELDS:
        value = body.get(name)
        if value is None:
            if name in REQUIRED_PROFILE_FIELDS:
                raise _bad_request("invalid_state", f"profile field {name!r} is required")
            continue
        if value not in vocab.VARIABLES[name].states:
            raise _bad_request("invalid_state", f"{value!r} is not a state of {name!r}")
        profile[name] = value
    return profile


def _parse_content_body(body: object) -> ContentRecord:
    if not isinstance(body, dict):
        raise _bad_request("validation", "content body must be a JSON object")
    location = body.get("location")
    if not isinstance(location, dict) or "lat" not in location or "lon" not in location:
        raise _bad_request("validation", "content needs location {lat, lon}")
    window = body.get("time_window")
    try:
        record = ContentRecord(
            id=body.get("id") or f"c-{uuid.uuid4().hex[:12]}",
            kind=body.get("kind", ""),
            category=body.get("category", "dynamic"),
            barrier_class=body.get("barrier_class", ""),
            title=body.get("title", ""),
            comment=body.get("comment", ""),
            tags=tuple(body.get("tags", ())),
            photo_ref=body.get("photo_ref", ""),
            time_window=None if window is None else TimeWindow(int(window["start"]), int(window["end"])),
            location=GeoPoint(float(location["lat"]), float(location["lon"])),
            submitter=body.get("submitter", ""),
            created_at=float(body.get("created_at", time.time())),
        )
        record.validate()
    except (ValidationError, ValueError, TypeError, KeyError) as exc:
        raise _bad_request("validation", f"bad content record: {exc}") from None
    return record


def _notification_payload(notification) -> dict:
    return {
        "content": notification.content.to_json_dict(),
        "distance": notification.distance,
        "bearing": notification.bearing,
        "importance": notification.importance,
        "reactions": [[r, p] for r, p in notification.reactions],
        "neglect_probability": notification.neglect_probability,
    }


class ServiceState:
    """Everything the endpoints share: store, profiles, pipeline, and the
    most recently trained dataset reference."""

    def __init__(self, data_dir: Optional[Path], config: SelectorConfig, net: Optional[BayesNet]):
        self.data_dir = data_dir
        self.config = config
        self._train_lock = threading.Lock()
        self.last_dataset: Optional[Path] = None

        if data_dir is not None:
            data_dir.mkdir(parents=True, exist_ok=True)
            self.store = ContentStore.load(data_dir, stationary_threshold_m=config.stationary_threshold_m)
            self.store.bind_dir(data_dir)
            self.profiles = self._load_profiles(data_dir / PROFILES_FILENAME)
            if net is None and (data_dir / MODEL_FILENAME).exists():
                net = load_model(data_dir / MODEL_FILENAME)
        else:
            self.store = ContentStore(stationary_threshold_m=config.stationary_threshold_m)
            self.profiles = {}

        if net is None:
            net = learn_parameters(default_structure(), [], alpha=1.0)  # uniform fallback
        self.pipeline = SelectionPipeline(self.store, net, config=config)

    @staticmethod
    def _load_profiles(path: Path) -> dict[str, dict]:
        profiles: dict[str, dict] = {}
        if path.exists():
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        entry = json.loads(line)
                        profiles[entry["user_id"]] = {k: v for k, v in entry.items() if k != "user_id"}
        return profiles

    def add_profile(self, profile: dict) -> str:
        user_id = f"u-{uuid.uuid4().hex[:12]}"
        self.profiles[user_id] = profile
        if self.data_dir is not None:
            with open(self.data_dir / PROFILES_FILENAME, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"user_id": user_id, **profile}, ensure_ascii=False) + "\n")
        return user_id

    def train(self, dataset_path: Path, alpha: float = 1.0) -> int:
        try:
            records = read_dataset(dataset_path)
        except FileNotFoundError:
            raise _bad_request("malformed_dataset", f"dataset {dataset_path} not found") from None
        except (UnknownState, ValueError) as exc:
            raise _bad_request("malformed_dataset", str(exc)) from None
        with self._train_lock:
            net = learn_parameters(default_structure(), records, alpha=alpha)
            self.pipeline.set_net(net)  # atomic swap: polls never see a half-trained net
            self.last_dataset = dataset_path
            if self.data_dir is not None:
                save_model(net, self.data_dir / MODEL_FILENAME)
        return len(records)


def create_app(
    data_dir: Optional[str | Path] = None,
    config: SelectorConfig = SelectorConfig(),
    net: Optional[BayesNet] = None,
    web_dir: Optional[str | Path] = None,
) -> FastAPI:
    """Build the service; state persists under ``data_dir`` when given."""
    config.validate()
    state = ServiceState(Path(data_dir) if data_dir else None, config, net)
    app = FastAPI(title="walknotify", docs_url=None, redoc_url=None)
    app.state.service = state
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/users", status_code=201)
    async def create_user(request: Request):
        profile = _validate_profile(await _json_body(request))
        return {"user_id": state.add_profile(profile)}

    @app.post("/users/{user_id}/fix")
    async def post_fix(user_id: str, request: Request):
        body = await _json_body(request)
        if user_id not in state.profiles:
            raise ApiError(404, "unknown_user", f"unknown user {user_id!r}")
        if not isinstance(body, dict):
            raise _bad_request("validation", "fix body must be a JSON object")
        try:
            point = GeoPoint(float(body["lat"]), float(body["lon"]))
            ts = float(body["ts"])
        except (KeyError, TypeError, ValueError) as exc:
            raise _bad_request("validation", f"bad fix body: {exc}") from None
        context_fields = dict(state.profiles[user_id])
        for name in ("weather", "temperature"):
            value = body.get(name)
            if value is None:
                raise _bad_request("invalid_state", f"fix must carry {name!r}")
            if value not in vocab.VARIABLES[name].states:
                raise _bad_request("invalid_state", f"{value!r} is not a state of {name!r}")
            context_fields[name] = value
        ctx = UserContext(**context_fields)

        fix = Fix(user_id=user_id, point=point, at=ts)
        try:
            heading = state.store.append_fix(fix)
        except OutOfOrderFix as exc:
            raise ApiError(409, "out_of_order_fix", str(exc)) from None
        decision = state.pipeline.poll(fix, heading, ctx)

        payload: dict = {
            "notification": None,
            "heading": heading.heading,
            "speed": heading.speed,
            "suppressed": [{"content_id": s.content_id, "reason": s.reason} for s in decision.suppressed],
        }
        if decision.notification is not None:
            payload["notification"] = _notification_payload(decision.notification)
        else:
            payload["map_center"] = {"lat": point.lat, "lon": point.lon}
        return payload

    @app.post("/contents", status_code=201)
    async def post_content(request: Request):
        record = _parse_content_body(await _json_body(request))
        try:
            content_id = state.store.put_content(record)
        except DuplicateId as exc:
            raise ApiError(409, "duplicate_id", str(exc)) from None
        return {"content_id": content_id}

    @app.get("/contents/near")
    def contents_near(lat: float, lon: float, r: float):
        if r <= 0:
            raise _bad_request("validation", "r must be positive")
        if r > config.max_query_radius_m:
            raise _bad_request(
                "radius_too_large", f"r={r:g} exceeds maximum {config.max_query_radius_m:g}"
            )
        try:
            center = GeoPoint(lat, lon)
        except ValueError as exc:
            raise _bad_request("validation", str(exc)) from None
        pairs = state.store.contents_near(center, r)
        return {"contents": [{"content": rec.to_json_dict(), "distance": d} for rec, d in pairs]}

    @app.post("/admin/train")
    async def admin_train(request: Request):
        body = await _json_body(request)
        if not isinstance(body, dict) or not body.get("dataset"):
            raise _bad_request("missing_dataset", "body must carry {'dataset': <path>}")
        count = state.train(Path(body["dataset"]), alpha=float(body.get("alpha", 1.0)))
        return {"records": count}

    @app.get("/admin/eval")
    def admin_eval(k: int = 3, dataset: Optional[str] = None, seed: int = 0, alpha: float = 1.0):
        if k < 2:
            raise _bad_request("invalid_k", f"k must be at least 2, got {k}")
        path = Path(dataset) if dataset else state.last_dataset
        if path is None:
            raise _bad_request("missing_dataset", "no dataset given and none trained yet")
        try:
            records = read_dataset(path)
        except FileNotFoundError:
            raise _bad_request("malformed_dataset", f"dataset {path} not found") from None
        except (UnknownState, ValueError) as exc:
            raise _bad_request("malformed_dataset", str(exc)) from None
        try:
            report = eval_report(records, k, seed=seed, alpha=alpha)
        except TooFewRecords as exc:
            raise _bad_request("too_few_records", str(exc)) from None
        return report.to_json_dict()

    if web_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=str(web_dir), html=True), name="webclient")

    return app


async def _json_body(request: Request) -> object:
    try:
        return await request.json()
    except Exception:
        raise _bad_request("validation", "body is not valid JSON") from None
