"""HTTP facade over the pipeline: sessions, sand uploads, plans, swatches, renders.

Session state lives on disk as plain JSON plus the uploaded image files, so
the service restarts idempotently and every artifact can be inspected or
backed up by hand. Mutations take a per-session lock; reads go straight to
the last atomically-written snapshot.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Form, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .config import DEFAULTS
from .convert import AssignmentTable, RenderJob, adjust_table, default_table, render, slot_map_json
from .imaging import RgbImage, decode_image, encode_png, mean_gray_rgb
from .planner import (
    MixturePlan,
    SandSample,
    attach_images,
    build_plan,
    plan_from_document,
    plan_to_document,
    plan_to_json,
    recipe_csv,
)
from .texture import SynthesisParams, derive_slot_seed, synthesize

MAX_UPLOAD_BYTES = 32 * 1024 * 1024
SYNC_RENDER_MAX_SIDE = 512


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str) -> None:
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class Session:
    id: str
    seed: int
    created_at: str
    sand_counter: int = 0
    sands: list[dict] = field(default_factory=list)
    plan: dict | None = None
    table: list[int] | None = None

    def __post_init__(self) -> None:
        if self.plan is not None:
            if self.table is None or len(self.table) - 1 != self.plan["set_size"]:
                raise ValueError("table size must match plan set size")

    def to_document(self) -> dict:
        return {
            "id": self.id,
            "seed": self.seed,
            "created_at": self.created_at,
            "sand_counter": self.sand_counter,
            "sands": self.sands,
            "plan": self.plan,
            "table": self.table,
        }

    @classmethod
    def from_document(cls, doc: dict) -> "Session":
        return cls(
            id=doc["id"],
            seed=doc["seed"],
            created_at=doc["created_at"],
            sand_counter=doc.get("sand_counter", 0),
            sands=doc.get("sands", []),
            plan=doc.get("plan"),
            table=doc.get("table"),
        )

    def public_view(self) -> dict:
        return {
            "id": self.id,
            "seed": self.seed,
            "created_at": self.created_at,
            "sands": [
                {
                    "id": s["id"],
                    "name": s["name"],
                    "mean_gray": s["mean_gray"],
                    "source_file": s["source_file"],
                }
                for s in self.sands
            ],
            "set_size": self.plan["set_size"] if self.plan else None,
            "table": self.table,
            "has_plan": self.plan is not None,
        }


class SessionStore:
    def __init__(self, root: Path) -> None:
        self.root = Path(root)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        (self.root / "renders").mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._pending_renders: dict[str, str] = {}

    # -- session documents ------------------------------------------------

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def session_dir(self, session_id: str) -> Path:
        return self.root / "sessions" / session_id

    def _session_file(self, session_id: str) -> Path:
        return self.session_dir(session_id) / "session.json"

    def save(self, session: Session) -> None:
        target = self._session_file(session.id)
        target.parent.mkdir(parents=True, exist_ok=True)
        tmp = target.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(session.to_document(), indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, target)

    def load(self, session_id: str) -> Session:
        path = self._session_file(session_id)
        if not path.exists():
            raise ApiError(404, "session_not_found", f"no session {session_id}")
        return Session.from_document(json.loads(path.read_text(encoding="utf-8")))

    def create_session(self, seed: int) -> Session:
        session = Session(
            id=uuid.uuid4().hex,
            seed=seed,
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        self.save(session)
        return session

    # -- sands -------------------------------------------------------------

    def add_sand(self, session_id: str, filename: str, data: bytes) -> dict:
        if len(data) > MAX_UPLOAD_BYTES:
            raise ApiError(413, "too_large", f"upload exceeds {MAX_UPLOAD_BYTES} bytes")
        try:
            image = decode_image(data, filename)
        except (OSError, ValueError) as exc:
            raise ApiError(400, "bad_image", f"cannot decode {filename}: {exc}")
        with self.lock(session_id):
            session = self.load(session_id)
            session.sand_counter += 1
            sand_id = f"s{session.sand_counter:02d}"
            suffix = Path(filename).suffix.lower()
            if suffix not in (".png", ".jpg", ".jpeg"):
                suffix = ".png"
            stored = f"{sand_id}{suffix}"
            sands_dir = self.session_dir(session_id) / "sands"
            sands_dir.mkdir(parents=True, exist_ok=True)
            (sands_dir / stored).write_bytes(data)
            entry = {
                "id": sand_id,
                "name": Path(filename).stem,
                "mean_gray": mean_gray_rgb(image).mean,
                "source_file": filename,
                "stored_file": stored,
            }
            session.sands.append(entry)
            self._invalidate_plan(session)
            self.save(session)
            return entry

    def delete_sand(self, session_id: str, sand_id: str) -> None:
        with self.lock(session_id):
            session = self.load(session_id)
            entry = next((s for s in session.sands if s["id"] == sand_id), None)
            if entry is None:
                raise ApiError(404, "sand_not_found", f"no sand {sand_id}")
            session.sands.remove(entry)
            stored = self.session_dir(session_id) / "sands" / entry["stored_file"]
            if stored.exists():
                stored.unlink()
            self._invalidate_plan(session)
            self.save(session)

    def _invalidate_plan(self, session: Session) -> None:
        session.plan = None
        session.table = None
        self._clear_swatch_cache(session.id)

    def _clear_swatch_cache(self, session_id: str) -> None:
        cache = self.session_dir(session_id) / "swatches"
        if cache.exists():
            for item in cache.iterdir():
                item.unlink()

    def _load_sand_image(self, session_id: str, entry: dict) -> RgbImage:
        stored = self.session_dir(session_id) / "sands" / entry["stored_file"]
        return decode_image(stored.read_bytes(), entry["source_file"])

    def _samples(self, session: Session) -> list[SandSample]:
        return [
            SandSample.from_image(
                id=entry["id"],
                name=entry["name"],
                image=self._load_sand_image(session.id, entry),
                source_file=entry["source_file"],
            )
            for entry in session.sands
        ]

    # -- plan / table ------------------------------------------------------

    def build_session_plan(self, session_id: str, set_size: int, seed: int | None) -> MixturePlan:
        with self.lock(session_id):
            session = self.load(session_id)
            if seed is not None:
                session.seed = seed
            try:
                plan = build_plan(self._samples(session), set_size=set_size)
                table = default_table(set_size)
            except ValueError as exc:
                raise ApiError(422, "plan_error", str(exc))
            session.plan = plan_to_document(plan)
            session.table = list(table.thresholds)
            self._clear_swatch_cache(session_id)
            self.save(session)
            return plan

    def session_plan(self, session: Session, with_images: bool = False) -> MixturePlan:
        if session.plan is None:
            raise ApiError(404, "plan_missing", "no plan for this session")
        plan = plan_from_document(session.plan)
        if with_images:
            images = {
                entry["id"]: self._load_sand_image(session.id, entry) for entry in session.sands
            }
            plan = attach_images(plan, images)
        return plan

    def adjust_session_table(self, session_id: str, index: int, threshold: int) -> list[int]:
        with self.lock(session_id):
            session = self.load(session_id)
            if session.table is None:
                raise ApiError(404, "plan_missing", "no plan for this session")
            try:
                table = adjust_table(AssignmentTable(tuple(session.table)), index, threshold)
            except ValueError as exc:
                raise ApiError(422, "threshold_collision", str(exc))
            session.table = list(table.thresholds)
            self.save(session)
            return session.table

    # -- swatches ------------------------------------------------------------

    def swatch_png(self, session_id: str, slot: int) -> bytes:
        session = self.load(session_id)
        plan = self.session_plan(session)
        if not 1 <= slot <= plan.set_size:
            raise ApiError(404, "slot_not_found", f"no slot {slot}")
        cache_dir = self.session_dir(session_id) / "swatches"
        cache_dir.mkdir(parents=True, exist_ok=True)
        cached = cache_dir / f"seed{session.seed}_swatch_{slot:02d}.png"
        if cached.exists():
            return cached.read_bytes()
        plan = self.session_plan(session, with_images=True)
        spec = plan.mixtures[slot - 1]
        params = SynthesisParams(
            width=DEFAULTS.swatch_width,
            height=DEFAULTS.swatch_height,
            seed=derive_slot_seed(session.seed, slot),
        )
        texture = synthesize(spec, plan.sand_images(), params)
        data = encode_png(texture.image)
        cached.write_bytes(data)
        return data

    # -- renders -------------------------------------------------------------

    def render_dir(self, render_id: str) -> Path:
        return self.root / "renders" / render_id

    def start_render(self, session_id: str, filename: str, data: bytes, block_size: int) -> dict:
        if len(data) > MAX_UPLOAD_BYTES:
            raise ApiError(413, "too_large", f"upload exceeds {MAX_UPLOAD_BYTES} bytes")
        try:
            source = decode_image(data, filename)
        except (OSError, ValueError) as exc:
            raise ApiError(400, "bad_image", f"cannot decode {filename}: {exc}")
        session = self.load(session_id)
        plan = self.session_plan(session, with_images=True)
        if session.table is None:
            raise ApiError(404, "plan_missing", "no plan for this session")
        try:
            job = RenderJob(
                source=source,
                plan=plan,
                table=AssignmentTable(tuple(session.table)),
                block_size=block_size,
                seed=session.seed,
                swatch_params=SynthesisParams(
                    width=DEFAULTS.swatch_width,
                    height=DEFAULTS.swatch_height,
                    seed=session.seed,
                ),
            )
        except ValueError as exc:
            raise ApiError(422, "bad_render_job", str(exc))

        render_id = uuid.uuid4().hex
        target = self.render_dir(render_id)
        target.mkdir(parents=True, exist_ok=True)
        meta = {
            "render_id": render_id,
            "session_id": session_id,
            "block_size": block_size,
            "seed": session.seed,
            "created_at": datetime.now(timezone.utc).isoformat(),
        }
        (target / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

        if source.width <= SYNC_RENDER_MAX_SIDE and source.height <= SYNC_RENDER_MAX_SIDE:
            self._run_render(render_id, job)
            return {"render_id": render_id, "status": "done"}

        self._pending_renders[render_id] = "pending"
        worker = threading.Thread(target=self._run_render_async, args=(render_id, job), daemon=True)
        worker.start()
        return {"render_id": render_id, "status": "pending"}

    def _run_render(self, render_id: str, job: RenderJob) -> None:
        result = render(job)
        target = self.render_dir(render_id)
        tmp = target / "render.png.tmp"
        tmp.write_bytes(encode_png(result.image))
        (target / "slot_map.json").write_text(slot_map_json(result), encoding="utf-8")
        os.replace(tmp, target / "render.png")

    def _run_render_async(self, render_id: str, job: RenderJob) -> None:
        try:
            self._run_render(render_id, job)
        except Exception as exc:  # surfaced via render status
            self._pending_renders[render_id] = f"failed: {exc}"
            return
        self._pending_renders.pop(render_id, None)

    def render_status(self, render_id: str) -> str:
        target = self.render_dir(render_id)
        if (target / "render.png").exists():
            return "done"
        status = self._pending_renders.get(render_id)
        if status == "pending":
            return "pending"
        if status is not None:
            return status
        if (target / "meta.json").exists():
            return "failed: interrupted"
        return "unknown"


class SessionCreate(BaseModel):
    seed: int = DEFAULTS.seed


class PlanRequest(BaseModel):
    set_size: int = DEFAULTS.set_size
    seed: int | None = None


class TablePatch(BaseModel):
    index: int
    threshold: int


def create_app(state_dir: str | Path) -> FastAPI:
    store = SessionStore(Path(state_dir))
    app = FastAPI(title="sandtone", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(
            status_code=422, content={"code": "validation_error", "message": str(exc)}
        )

    @app.post("/sessions", status_code=201)
    async def create_session(body: SessionCreate | None = None) -> dict:
        seed = body.seed if body is not None else DEFAULTS.seed
        session = store.create_session(seed)
        return session.public_view()

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str) -> dict:
        return store.load(session_id).public_view()

    @app.post("/sessions/{session_id}/sands", status_code=201)
    async def upload_sand(session_id: str, file: UploadFile) -> dict:
        store.load(session_id)
        data = await file.read()
        entry = store.add_sand(session_id, file.filename or "upload.png", data)
        return {"sand_id": entry["id"], "mean_gray": entry["mean_gray"]}

    @app.delete("/sessions/{session_id}/sands/{sand_id}", status_code=204)
    async def delete_sand(session_id: str, sand_id: str) -> Response:
        store.delete_sand(session_id, sand_id)
        return Response(status_code=204)

    @app.post("/sessions/{session_id}/plan")
    async def create_plan(session_id: str, body: PlanRequest | None = None) -> Response:
        req = body if body is not None else PlanRequest()
        plan = store.build_session_plan(session_id, req.set_size, req.seed)
        return Response(content=plan_to_json(plan), media_type="application/json")

    @app.get("/sessions/{session_id}/plan")
    async def get_plan(session_id: str) -> Response:
        session = store.load(session_id)
        plan = store.session_plan(session)
        return Response(content=plan_to_json(plan), media_type="application/json")

    @app.get("/sessions/{session_id}/swatches/{slot}")
    async def get_swatch(session_id: str, slot: int) -> Response:
        return Response(content=store.swatch_png(session_id, slot), media_type="image/png")

    @app.patch("/sessions/{session_id}/table")
    async def patch_table(session_id: str, body: TablePatch) -> dict:
        thresholds = store.adjust_session_table(session_id, body.index, body.threshold)
        return {"thresholds": thresholds}

    @app.get("/sessions/{session_id}/recipe")
    async def get_recipe(session_id: str) -> Response:
        session = store.load(session_id)
        plan = store.session_plan(session)
        return Response(content=recipe_csv(plan), media_type="text/csv")

    @app.post("/sessions/{session_id}/render")
    async def post_render(
        session_id: str,
        source: UploadFile,
        block_size: int = Form(DEFAULTS.block_size),
    ) -> JSONResponse:
        data = await source.read()
        outcome = store.start_render(session_id, source.filename or "source.png", data, block_size)
        status = 200 if outcome["status"] == "done" else 202
        return JSONResponse(status_code=status, content=outcome)

    @app.get("/renders/{render_id}")
    async def get_render(render_id: str) -> Response:
        status = store.render_status(render_id)
        if status == "done":
            data = (store.render_dir(render_id) / "render.png").read_bytes()
            return Response(content=data, media_type="image/png")
        if status == "pending":
            return JSONResponse(status_code=202, content={"code": "pending", "message": "render in progress"})
        if status == "unknown":
            raise ApiError(404, "render_not_found", f"no render {render_id}")
        raise ApiError(500, "render_failed", status)

    @app.get("/renders/{render_id}/slot-map")
    async def get_slot_map(render_id: str) -> Response:
        status = store.render_status(render_id)
        if status == "done":
            data = (store.render_dir(render_id) / "slot_map.json").read_bytes()
            return Response(content=data, media_type="application/json")
        if status == "pending":
            return JSONResponse(status_code=202, content={"code": "pending", "message": "render in progress"})
        if status == "unknown":
            raise ApiError(404, "render_not_found", f"no render {render_id}")
        raise ApiError(500, "render_failed", status)

    return app
