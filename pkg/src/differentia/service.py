"""HTTP/JSON service over the campaign store.

All bodies are JSON; errors come back as {"code", "message"} with a status
class matching the failure (404 unknown ids, 409 conflicts, 400 everything
else). Image bytes are served from a configured root directory, optionally
cropped server-side; the annotation engine itself never touches pixels.
"""

from __future__ import annotations

import io
import json
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles

from .campaign import CampaignStore, export_text, task_to_dict
from .errors import (
    DifferentiaError,
    DuplicateCellError,
    DuplicateRecordError,
    UnknownEntityError,
    UnknownNodeError,
)
from .hierarchy import dump_hierarchy, reconstruct_definition
from .localization import LocalizationStrategy, image_from_dict, image_to_dict, load_manifest
from .outcomes import GoldAssignment
from .traversal import TERMINAL, TraversalConfig, TerminalLabel, current_question

_NOT_FOUND = (UnknownEntityError, UnknownNodeError)
_CONFLICT = (DuplicateRecordError, DuplicateCellError)


def _status_for(exc: DifferentiaError) -> int:
    if isinstance(exc, _NOT_FOUND):
        return 404
    if isinstance(exc, _CONFLICT):
        return 409
    return 400


def gold_label_from_wire(h, value: str) -> TerminalLabel:
    if value == "DISCHARGED":
        return TerminalLabel.discharged()
    return TerminalLabel.for_node(h, value)


def create_app(
    store: CampaignStore,
    *,
    default_hierarchy: dict | None = None,
    image_root: Path | None = None,
    ui_dist: Path | None = None,
) -> FastAPI:
    app = FastAPI(title="differentia annotation service")

    @app.exception_handler(DifferentiaError)
    async def _domain_error(_request: Request, exc: DifferentiaError) -> JSONResponse:
        return JSONResponse(status_code=_status_for(exc), content={"code": exc.code, "message": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/campaigns", status_code=201)
    def create_campaign(body: dict) -> dict:
        if "hierarchy" in body:
            hierarchy_doc = body["hierarchy"]
        elif "hierarchy_path" in body:
            hierarchy_doc = json.loads(Path(body["hierarchy_path"]).read_text(encoding="utf-8"))
        elif default_hierarchy is not None:
            hierarchy_doc = default_hierarchy
        else:
            raise UnknownEntityError("no hierarchy given and the service has no default")
        if "images" in body:
            images = [image_from_dict(d) for d in body["images"]]
            dataset_ref = body.get("dataset_ref", "inline")
        elif "dataset_path" in body:
            images = load_manifest(Path(body["dataset_path"]))
            dataset_ref = body["dataset_path"]
        else:
            images = []
            dataset_ref = body.get("dataset_ref", "empty")
        config = TraversalConfig(
            auto_accept_nonvisual_root=bool(body.get("auto_accept_nonvisual_root", False))
        )
        campaign = store.create_campaign(
            hierarchy_doc,
            images,
            LocalizationStrategy(body.get("strategy", "bounding_polygons")),
            body.get("scheme", "differentia"),
            config,
            campaign_id=body.get("campaign_id"),
            dataset_ref=dataset_ref,
        )
        return campaign.to_dict()

    @app.get("/campaigns")
    def list_campaigns() -> dict:
        return {"campaigns": [c.to_dict() for c in store.campaigns()]}

    @app.get("/campaigns/{campaign_id}")
    def get_campaign(campaign_id: str) -> dict:
        out = store.campaign(campaign_id).to_dict()
        out["n_tasks"] = len(store.tasks(campaign_id))
        return out

    @app.post("/campaigns/{campaign_id}/open")
    def open_campaign(campaign_id: str) -> dict:
        campaign = store.open_campaign(campaign_id)
        return {**campaign.to_dict(), "n_tasks": len(store.tasks(campaign_id))}

    @app.post("/campaigns/{campaign_id}/close")
    def close_campaign(campaign_id: str) -> dict:
        return store.close_campaign(campaign_id).to_dict()

    @app.get("/campaigns/{campaign_id}/hierarchy")
    def get_hierarchy(campaign_id: str) -> dict:
        h = store.hierarchy(campaign_id)
        doc = dump_hierarchy(h)
        for entry in doc["nodes"]:
            entry["definition_path"] = reconstruct_definition(h, entry["id"])
        return doc

    @app.post("/campaigns/{campaign_id}/gold")
    def load_gold(campaign_id: str, body: dict) -> dict:
        h = store.hierarchy(campaign_id)
        golds = [
            GoldAssignment(task_id=e["task_id"], gold=gold_label_from_wire(h, e["label"]))
            for e in body.get("golds", [])
        ]
        n = store.load_gold(campaign_id, golds)
        return {"loaded": n}

    @app.get("/campaigns/{campaign_id}/tasks")
    def list_tasks(campaign_id: str) -> dict:
        return {"tasks": [task_to_dict(t) for t in store.tasks(campaign_id)]}

    @app.get("/campaigns/{campaign_id}/images")
    def list_images(campaign_id: str) -> dict:
        return {"images": [image_to_dict(img) for img in store.images(campaign_id)]}

    @app.get("/campaigns/{campaign_id}/tasks/next")
    def next_task(campaign_id: str, annotator: str = Query(...)) -> dict:
        task, session_id, remaining = store.next_task(campaign_id, annotator)
        return {
            "task": task_to_dict(task) if task else None,
            "session_id": session_id,
            "remaining": remaining,
        }

    @app.get("/campaigns/{campaign_id}/records")
    def list_records(campaign_id: str) -> dict:
        out = []
        for record in store.records(campaign_id):
            entry = record.to_dict()
            suggestion = store.suggestion_for(campaign_id, record.task_id, record.annotator_id)
            if suggestion is not None:
                entry["suggested_label"] = suggestion
            out.append(entry)
        return {"records": out}

    @app.get("/campaigns/{campaign_id}/stats")
    def campaign_stats(campaign_id: str) -> dict:
        return store.stats(campaign_id).to_dict()

    @app.get("/campaigns/{campaign_id}/export")
    def export(campaign_id: str, scheme: str = "differentia", seed: int | None = None) -> Response:
        lines = store.export_dataset(campaign_id, scheme, seed)
        return PlainTextResponse(export_text(lines), media_type="application/x-ndjson")

    @app.post("/sessions", status_code=201)
    def start_session(body: dict) -> dict:
        task_id = body["task_id"]
        annotator_id = body["annotator_id"]
        campaign_id = body.get("campaign_id")
        if campaign_id is None:
            owners = [
                c.campaign_id
                for c in store.campaigns()
                if any(t.task_id == task_id for t in store.tasks(c.campaign_id))
            ]
            if len(owners) != 1:
                raise UnknownEntityError(
                    f"task {task_id!r} matches {len(owners)} campaigns; pass campaign_id"
                )
            campaign_id = owners[0]
        session = store.start_session(campaign_id, task_id, annotator_id)
        return _session_payload(store, session.session_id)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return _session_payload(store, session_id)

    @app.get("/sessions/{session_id}/question")
    def get_question(session_id: str) -> dict:
        return _session_payload(store, session_id)

    @app.post("/sessions/{session_id}/suggestion")
    def post_suggestion(session_id: str, body: dict) -> dict:
        store.add_suggestion(session_id, str(body.get("text", "")))
        return {"ok": True}

    @app.post("/sessions/{session_id}/answer")
    def post_answer(session_id: str, body: dict) -> dict:
        _session, record = store.submit_answer(
            session_id,
            body["value"],
            index=body.get("index"),
            latency_ms=body.get("latency_ms"),
        )
        payload = _session_payload(store, session_id)
        payload["recorded"] = record is not None
        if record is not None:
            payload["record_id"] = record.record_id
        return payload

    @app.get("/images/{image_id}")
    def get_image(
        image_id: str, campaign: str | None = None, crop: str | None = None
    ) -> Response:
        if image_root is None:
            raise UnknownEntityError("image serving is not configured (no image root)")
        image = store.image(campaign, image_id) if campaign else store.find_image(image_id)
        path = (image_root / image.uri).resolve()
        if not str(path).startswith(str(image_root.resolve())):
            raise UnknownEntityError(f"image uri {image.uri!r} escapes the image root")
        if not path.is_file():
            raise UnknownEntityError(f"image file {image.uri!r} not found")
        data = path.read_bytes()
        media_type = "image/png" if path.suffix.lower() == ".png" else "image/jpeg"
        if crop:
            try:
                x0, y0, x1, y1 = (float(v) for v in crop.split(","))
            except ValueError:
                raise DifferentiaError(
                    f"bad crop spec {crop!r}; expected x0,y0,x1,y1", code="bad-crop"
                ) from None
            from PIL import Image

            with Image.open(io.BytesIO(data)) as img:
                boxed = img.crop((int(x0), int(y0), int(x1), int(y1)))
                out = io.BytesIO()
                boxed.save(out, format="PNG")
                return Response(content=out.getvalue(), media_type="image/png")
        return Response(content=data, media_type=media_type)

    if ui_dist is not None and Path(ui_dist).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dist), html=True), name="ui")

    return app


def _session_payload(store: CampaignStore, session_id: str) -> dict[str, Any]:
    session, hierarchy = store.get_session(session_id)
    payload: dict[str, Any] = {"session": session.to_dict()}
    if session.state == TERMINAL:
        payload["question"] = None
        payload["terminal"] = session.result.to_dict()
    else:
        question = current_question(hierarchy, session)
        payload["question"] = question.to_dict()
        payload["terminal"] = None
    return payload
