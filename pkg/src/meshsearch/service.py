"""HTTP service: query, collection management, health, static thumbnails.

The service owns one immutable index snapshot at a time. Queries read
whatever snapshot is current; imports build a complete replacement under a
writer lock and publish it with a single attribute swap, so a query never
observes a half-built index.

All endpoints are versioned under /v1 and speak JSON. Validation failures
are 400s, an unknown collection is a 404, encoder trouble is a 502, and a
weighted sum that cancels to zero is reported as a 400 steering hint
rather than a server fault.
"""

from __future__ import annotations

import base64
import binascii
import math
import time
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field, field_validator

from . import catalog
from .encoder import EncoderConfig, EncoderGateway, RawInput
from .errors import (
    DimensionMismatchError,
    EncoderError,
    EncoderUnavailableError,
    MeshSearchError,
    UnknownCollectionError,
    ZeroNormError,
)
from .fusion import (
    MODALITY_PRECOMPUTED,
    MODALITY_TEXT,
    WeightedInput,
    fuse,
    normalize,
)
from .index import DEFAULT_K, VectorIndex, build_index

MAX_QUERY_INPUTS = 16
MAX_K = 100

WEIGHTS_CANCEL_DETAIL = "weights cancel: adjust weights"


@dataclass
class ServiceSettings:
    data_dir: Path
    encoder: EncoderConfig = field(default_factory=EncoderConfig.from_env)
    default_collection: str = ""


class QueryInputModel(BaseModel):
    modality: str
    payload: str | None = None
    embedding: list[float] | None = None
    weight: float = 1.0
    label: str = ""

    @field_validator("weight")
    @classmethod
    def _finite_weight(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("weight must be finite")
        return value


class QueryRequestModel(BaseModel):
    inputs: list[QueryInputModel] = Field(min_length=1, max_length=MAX_QUERY_INPUTS)
    collection_id: str = ""
    k: int = Field(default=DEFAULT_K, ge=1, le=MAX_K)


class ImportRequestModel(BaseModel):
    input_dir: str
    collection_id: str
    render_style: str = catalog.RENDER_TEXTURED


class _Registry:
    """Current snapshot of everything loaded from the data directory."""

    def __init__(
        self,
        index: VectorIndex,
        manifests: dict[str, catalog.CollectionManifest],
        assets: dict[str, catalog.AssetMeta],
    ) -> None:
        self.index = index
        self.manifests = manifests
        self.assets = assets


def _load_registry(data_dir: Path, dimension_hint: int) -> _Registry:
    manifests: dict[str, catalog.CollectionManifest] = {}
    assets: dict[str, catalog.AssetMeta] = {}
    records = []
    dimension = None
    for path in catalog.list_manifests(data_dir):
        manifest, recs = catalog.read_collection(path)
        manifests[manifest.collection_id] = manifest
        records.extend(recs)
        if dimension is None:
            dimension = manifest.dimension
        assets.update(
            catalog.read_asset_table(
                catalog.asset_table_path(data_dir, manifest.collection_id)
            )
        )
    index = build_index(records, dimension if dimension is not None else dimension_hint)
    return _Registry(index, manifests, assets)


def create_app(settings: ServiceSettings) -> FastAPI:
    app = FastAPI(title="meshsearch", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    data_dir = Path(settings.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    static_dir = data_dir / "static"
    static_dir.mkdir(exist_ok=True)

    app.state.settings = settings
    app.state.gateway = EncoderGateway(settings.encoder)
    app.state.registry = _load_registry(data_dir, settings.encoder.dimension)
    app.state.started_at = time.time()
    app.state.import_lock = threading.Lock()

    app.mount("/static", StaticFiles(directory=static_dir), name="static")

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        # Echo only the stable fields; raw inputs can be non-serializable
        # (e.g. a non-finite float that a lenient client smuggled in).
        detail = [
            {"type": e.get("type"), "loc": list(e.get("loc", ())), "msg": e.get("msg")}
            for e in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": detail})

    @app.exception_handler(Exception)
    async def _fallback_handler(request: Request, exc: Exception):
        error_id = uuid.uuid4().hex
        return JSONResponse(
            status_code=500,
            content={"detail": "internal error", "error_id": error_id},
        )

    @app.get("/v1/health")
    def health() -> dict:
        gateway: EncoderGateway = app.state.gateway
        status = "ok" if gateway.probe() else "degraded"
        return {
            "status": status,
            "uptime": time.time() - app.state.started_at,
            "encoder_mode": gateway.mode,
        }

    @app.get("/v1/collections")
    def list_collections() -> list[dict]:
        registry: _Registry = app.state.registry
        out = []
        for cid in sorted(registry.manifests):
            manifest = registry.manifests[cid]
            record_count, asset_count = registry.index.collection_counts(cid)
            out.append(
                {
                    "collection_id": cid,
                    "render_style": manifest.render_style,
                    "record_count": record_count,
                    "asset_count": asset_count,
                    "dimension": manifest.dimension,
                }
            )
        return out

    @app.get("/v1/assets/{asset_id}")
    def get_asset(asset_id: str) -> dict:
        registry: _Registry = app.state.registry
        meta = registry.assets.get(asset_id)
        if meta is None:
            raise HTTPException(status_code=404, detail=f"unknown asset {asset_id!r}")
        return {
            "asset_id": meta.asset_id,
            "category": meta.category,
            "display_name": meta.display_name,
            "thumbnail_path": meta.thumbnail_path,
            "mesh_path": meta.mesh_path,
        }

    @app.post("/v1/collections/import")
    def import_collection(body: ImportRequestModel) -> dict:
        registry: _Registry = app.state.registry
        if body.collection_id in registry.manifests:
            raise HTTPException(
                status_code=409,
                detail=f"collection {body.collection_id!r} already exists",
            )
        if body.render_style not in catalog.RENDER_STYLES:
            raise HTTPException(
                status_code=400,
                detail=f"unknown render_style {body.render_style!r}",
            )
        with app.state.import_lock:
            try:
                manifest = catalog.import_raw(
                    body.input_dir, body.collection_id, body.render_style, data_dir
                )
                # Full rebuild from disk, then one atomic swap; readers keep
                # the old snapshot until the new one is complete.
                new_registry = _load_registry(data_dir, settings.encoder.dimension)
            except FileNotFoundError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            except MeshSearchError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            app.state.registry = new_registry
        record_count, asset_count = new_registry.index.collection_counts(
            manifest.collection_id
        )
        return {
            "collection_id": manifest.collection_id,
            "render_style": manifest.render_style,
            "record_count": record_count,
            "asset_count": asset_count,
            "dimension": manifest.dimension,
        }

    @app.post("/v1/query")
    def query(body: QueryRequestModel) -> dict:
        registry: _Registry = app.state.registry
        gateway: EncoderGateway = app.state.gateway
        collection_id = body.collection_id or settings.default_collection
        if not collection_id:
            raise HTTPException(status_code=400, detail="collection_id is required")

        t_start = time.perf_counter_ns()
        weighted = []
        encode_ns = 0
        for i, item in enumerate(body.inputs):
            label = item.label or f"input-{i}"
            if item.modality == MODALITY_PRECOMPUTED:
                if item.embedding is None:
                    raise HTTPException(
                        status_code=400,
                        detail=f"input {i}: precomputed input needs 'embedding'",
                    )
                try:
                    emb = normalize(item.embedding)
                except (ZeroNormError, ValueError) as exc:
                    raise HTTPException(status_code=400, detail=f"input {i}: {exc}")
            else:
                raw = _to_raw_input(i, item, label)
                t0 = time.perf_counter_ns()
                try:
                    emb = gateway.encode(raw)
                except EncoderUnavailableError as exc:
                    raise HTTPException(status_code=502, detail=str(exc))
                except EncoderError as exc:
                    raise HTTPException(status_code=502, detail=str(exc))
                encode_ns += time.perf_counter_ns() - t0
            weighted.append(
                WeightedInput(
                    embedding=emb,
                    weight=item.weight,
                    modality=item.modality,
                    label=label,
                )
            )

        t_fuse = time.perf_counter_ns()
        try:
            fused = fuse(weighted)
        except ZeroNormError:
            raise HTTPException(status_code=400, detail=WEIGHTS_CANCEL_DETAIL)
        except DimensionMismatchError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        fuse_ns = time.perf_counter_ns() - t_fuse

        try:
            matches = registry.index.search(fused, k=body.k, collection_id=collection_id)
        except UnknownCollectionError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except DimensionMismatchError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        scan_micros = registry.index.stats().last_scan_micros

        out = []
        for match in matches:
            meta = registry.assets.get(match.asset_id)
            out.append(
                {
                    "asset_id": match.asset_id,
                    "score": match.score,
                    "best_view": match.best_view,
                    "display_name": meta.display_name if meta else match.asset_id,
                    "category": meta.category if meta else "",
                    "thumbnail_path": meta.thumbnail_path if meta else "",
                }
            )
        total_micros = (time.perf_counter_ns() - t_start) // 1000
        return {
            "matches": out,
            "fused_provenance": list(fused.provenance),
            "timing": {
                "encode_micros": encode_ns // 1000,
                "fuse_micros": fuse_ns // 1000,
                "scan_micros": scan_micros,
                "total_micros": total_micros,
            },
        }

    return app


def _to_raw_input(i: int, item: QueryInputModel, label: str) -> RawInput:
    if item.payload is None or not item.payload:
        raise HTTPException(
            status_code=400, detail=f"input {i}: {item.modality} input needs 'payload'"
        )
    if item.modality == MODALITY_TEXT:
        payload: str | bytes = item.payload
    else:
        try:
            payload = base64.b64decode(item.payload, validate=True)
        except (binascii.Error, ValueError):
            raise HTTPException(
                status_code=400,
                detail=f"input {i}: {item.modality} payload must be base64",
            )
        if not payload:
            raise HTTPException(
                status_code=400, detail=f"input {i}: empty {item.modality} payload"
            )
    try:
        return RawInput(modality=item.modality, payload=payload, label=label)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=f"input {i}: {exc}")
