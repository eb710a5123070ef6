"""JSON-over-HTTP facade for the designer UI and other clients.

Segments travel as 16-line text grids (the corpus format). The model
registry is read from a checkpoint directory at startup and is read-only
afterwards; POST /api/admin/reload re-scans it explicitly. Requests are
stateless and deterministic for a given seed.
"""

from __future__ import annotations

import logging
import secrets
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import cvae
from .corpus import Segment, parse_level
from .errors import CheckpointError, CondlevelError, SchemeMismatchError, UnknownTileError
from .generate import relabel_segment, render_cells, sample_conditioned
from .labeling import Label, element_label
from .tilemaps import GAMES, load_default_tilemap

log = logging.getLogger(__name__)

MAX_COUNT_PER_REQUEST = 64


class ModelRegistry:
    def __init__(self, models_dir: Path):
        self.models_dir = Path(models_dir)
        self.models: dict[str, cvae.CvaeModel] = {}
        self.meta: dict[str, dict] = {}
        self.warnings: list[str] = []
        self.reload()

    def reload(self) -> None:
        models: dict[str, cvae.CvaeModel] = {}
        meta: dict[str, dict] = {}
        warnings: list[str] = []
        if self.models_dir.is_dir():
            for path in sorted(self.models_dir.glob("*.ckpt")):
                try:
                    model, train_meta = cvae.load_checkpoint(path)
                    models[path.stem] = model
                    meta[path.stem] = train_meta
                except (CheckpointError, CondlevelError, OSError) as e:
                    warnings.append(f"{path.name}: {e}")
        else:
            warnings.append(f"models directory not found: {self.models_dir}")
        self.models = models
        self.meta = meta
        self.warnings = warnings

    def get(self, model_id: str) -> cvae.CvaeModel:
        model = self.models.get(model_id)
        if model is None:
            raise HTTPException(status_code=404, detail=f"unknown model {model_id!r}")
        return model


class GenerateRequest(BaseModel):
    model_id: str
    label: str
    count: int = Field(default=8, ge=0)
    seed: int | None = None


class RelabelRequest(BaseModel):
    model_id: str
    segment: str
    target_label: str
    source_label: str | None = None
    mode: str = "mean"
    seed: int | None = None


class LabelRequest(BaseModel):
    game: str
    segment: str


def _parse_label_or_400(bits: str, model: cvae.CvaeModel) -> Label:
    try:
        if len(bits) != model.scheme.length:
            raise SchemeMismatchError(
                f"label {bits!r} has length {len(bits)}, scheme {model.scheme.id} "
                f"needs {model.scheme.length}"
            )
        return Label.from_string(bits, model.scheme)
    except SchemeMismatchError as e:
        raise HTTPException(status_code=400, detail=str(e))


def _parse_segment_or_400(text: str, model: cvae.CvaeModel) -> Segment:
    try:
        grid = parse_level(text, model.vocab)
        return Segment(grid)
    except UnknownTileError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except CondlevelError as e:
        raise HTTPException(status_code=400, detail=str(e))


def create_app(models_dir: Path | str, cors: bool = False) -> FastAPI:
    app = FastAPI(title="condlevel", version="0.1.0")
    registry = ModelRegistry(Path(models_dir))
    app.state.registry = registry

    if cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
        )

    @app.get("/api/models")
    def list_models():
        entries = []
        for model_id, model in sorted(registry.models.items()):
            entries.append({
                "id": model_id,
                "scheme": model.scheme.id,
                "bit_names": list(model.scheme.bit_names),
                "latent_dim": model.config.latent_dim,
                "vocab": model.vocab.to_jsonable(),
            })
        return {"models": entries, "warnings": registry.warnings}

    @app.post("/api/generate")
    def generate(req: GenerateRequest):
        model = registry.get(req.model_id)
        if req.count > MAX_COUNT_PER_REQUEST:
            raise HTTPException(
                status_code=400,
                detail=f"count {req.count} exceeds per-request cap {MAX_COUNT_PER_REQUEST}",
            )
        label = _parse_label_or_400(req.label, model)
        seed = req.seed if req.seed is not None else secrets.randbelow(2 ** 31)
        segments = sample_conditioned(model, label, req.count, seed=seed)
        return {"segments": [s.to_text() for s in segments], "seed": seed}

    @app.post("/api/relabel")
    def relabel(req: RelabelRequest):
        model = registry.get(req.model_id)
        if req.mode not in ("mean", "sampled"):
            raise HTTPException(status_code=400, detail=f"bad mode {req.mode!r}")
        target = _parse_label_or_400(req.target_label, model)
        segment = _parse_segment_or_400(req.segment, model)
        if req.source_label is not None:
            source = _parse_label_or_400(req.source_label, model)
        elif model.scheme.id.startswith("elements-"):
            tilemap = load_default_tilemap(model.scheme.id.split("-")[1].upper())
            source = element_label(segment, tilemap)
        else:
            source = target
        seed = req.seed if req.seed is not None else secrets.randbelow(2 ** 31)
        edited = relabel_segment(model, segment, source, target, mode=req.mode, seed=seed)
        return {"segment": edited.to_text(), "seed": seed, "source_label": str(source)}

    @app.post("/api/label")
    def label(req: LabelRequest):
        if req.game not in GAMES:
            raise HTTPException(status_code=400, detail=f"unknown game {req.game!r}")
        tilemap = load_default_tilemap(req.game)
        try:
            grid = parse_level(req.segment, tilemap.vocab)
            segment = Segment(grid)
        except CondlevelError as e:
            raise HTTPException(status_code=400, detail=str(e))
        lab = element_label(segment, tilemap)
        return {"label": str(lab), "bit_names": list(lab.scheme.bit_names)}

    @app.post("/api/cells")
    def cells(req: LabelRequest):
        """Tile metadata grid for rendering (name + tags per cell)."""
        if req.game not in GAMES:
            raise HTTPException(status_code=400, detail=f"unknown game {req.game!r}")
        tilemap = load_default_tilemap(req.game)
        try:
            grid = parse_level(req.segment, tilemap.vocab)
            segment = Segment(grid)
        except CondlevelError as e:
            raise HTTPException(status_code=400, detail=str(e))
        return {"cells": render_cells(segment, tilemap)}

    @app.post("/api/admin/reload")
    def reload_models():
        registry.reload()
        return {"models": sorted(registry.models), "warnings": registry.warnings}

    return app
