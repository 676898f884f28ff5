"""Shared fixtures: deterministic record sets, raw import trees, live apps."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from meshsearch import (
    DEFAULT_VIEWS,
    Embedding,
    ViewRecord,
    build_index,
    import_raw,
)
from meshsearch.encoder import EncoderConfig
from meshsearch.service import ServiceSettings, create_app

FIXTURE_COLLECTION = "fixture"
FIXTURE_ASSETS = 10
FIXTURE_DIM = 32


def make_records(
    rng: np.random.Generator,
    n_assets: int,
    dim: int,
    views=DEFAULT_VIEWS,
    collection_id: str = FIXTURE_COLLECTION,
    prefix: str = "asset",
) -> list[ViewRecord]:
    width = max(3, len(str(n_assets)))
    records = []
    for a in range(n_assets):
        for view in views:
            v = rng.standard_normal(dim)
            emb = Embedding((v / np.linalg.norm(v)).astype(np.float32))
            records.append(
                ViewRecord(
                    asset_id=f"{prefix}-{a:0{width}d}",
                    view=view,
                    collection_id=collection_id,
                    embedding=emb,
                )
            )
    return records


@pytest.fixture(scope="session")
def fixture_records() -> list[ViewRecord]:
    """3 views x 10 assets at D=32, fixed seed."""
    rng = np.random.default_rng(20240517)
    return make_records(rng, FIXTURE_ASSETS, FIXTURE_DIM)


@pytest.fixture(scope="session")
def fixture_index(fixture_records):
    return build_index(fixture_records, FIXTURE_DIM)


def write_raw_dir(
    directory: Path,
    n_assets: int = 2,
    dim: int = 16,
    views=DEFAULT_VIEWS,
    seed: int = 99,
    with_table: bool = True,
) -> Path:
    """Write a valid raw import tree: one .vec per (asset, view) + assets.tsv.

    Raw vectors are deliberately unnormalized (scaled by 3) so ingest has to
    normalize them.
    """
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for a in range(n_assets):
        for view in views:
            v = rng.standard_normal(dim) * 3.0
            path = directory / f"asset-{a:03d}__{view}.vec"
            path.write_text(" ".join(f"{x:.9g}" for x in v) + "\n", encoding="utf-8")
    if with_table:
        lines = ["asset_id\tcategory\tdisplay_name\tthumbnail_path\tmesh_path"]
        for a in range(n_assets):
            lines.append(
                f"asset-{a:03d}\tchair\tChair {a}\t"
                f"/static/thumbnails/asset-{a:03d}.png\tmeshes/asset-{a:03d}.glb"
            )
        (directory / "assets.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return directory


@pytest.fixture()
def raw_dir(tmp_path) -> Path:
    return write_raw_dir(tmp_path / "raw")


@pytest.fixture()
def data_dir(tmp_path) -> Path:
    """Data directory preloaded with one imported collection ('demo', D=16)."""
    raw = write_raw_dir(tmp_path / "raw", n_assets=3)
    out = tmp_path / "data"
    import_raw(raw, "demo", "textured", out)
    return out


@pytest.fixture()
def app(data_dir):
    settings = ServiceSettings(
        data_dir=data_dir, encoder=EncoderConfig(mode="mock", dimension=16)
    )
    return create_app(settings)


@pytest.fixture()
def client(app):
    from fastapi.testclient import TestClient

    with TestClient(app) as c:
        yield c
