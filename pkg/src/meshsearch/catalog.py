"""Collection persistence: manifests, binary vector files, raw import.

On-disk layout for a collection named `C` inside a data directory:

    C.manifest     UTF-8 text. Header of `key value` lines (format_version,
                   collection_id, render_style, dimension, record_count),
                   then a line `entries:`, then one tab-separated line per
                   record: asset_id, view, byte_offset, thumbnail_path,
                   mesh_path. Offsets are strictly increasing multiples of
                   4 * dimension; the canonical writer emits 4 * D * i.
    C.f32          Headerless binary: little-endian float32, row-major, row
                   i starting at byte 4 * D * i. Read-back is bit-exact.
    C.assets.tsv   Asset metadata table: header line, then one tab-separated
                   line per asset: asset_id, category, display_name,
                   thumbnail_path, mesh_path.

Raw import input: a directory of `<asset_id>__<view>.vec` text files (one
vector of whitespace-separated decimals each) plus an optional `assets.tsv`
metadata table in the same shape as above. Vectors are normalized on
ingest, so everything that reaches a vector file is unit length and query
time never pays for normalization.

Thumbnail and mesh paths are opaque references; this module never opens
them.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CorruptFileError,
    DimensionMismatchError,
    FormatVersionError,
    NormalizationError,
    ZeroNormError,
)
from .fusion import Embedding, normalize
from .index import ViewRecord

FORMAT_VERSION = 1

RENDER_TEXTURED = "textured"
RENDER_UNTEXTURED = "untextured"
RENDER_UNTEXTURED_SMOOTHED = "untextured_smoothed"
RENDER_STYLES = (RENDER_TEXTURED, RENDER_UNTEXTURED, RENDER_UNTEXTURED_SMOOTHED)

MANIFEST_SUFFIX = ".manifest"
VECTOR_SUFFIX = ".f32"
ASSET_TABLE_SUFFIX = ".assets.tsv"
RAW_VECTOR_SUFFIX = ".vec"
RAW_ASSET_TABLE = "assets.tsv"

# Unit-norm tolerance for rows crossing the file boundary; looser than the
# in-memory embedding tolerance to absorb float32 round-trip noise.
FILE_NORM_TOL = 1e-4

_COLLECTION_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")

_ASSET_TABLE_HEADER = "asset_id\tcategory\tdisplay_name\tthumbnail_path\tmesh_path"


@dataclass(frozen=True)
class ManifestEntry:
    asset_id: str
    view: str
    byte_offset: int
    thumbnail_path: str = ""
    mesh_path: str = ""


@dataclass
class CollectionManifest:
    collection_id: str
    dimension: int
    render_style: str
    record_count: int
    entries: list[ManifestEntry] = field(default_factory=list)
    format_version: int = FORMAT_VERSION


@dataclass(frozen=True)
class AssetMeta:
    asset_id: str
    category: str = ""
    display_name: str = ""
    thumbnail_path: str = ""
    mesh_path: str = ""


def _validate_manifest(manifest: CollectionManifest) -> None:
    if not _COLLECTION_ID_RE.match(manifest.collection_id):
        raise ValueError(f"invalid collection_id {manifest.collection_id!r}")
    if manifest.render_style not in RENDER_STYLES:
        raise ValueError(f"unknown render_style {manifest.render_style!r}")
    if manifest.dimension < 1:
        raise ValueError("dimension must be >= 1")
    if manifest.record_count != len(manifest.entries):
        raise ValueError(
            f"record_count {manifest.record_count} != entries {len(manifest.entries)}"
        )
    row_bytes = 4 * manifest.dimension
    prev = -1
    for entry in manifest.entries:
        if entry.byte_offset % row_bytes != 0:
            raise ValueError(
                f"entry ({entry.asset_id}, {entry.view}) offset {entry.byte_offset} "
                f"is not a multiple of {row_bytes}"
            )
        if entry.byte_offset <= prev:
            raise ValueError("entry byte offsets must be strictly increasing")
        prev = entry.byte_offset
        for part in (entry.asset_id, entry.view, entry.thumbnail_path, entry.mesh_path):
            if "\t" in part or "\n" in part:
                raise ValueError("entry fields must not contain tabs or newlines")


def _check_unit_rows(vectors: np.ndarray) -> None:
    if vectors.shape[0] == 0:
        return
    norms = np.sqrt(np.einsum("ij,ij->i", vectors, vectors, dtype=np.float64))
    bad = np.flatnonzero(np.abs(norms - 1.0) > FILE_NORM_TOL)
    if bad.size:
        i = int(bad[0])
        raise NormalizationError(
            f"row {i} has norm {norms[i]:.6f}, expected 1 within {FILE_NORM_TOL}"
        )


def manifest_path(directory: Path | str, collection_id: str) -> Path:
    return Path(directory) / f"{collection_id}{MANIFEST_SUFFIX}"


def vector_path(directory: Path | str, collection_id: str) -> Path:
    return Path(directory) / f"{collection_id}{VECTOR_SUFFIX}"


def asset_table_path(directory: Path | str, collection_id: str) -> Path:
    return Path(directory) / f"{collection_id}{ASSET_TABLE_SUFFIX}"


def write_collection(
    manifest: CollectionManifest,
    vectors: np.ndarray,
    directory: Path | str,
) -> tuple[Path, Path]:
    """Write a collection's manifest and vector file into `directory`.

    `vectors` is the N x D matrix whose row i belongs to entry i. Every row
    must be unit-normalized within `FILE_NORM_TOL`. Returns the manifest and
    vector file paths. Read-back through `read_collection` is bit-exact.

    Raises:
        NormalizationError: a row fails the unit-norm check.
        ValueError: the manifest violates its invariants or does not match
            the matrix shape.
        OSError: filesystem failure.
    """
    _validate_manifest(manifest)
    mat = np.ascontiguousarray(np.asarray(vectors, dtype=np.float32))
    if mat.ndim != 2 or mat.shape != (manifest.record_count, manifest.dimension):
        raise ValueError(
            f"vectors shape {mat.shape} != "
            f"({manifest.record_count}, {manifest.dimension})"
        )
    _check_unit_rows(mat)

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    vec_path = vector_path(directory, manifest.collection_id)
    vec_path.write_bytes(mat.astype("<f4", copy=False).tobytes())

    lines = [
        f"format_version {manifest.format_version}",
        f"collection_id {manifest.collection_id}",
        f"render_style {manifest.render_style}",
        f"dimension {manifest.dimension}",
        f"record_count {manifest.record_count}",
        "entries:",
    ]
    for entry in manifest.entries:
        lines.append(
            "\t".join(
                (
                    entry.asset_id,
                    entry.view,
                    str(entry.byte_offset),
                    entry.thumbnail_path,
                    entry.mesh_path,
                )
            )
        )
    man_path = manifest_path(directory, manifest.collection_id)
    man_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return man_path, vec_path


def _parse_manifest(path: Path) -> CollectionManifest:
    text = path.read_text(encoding="utf-8")
    header: dict[str, str] = {}
    entries: list[ManifestEntry] = []
    in_entries = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not in_entries:
            if line.strip() == "entries:":
                in_entries = True
                continue
            if not line.strip():
                continue
            key, _, value = line.partition(" ")
            if not value:
                raise CorruptFileError(f"{path.name}:{lineno}: malformed header line")
            header[key] = value
        else:
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise CorruptFileError(
                    f"{path.name}:{lineno}: expected 5 tab-separated fields, "
                    f"got {len(parts)}"
                )
            try:
                offset = int(parts[2])
            except ValueError:
                raise CorruptFileError(
                    f"{path.name}:{lineno}: bad byte offset {parts[2]!r}"
                ) from None
            entries.append(
                ManifestEntry(
                    asset_id=parts[0],
                    view=parts[1],
                    byte_offset=offset,
                    thumbnail_path=parts[3],
                    mesh_path=parts[4],
                )
            )
    try:
        version = int(header["format_version"])
    except (KeyError, ValueError):
        raise CorruptFileError(f"{path.name}: missing or bad format_version") from None
    if version != FORMAT_VERSION:
        raise FormatVersionError(
            f"{path.name}: format_version {version} is not supported "
            f"(expected {FORMAT_VERSION})"
        )
    try:
        manifest = CollectionManifest(
            collection_id=header["collection_id"],
            dimension=int(header["dimension"]),
            render_style=header["render_style"],
            record_count=int(header["record_count"]),
            entries=entries,
            format_version=version,
        )
    except (KeyError, ValueError):
        raise CorruptFileError(f"{path.name}: incomplete or bad header") from None
    try:
        _validate_manifest(manifest)
    except ValueError as exc:
        raise CorruptFileError(f"{path.name}: {exc}") from None
    return manifest


def read_collection(
    path: Path | str,
) -> tuple[CollectionManifest, list[ViewRecord]]:
    """Load a collection from its manifest path.

    Embeddings come back bit-equal to what was written. Every row is
    re-verified unit-norm on the way in, so anything loaded satisfies the
    scan precondition.

    Raises:
        FormatVersionError: unsupported manifest version.
        CorruptFileError: malformed manifest, or vector file size does not
            match record_count * dimension.
        NormalizationError: a stored row is not unit length.
        OSError: files missing or unreadable.
    """
    path = Path(path)
    manifest = _parse_manifest(path)
    vec_path = vector_path(path.parent, manifest.collection_id)
    blob = vec_path.read_bytes()
    expected = 4 * manifest.dimension * manifest.record_count
    if len(blob) != expected:
        raise CorruptFileError(
            f"{vec_path.name}: size {len(blob)} != expected {expected} "
            f"({manifest.record_count} records x {manifest.dimension} dims)"
        )
    if manifest.record_count == 0:
        return manifest, []
    matrix = np.frombuffer(blob, dtype="<f4").reshape(
        manifest.record_count, manifest.dimension
    )
    _check_unit_rows(matrix)
    row_bytes = 4 * manifest.dimension
    records = []
    for entry in manifest.entries:
        row = entry.byte_offset // row_bytes
        records.append(
            ViewRecord(
                asset_id=entry.asset_id,
                view=entry.view,
                collection_id=manifest.collection_id,
                embedding=Embedding(matrix[row]),
                row_index=row,
            )
        )
    return manifest, records


def write_asset_table(assets: list[AssetMeta], path: Path | str) -> Path:
    path = Path(path)
    lines = [_ASSET_TABLE_HEADER]
    for meta in sorted(assets, key=lambda a: a.asset_id):
        lines.append(
            "\t".join(
                (
                    meta.asset_id,
                    meta.category,
                    meta.display_name,
                    meta.thumbnail_path,
                    meta.mesh_path,
                )
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_asset_table(path: Path | str) -> dict[str, AssetMeta]:
    """Parse an asset metadata table; returns {} if the file is absent."""
    path = Path(path)
    if not path.exists():
        return {}
    assets: dict[str, AssetMeta] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if lineno == 1 and line.startswith("asset_id"):
            continue
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise CorruptFileError(
                f"{path.name}:{lineno}: expected 5 tab-separated fields"
            )
        assets[parts[0]] = AssetMeta(
            asset_id=parts[0],
            category=parts[1],
            display_name=parts[2],
            thumbnail_path=parts[3],
            mesh_path=parts[4],
        )
    return assets


def _parse_raw_vector(path: Path) -> np.ndarray:
    tokens = path.read_text(encoding="utf-8").split()
    if not tokens:
        raise CorruptFileError(f"{path.name}: empty vector file")
    try:
        values = [float(t) for t in tokens]
    except ValueError:
        raise CorruptFileError(f"{path.name}: non-numeric vector data") from None
    if not all(math.isfinite(v) for v in values):
        raise CorruptFileError(f"{path.name}: non-finite vector data")
    return np.asarray(values, dtype=np.float64)


def import_raw(
    input_dir: Path | str,
    collection_id: str,
    render_style: str,
    out_dir: Path | str,
) -> CollectionManifest:
    """Ingest a directory of raw per-view vectors into the canonical format.

    Reads every `<asset_id>__<view>.vec` file under `input_dir`, normalizes
    each vector, assigns canonical byte offsets in (asset_id, view) order,
    and writes the manifest, vector file, and asset table into `out_dir`.
    Metadata comes from `assets.tsv` in `input_dir` when present; assets
    without a row get their id as display name and empty paths.

    Raises:
        FileNotFoundError: `input_dir` does not exist or holds no .vec files.
        CorruptFileError: a vector file is malformed (file named).
        ZeroNormError: a vector has (near) zero norm (asset and file named).
        DimensionMismatchError: vector dimensions are inconsistent.
    """
    input_dir = Path(input_dir)
    if not input_dir.is_dir():
        raise FileNotFoundError(f"input directory not found: {input_dir}")
    vec_files = sorted(input_dir.glob(f"*{RAW_VECTOR_SUFFIX}"))
    if not vec_files:
        raise FileNotFoundError(f"no {RAW_VECTOR_SUFFIX} files in {input_dir}")

    parsed: list[tuple[str, str, np.ndarray]] = []
    dimension: int | None = None
    for path in vec_files:
        stem = path.name[: -len(RAW_VECTOR_SUFFIX)]
        asset_id, sep, view = stem.rpartition("__")
        if not sep or not asset_id or not view:
            raise CorruptFileError(
                f"{path.name}: expected filename pattern <asset_id>__<view>.vec"
            )
        raw = _parse_raw_vector(path)
        if dimension is None:
            dimension = int(raw.shape[0])
        elif raw.shape[0] != dimension:
            raise DimensionMismatchError(
                f"{path.name}: dimension {raw.shape[0]} != {dimension}"
            )
        try:
            unit = normalize(raw)
        except ZeroNormError:
            raise ZeroNormError(
                f"zero-norm vector for asset {asset_id!r} in {path.name}"
            ) from None
        parsed.append((asset_id, view, unit.values))
    assert dimension is not None

    parsed.sort(key=lambda item: (item[0], item[1]))
    metas = read_asset_table(input_dir / RAW_ASSET_TABLE)

    row_bytes = 4 * dimension
    matrix = np.empty((len(parsed), dimension), dtype=np.float32)
    entries = []
    for i, (asset_id, view, values) in enumerate(parsed):
        matrix[i] = values
        meta = metas.get(asset_id)
        entries.append(
            ManifestEntry(
                asset_id=asset_id,
                view=view,
                byte_offset=i * row_bytes,
                thumbnail_path=meta.thumbnail_path if meta else "",
                mesh_path=meta.mesh_path if meta else "",
            )
        )

    manifest = CollectionManifest(
        collection_id=collection_id,
        dimension=dimension,
        render_style=render_style,
        record_count=len(entries),
        entries=entries,
    )
    write_collection(manifest, matrix, out_dir)

    asset_ids = sorted({asset_id for asset_id, _, _ in parsed})
    assets = [
        metas.get(aid, AssetMeta(asset_id=aid, display_name=aid)) for aid in asset_ids
    ]
    write_asset_table(assets, asset_table_path(out_dir, collection_id))
    return manifest


def list_manifests(data_dir: Path | str) -> list[Path]:
    """Manifest paths inside a data directory, sorted by collection id."""
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        return []
    return sorted(data_dir.glob(f"*{MANIFEST_SUFFIX}"))
