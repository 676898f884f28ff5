"""Operator command line: ingest, one-shot queries, latency benchmarks, serve.

Exit codes:
    0  success
    1  usage error or any failure without a dedicated code below
    2  import input directory missing
    3  import rejected a degenerate (zero-norm) vector
    4  query weights cancel (fused vector has zero norm)
    5  encoder unavailable or misbehaving
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import catalog
from .bench import run_bench
from .encoder import EncoderConfig, EncoderGateway, RawInput
from .errors import EncoderError, MeshSearchError, ZeroNormError
from .fusion import (
    MODALITY_IMAGE,
    MODALITY_PRECOMPUTED,
    MODALITY_SKETCH,
    MODALITY_TEXT,
    WeightedInput,
    fuse,
    normalize,
)
from .index import DEFAULT_K, build_index

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MISSING_INPUT = 2
EXIT_BAD_VECTOR = 3
EXIT_WEIGHTS_CANCEL = 4
EXIT_ENCODER = 5


class _AddInput(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        kind = option_string.lstrip("-")
        namespace.query_inputs.append([kind, values, 1.0])


class _SetWeight(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        if not namespace.query_inputs:
            parser.error("--weight must follow an input flag")
        namespace.query_inputs[-1][2] = values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meshsearch",
        description="Fused-embedding retrieval over 3D asset collections",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_import = sub.add_parser("import", help="ingest raw vectors into a collection")
    p_import.add_argument("--input-dir", required=True)
    p_import.add_argument("--collection-id", required=True)
    p_import.add_argument(
        "--render-style", default=catalog.RENDER_TEXTURED, choices=catalog.RENDER_STYLES
    )
    p_import.add_argument("--data-dir", required=True)

    p_query = sub.add_parser("query", help="run one weighted multi-input query")
    p_query.add_argument("--data-dir", required=True)
    p_query.add_argument("--collection", required=True)
    p_query.add_argument("--k", type=int, default=DEFAULT_K)
    p_query.add_argument("--text", action=_AddInput, metavar="PROMPT")
    p_query.add_argument("--image", action=_AddInput, metavar="FILE")
    p_query.add_argument("--sketch", action=_AddInput, metavar="FILE")
    p_query.add_argument("--embedding", action=_AddInput, metavar="FILE")
    p_query.add_argument(
        "--weight",
        action=_SetWeight,
        type=float,
        help="weight for the most recent input (default 1.0)",
    )
    p_query.add_argument("--encoder-mode", choices=("mock", "remote"))
    p_query.add_argument("--endpoint", default=None)
    p_query.add_argument("--mock-seed", type=int, default=0)
    p_query.set_defaults(query_inputs=[])

    p_bench = sub.add_parser("bench", help="measure scan latency percentiles")
    p_bench.add_argument("--n", type=int, default=100_000)
    p_bench.add_argument("--dim", type=int, default=512)
    p_bench.add_argument("--queries", type=int, default=100)
    p_bench.add_argument("--seed", type=int, default=42)
    p_bench.add_argument("--k", type=int, default=DEFAULT_K)
    p_bench.add_argument("--threads", type=int, default=1)
    p_bench.add_argument("--json", action="store_true", dest="as_json")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--data-dir", required=True)
    p_serve.add_argument("--encoder-mode", choices=("mock", "remote"))
    p_serve.add_argument("--endpoint", default=None)
    p_serve.add_argument("--mock-seed", type=int, default=0)
    p_serve.add_argument("--default-collection", default="")
    p_serve.add_argument("--ui-dir", default=None, help="serve a built web UI at /ui")

    return parser


def _encoder_config(args: argparse.Namespace, dimension: int) -> EncoderConfig:
    overrides: dict = {"dimension": dimension, "mock_seed": args.mock_seed}
    if args.encoder_mode:
        overrides["mode"] = args.encoder_mode
    if args.endpoint:
        overrides["endpoint"] = args.endpoint
    return EncoderConfig.from_env(**overrides)


def cmd_import(args: argparse.Namespace) -> int:
    try:
        manifest = catalog.import_raw(
            args.input_dir, args.collection_id, args.render_style, args.data_dir
        )
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except ZeroNormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_VECTOR
    except (MeshSearchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    assets = {e.asset_id for e in manifest.entries}
    print(
        f"imported {manifest.collection_id}: {manifest.record_count} records, "
        f"{len(assets)} assets"
    )
    return EXIT_OK


def cmd_query(args: argparse.Namespace) -> int:
    if args.k < 1:
        print("usage error: --k must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if not args.query_inputs:
        print("usage error: at least one input is required", file=sys.stderr)
        return EXIT_USAGE

    path = catalog.manifest_path(args.data_dir, args.collection)
    try:
        manifest, records = catalog.read_collection(path)
    except (MeshSearchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    index = build_index(records, manifest.dimension)

    gateway = EncoderGateway(_encoder_config(args, manifest.dimension))
    weighted = []
    try:
        for kind, value, weight in args.query_inputs:
            if kind == "text":
                emb = gateway.encode(RawInput(MODALITY_TEXT, value, label=value))
                modality = MODALITY_TEXT
            elif kind in ("image", "sketch"):
                modality = MODALITY_IMAGE if kind == "image" else MODALITY_SKETCH
                data = Path(value).read_bytes()
                emb = gateway.encode(RawInput(modality, data, label=value))
            else:
                tokens = Path(value).read_text(encoding="utf-8").split()
                emb = normalize([float(t) for t in tokens])
                modality = MODALITY_PRECOMPUTED
            weighted.append(
                WeightedInput(embedding=emb, weight=weight, modality=modality, label=value)
            )
        fused = fuse(weighted)
    except ZeroNormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WEIGHTS_CANCEL
    except EncoderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENCODER
    except (MeshSearchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    matches = index.search(fused, k=args.k, collection_id=args.collection)
    print(f"{'rank':>4}  {'asset_id':<24}  {'score':>9}  best_view")
    for rank, match in enumerate(matches, start=1):
        print(
            f"{rank:>4}  {match.asset_id:<24}  {match.score:>9.6f}  {match.best_view}"
        )
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        result = run_bench(
            n=args.n,
            dim=args.dim,
            queries=args.queries,
            seed=args.seed,
            k=args.k,
            threads=args.threads,
        )
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.as_json:
        print(json.dumps(result))
    else:
        print(
            f"n={result['n']} dim={result['dim']} queries={result['queries']} "
            f"k={result['k']} seed={result['seed']} threads={result['threads']}"
        )
        print(f"dataset_checksum={result['dataset_checksum']}")
        print(
            "scan latency: p50={p50_ms:.3f} ms  p95={p95_ms:.3f} ms  "
            "p99={p99_ms:.3f} ms".format(**result)
        )
        print(f"effective bandwidth: {result['gb_per_s']:.2f} GB/s")
        print(f"total runtime: {result['total_seconds']:.1f} s")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn
    from .service import ServiceSettings, create_app

    settings = ServiceSettings(
        data_dir=Path(args.data_dir),
        encoder=_encoder_config(args, _serve_dimension(args)),
        default_collection=args.default_collection,
    )
    app = create_app(settings)
    if args.ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=args.ui_dir, html=True), name="ui")
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def _serve_dimension(args: argparse.Namespace) -> int:
    # The encoder must produce vectors shaped like the stored collections;
    # take the dimension from the first manifest when one exists.
    paths = catalog.list_manifests(args.data_dir)
    if paths:
        manifest, _ = catalog.read_collection(paths[0])
        return manifest.dimension
    return EncoderConfig().dimension


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems and 0 for --help; fold the
        # former into this tool's single usage-error code.
        return EXIT_OK if exc.code in (None, 0) else EXIT_USAGE
    handlers = {
        "import": cmd_import,
        "query": cmd_query,
        "bench": cmd_bench,
        "serve": cmd_serve,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
