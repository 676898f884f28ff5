"""meshsearch: multi-modal fused-embedding retrieval for 3D asset collections."""

from .errors import (
    CorruptFileError,
    DimensionMismatchError,
    DuplicateRecordError,
    EmptyQueryError,
    EncoderError,
    EncoderProtocolError,
    EncoderUnavailableError,
    FormatVersionError,
    InputTooLargeError,
    MeshSearchError,
    NormalizationError,
    UnknownCollectionError,
    ZeroNormError,
)
from .fusion import (
    DEFAULT_DIMENSION,
    EPSILON_NORM,
    INPUT_MODALITIES,
    MODALITY_IMAGE,
    MODALITY_PRECOMPUTED,
    MODALITY_SKETCH,
    MODALITY_TEXT,
    UNIT_NORM_TOL,
    Embedding,
    FusedQuery,
    WeightedInput,
    fuse,
    normalize,
    similarity,
    similarity_batch,
)
from .index import (
    DEFAULT_K,
    DEFAULT_VIEWS,
    VIEW_BACK,
    VIEW_FRONT,
    VIEW_PERSPECTIVE,
    IndexStats,
    ScoredMatch,
    VectorIndex,
    ViewRecord,
    build_index,
)
from .catalog import (
    AssetMeta,
    CollectionManifest,
    ManifestEntry,
    import_raw,
    list_manifests,
    read_asset_table,
    read_collection,
    write_collection,
)
from .encoder import EncoderConfig, EncoderGateway, RawInput, mock_embedding
from .bench import generate_dataset, run_bench

__version__ = "0.1.0"

__all__ = [
    "AssetMeta",
    "CollectionManifest",
    "CorruptFileError",
    "DEFAULT_DIMENSION",
    "DEFAULT_K",
    "DEFAULT_VIEWS",
    "DimensionMismatchError",
    "DuplicateRecordError",
    "Embedding",
    "EmptyQueryError",
    "EncoderConfig",
    "EncoderError",
    "EncoderGateway",
    "EncoderProtocolError",
    "EncoderUnavailableError",
    "EPSILON_NORM",
    "FormatVersionError",
    "FusedQuery",
    "fuse",
    "generate_dataset",
    "import_raw",
    "IndexStats",
    "INPUT_MODALITIES",
    "InputTooLargeError",
    "list_manifests",
    "ManifestEntry",
    "MeshSearchError",
    "mock_embedding",
    "MODALITY_IMAGE",
    "MODALITY_PRECOMPUTED",
    "MODALITY_SKETCH",
    "MODALITY_TEXT",
    "NormalizationError",
    "normalize",
    "RawInput",
    "read_asset_table",
    "read_collection",
    "run_bench",
    "ScoredMatch",
    "similarity",
    "similarity_batch",
    "UnknownCollectionError",
    "UNIT_NORM_TOL",
    "VectorIndex",
    "VIEW_BACK",
    "VIEW_FRONT",
    "VIEW_PERSPECTIVE",
    "ViewRecord",
    "WeightedInput",
    "write_collection",
    "ZeroNormError",
    "build_index",
    "__version__",
]
