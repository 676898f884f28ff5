"""Exception hierarchy shared across the package."""

from __future__ import annotations


class MeshSearchError(Exception):
    """Base class for all errors raised by this package."""


class ZeroNormError(MeshSearchError):
    """A vector's L2 norm is below the zero threshold and cannot be normalized.

    Raised for degenerate raw vectors and for weighted sums that cancel
    exactly (e.g. the same embedding with weights +1 and -1).
    """


class DimensionMismatchError(MeshSearchError):
    """Vectors of different dimensions were combined or compared."""


class EmptyQueryError(MeshSearchError):
    """A fused query was requested from zero inputs."""


class NormalizationError(MeshSearchError):
    """A vector that must be unit-normalized failed the norm check."""


class DuplicateRecordError(MeshSearchError):
    """Two records share the same (asset_id, view, collection_id) triple."""


class UnknownCollectionError(MeshSearchError):
    """The requested collection is not present in the index."""


class FormatVersionError(MeshSearchError):
    """A manifest declares a format version this code does not support."""


class CorruptFileError(MeshSearchError):
    """A collection file is structurally inconsistent with its manifest."""


class EncoderError(MeshSearchError):
    """Base class for encoder gateway failures."""


class EncoderUnavailableError(EncoderError):
    """The remote encoder could not be reached (connect failure or timeout)."""


class EncoderProtocolError(EncoderError):
    """The remote encoder replied with a malformed or wrong-dimension vector."""


class InputTooLargeError(EncoderError):
    """A raw input payload exceeds the configured size limit."""
