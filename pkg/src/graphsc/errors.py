"""Exception hierarchy shared across the package."""


class GraphSCError(Exception):
    """Base class for all package errors."""


class DimensionError(GraphSCError):
    """Tensor shapes incompatible for the requested operation."""


class ConfigError(GraphSCError):
    """Invalid configuration value or key."""


class IngestionError(GraphSCError):
    """Dataset directory is missing a mandatory file."""


class MalformedDatasetError(GraphSCError):
    """Dataset files are present but internally inconsistent."""


class DegenerateAugmentationError(GraphSCError):
    """An augmentation would produce an unusable graph (e.g. zero nodes)."""


class NumericError(GraphSCError):
    """Non-finite values encountered where finite ones are required."""


class VersionError(GraphSCError):
    """Artifact format version does not match this implementation."""
