"""Exception hierarchy shared across the package."""


class AutotabError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(AutotabError):
    """Malformed table, unknown column, bad override, or failed type inference."""


class DegenerateTargetError(AutotabError):
    """Target has a single distinct label (or is otherwise unusable)."""


class StratificationError(AutotabError):
    """A class is too small to be split in a stratified manner."""


class TransformError(AutotabError):
    """Transformer misuse: wrong column kind, width mismatch, empty vocabulary."""


class ModelError(AutotabError):
    """Model misuse: family/task mismatch, width mismatch, singular system."""


class MetricError(AutotabError):
    """Metric called on invalid input (empty vectors, single-class AUC)."""


class SearchError(AutotabError):
    """Run-level search failure: no viable candidate, empty leaderboard."""


class ArtifactError(AutotabError):
    """Persistence failure: checksum mismatch, bad magic, unsupported version."""


class ConfigError(AutotabError):
    """Invalid run configuration (bad metric/task combination, bad fractions)."""
