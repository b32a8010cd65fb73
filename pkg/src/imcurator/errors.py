"""Exception types shared across the curation pipeline."""


class CurationError(Exception):
    """Base class for every error raised by this package."""


class IngestionError(CurationError):
    """A source directory, download, or image file could not be ingested."""


class RejectionError(CurationError):
    """A crop was rejected: degenerate bounding box or unknown class."""


class NotFoundError(CurationError):
    """A referenced record, class, or job does not exist."""


class CrawlError(CurationError):
    """A search provider was unreachable or returned nothing usable."""


class ConfigurationError(CurationError):
    """Providers, anchors, backends, or config files are set up wrong."""


class ValidationError(CurationError):
    """A request or argument violates a precondition."""


class ContractError(CurationError):
    """Caller broke an interface contract (mismatched inputs)."""


class CalibrationError(CurationError):
    """Threshold calibration is impossible on the given samples."""


class TrainingError(CurationError):
    """The training loop cannot proceed (empty split, non-finite loss)."""


class EmbeddingError(CurationError):
    """Pixels could not be decoded or embedded."""


class DetectionError(CurationError):
    """A detector backend failed on one image."""


class JobNotReadyError(CurationError):
    """Results were requested before the job reached the scoring stage."""


class StaleResultError(CurationError):
    """Stored distances predate the current anchor; re-score first."""
