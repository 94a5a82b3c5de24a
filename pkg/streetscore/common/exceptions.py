from typing import Iterable, Optional

__all__ = (
    "StreetscoreError",
    "ConfigurationError",
    "TaskSpecError",
    "CausationError",
    "UpstreamServiceError",
    "OverpassError",
    "OverpassParseError",
    "OsmStructureError",
    "QuotaExhaustedError",
    "BackendError",
    "DataIntegrityError",
    "ResultsLogCorruptError",
    "JoinError",
    "AnnotationError",
    "ProjectionDomainError",
    "ChainageRangeError",
    "ImageDecodeError",
)


class StreetscoreError(Exception):
    """Base error. `exit_code` is what the CLI returns when this error ends a run."""

    exit_code: int = 1


class ConfigurationError(StreetscoreError):
    """The run configuration (or a value derived from it) is invalid."""

    exit_code = 2


class TaskSpecError(ConfigurationError):
    """A task document could not be parsed or holds an empty block."""


class CausationError(StreetscoreError):
    """Cause-and-effect error, a pipeline stage MUST be completed before the next one is possible."""

    exit_code = 2

    def __init__(self, missing_stage: str, requested_stage: str):
        self.missing_stage = missing_stage
        self.requested_stage = requested_stage
        super().__init__(
            f'Stage "{requested_stage}" requires stage "{missing_stage}" to be completed first'
        )


class UpstreamServiceError(StreetscoreError):
    """An external service (Overpass, Street View, scoring backend) failed."""

    exit_code = 3

    def __init__(self, message: str, attempts: Optional[int] = None):
        self.attempts = attempts
        if attempts is not None:
            message = f"{message} (after {attempts} attempt(s))"
        super().__init__(message)


class OverpassError(UpstreamServiceError):
    """Retriable Overpass HTTP failure, raised once all attempts are spent."""


class OverpassParseError(UpstreamServiceError):
    """The Overpass response is not a well-formed JSON document."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} at byte offset {offset}")


class OsmStructureError(UpstreamServiceError):
    """The Overpass document references nodes it does not give coordinates for."""

    def __init__(self, node_ids: Iterable[int]):
        self.node_ids = sorted(set(node_ids))
        super().__init__(
            f"Missing coordinates for referenced node(s): {', '.join(str(_) for _ in self.node_ids)}"
        )


class QuotaExhaustedError(UpstreamServiceError):
    """The imagery provider reports an exhausted quota. The run halts after flushing its manifest."""


class BackendError(UpstreamServiceError):
    """The scoring backend could not produce an answer."""


class DataIntegrityError(StreetscoreError):
    """Stored or user-provided data violates an invariant."""

    exit_code = 4


class ResultsLogCorruptError(DataIntegrityError):
    """A results log line cannot be parsed. Lines are never dropped silently."""

    def __init__(self, path: str, line: int, reason: str):
        self.path = path
        self.line = line
        super().__init__(f"{path}, line {line}: {reason}")


class JoinError(DataIntegrityError):
    """Records reference entities that do not exist in the geometry layers."""

    def __init__(self, kind: str, ids: Iterable[str]):
        self.ids = sorted(set(ids))
        shown = ", ".join(self.ids[:20])
        more = f" (+{len(self.ids) - 20} more)" if len(self.ids) > 20 else ""
        super().__init__(f"Unknown {kind} id(s): {shown}{more}")


class AnnotationError(DataIntegrityError):
    """An annotation row holds a value outside the task's answer domain."""


class ProjectionDomainError(StreetscoreError, ValueError):
    """Coordinates cannot be projected with Transverse Mercator (|lat| > 84°)."""

    exit_code = 2


class ChainageRangeError(StreetscoreError, ValueError):
    """A chainage lies outside [0, segment length]."""

    def __init__(self, chainage_m: float, length_m: float, segment_id: Optional[str] = None):
        self.chainage_m = chainage_m
        self.length_m = length_m
        where = f" on segment {segment_id}" if segment_id else ""
        super().__init__(f"Chainage {chainage_m} m is outside [0, {length_m}] m{where}")


class ImageDecodeError(StreetscoreError):
    """Downloaded bytes do not decode as an image."""
