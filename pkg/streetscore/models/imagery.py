from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


__all__ = ("CameraConfig", "ImageStatus", "ImageRecord", "RatePolicy", "CoverageCounts")

# Street View Static API, standard tier
MAX_IMAGE_SIZE = (640, 640)


class CameraConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    headings_deg: Tuple[float, ...] = (0, 90, 180, 270)
    pitch_deg: float = Field(0, ge=-90, le=90)
    fov_deg: float = Field(90, ge=10, le=120)
    image_size: Tuple[int, int] = (640, 640)

    @field_validator("headings_deg")
    @classmethod
    def check_headings(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if not value:
            raise ValueError("at least one heading is required")
        for heading in value:
            if not 0 <= heading < 360:
                raise ValueError(f"heading {heading} outside [0, 360)")
        if len(set(value)) != len(value):
            raise ValueError("headings must be unique")
        return value

    @field_validator("image_size")
    @classmethod
    def check_size(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        width, height = value
        if not (0 < width <= MAX_IMAGE_SIZE[0] and 0 < height <= MAX_IMAGE_SIZE[1]):
            raise ValueError(
                f"image size {width}x{height} exceeds the API limit "
                f"{MAX_IMAGE_SIZE[0]}x{MAX_IMAGE_SIZE[1]}"
            )
        return value


class ImageStatus(str, Enum):
    AVAILABLE = "available"
    PLACEHOLDER = "placeholder"
    FETCH_FAILED = "fetch_failed"


class ImageRecord(BaseModel):
    """One directional capture attempt for a sample point"""

    model_config = ConfigDict(frozen=True)

    point_id: str
    heading_deg: float
    file_path: str
    status: ImageStatus
    bytes_sha256: str = ""

    @property
    def key(self) -> Tuple[str, float]:
        return (self.point_id, self.heading_deg)


class RatePolicy(BaseModel):
    """Token bucket plus exponential backoff applied to every imagery request"""

    model_config = ConfigDict(frozen=True)

    rate_per_s: float = Field(10.0, gt=0)
    burst: int = Field(10, ge=1)
    max_retries: int = Field(3, ge=0)
    backoff_s: float = Field(0.5, ge=0)
    workers: int = Field(8, ge=1)
    timeout_s: float = Field(30, gt=0)


class CoverageCounts(BaseModel):
    points_4_images: int
    points_no_coverage: int

    @model_validator(mode="after")
    def non_negative(self) -> "CoverageCounts":
        if self.points_4_images < 0 or self.points_no_coverage < 0:
            raise ValueError("coverage counts cannot be negative")
        return self

    @classmethod
    def from_records(
        cls, records: List[ImageRecord], headings: Optional[Tuple[float, ...]] = None
    ) -> "CoverageCounts":
        """Count points with every heading available, and points with none available"""
        per_point = {}
        for record in records:
            per_point.setdefault(record.point_id, []).append(record)
        full = none = 0
        for point_records in per_point.values():
            available = {
                r.heading_deg for r in point_records if r.status == ImageStatus.AVAILABLE
            }
            expected = set(headings) if headings else {r.heading_deg for r in point_records}
            if available and expected <= available:
                full += 1
            if not available:
                none += 1
        return cls(points_4_images=full, points_no_coverage=none)
