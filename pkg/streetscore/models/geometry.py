import math
from datetime import datetime
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


__all__ = (
    "Coordinate",
    "BoundingBox",
    "MetricCrs",
    "StreetSegment",
    "SamplePoint",
    "RawOsmWay",
    "Provenance",
    "NetworkDataset",
    "SamplingConfig",
    "CountsReport",
)

# (lon, lat) in decimal degrees, or (easting, northing) in meters once projected
Coordinate = Tuple[float, float]


class BoundingBox(BaseModel):
    """WGS84 bounding box, decimal degrees"""

    model_config = ConfigDict(frozen=True)

    min_lon: float = Field(..., ge=-180, le=180)
    min_lat: float = Field(..., ge=-90, le=90)
    max_lon: float = Field(..., ge=-180, le=180)
    max_lat: float = Field(..., ge=-90, le=90)

    @model_validator(mode="after")
    def check_ordering(self) -> "BoundingBox":
        if not self.min_lon < self.max_lon:
            raise ValueError(f"min_lon ({self.min_lon}) must be < max_lon ({self.max_lon})")
        if not self.min_lat < self.max_lat:
            raise ValueError(f"min_lat ({self.min_lat}) must be < max_lat ({self.max_lat})")
        return self

    @property
    def centroid(self) -> Coordinate:
        return ((self.min_lon + self.max_lon) / 2, (self.min_lat + self.max_lat) / 2)

    def overpass_bbox(self) -> str:
        """Overpass QL order: south,west,north,east"""
        return f"{self.min_lat},{self.min_lon},{self.max_lat},{self.max_lon}"


class MetricCrs(BaseModel):
    """UTM zone used as the working metric CRS of a run"""

    model_config = ConfigDict(frozen=True)

    utm_zone: int = Field(..., ge=1, le=60)
    hemisphere: Literal["north", "south"]

    @property
    def central_meridian(self) -> float:
        return (self.utm_zone - 1) * 6 - 180 + 3

    @property
    def epsg(self) -> int:
        return (32600 if self.hemisphere == "north" else 32700) + self.utm_zone


class StreetSegment(BaseModel):
    """Intersection-split street polyline"""

    model_config = ConfigDict(frozen=True)

    segment_id: str
    source_way_id: int
    polyline: Tuple[Coordinate, ...] = Field(..., min_length=2)
    length_m: float = Field(..., gt=0)
    highway_class: str


class SamplePoint(BaseModel):
    """Chainage-referenced location on a segment"""

    model_config = ConfigDict(frozen=True)

    point_id: str
    segment_id: str
    chainage_m: float = Field(..., ge=0)
    lon: float
    lat: float


class RawOsmWay(BaseModel):
    model_config = ConfigDict(frozen=True)

    way_id: int
    node_refs: Tuple[int, ...] = Field(..., min_length=2)
    tags: Dict[str, str] = {}

    @property
    def highway(self) -> Optional[str]:
        return self.tags.get("highway")


class Provenance(BaseModel):
    """Where a network came from. The OSM snapshot date is only known as the retrieval time."""

    endpoint: str
    query: str
    cache_key: str
    retrieved_at: Optional[datetime] = None


class NetworkDataset(BaseModel):
    segments: List[StreetSegment] = []
    nodes: Dict[int, Coordinate] = {}
    provenance: Optional[Provenance] = None
    crs: Optional[MetricCrs] = None

    @property
    def total_length_m(self) -> float:
        return math.fsum(segment.length_m for segment in self.segments)

    def segment_ids(self) -> List[str]:
        return [segment.segment_id for segment in self.segments]


class SamplingConfig(BaseModel):
    """Spacing and offset of sample points along each segment, in meters"""

    model_config = ConfigDict(frozen=True)

    spacing_m: float = Field(40.0, gt=0)
    offset_m: float = Field(15.0, ge=0)


class CountsReport(BaseModel):
    """Network and sampling statistics, named after the coverage table of a case study"""

    segments: int
    total_length_km: float
    points: int
    bbox_km2: float

    @field_validator("segments", "points")
    @classmethod
    def non_negative(cls, value: int) -> int:
        if value < 0:
            raise ValueError("counts cannot be negative")
        return value
