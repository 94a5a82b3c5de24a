"""Sample points along street segments

Points sit at chainages offset, offset + spacing, offset + 2 * spacing, ... up to and
including length - offset. The residual slack is left at the far end of each segment.
"""
import logging
import math
from typing import List, Optional, Tuple

from streetscore.models import (
    BoundingBox,
    CountsReport,
    MetricCrs,
    NetworkDataset,
    SamplePoint,
    SamplingConfig,
    StreetSegment,
)
from streetscore.projection import bbox_area_km2, interpolate_at


__all__ = ("point_count", "sample_chainages", "sample_segment", "sample_network")

LOGGER = logging.getLogger(__name__)


def point_count(length_m: float, cfg: SamplingConfig) -> int:
    """Closed form: floor((L - 2 * offset) / spacing) + 1, or 0 when L < 2 * offset"""
    if length_m < 2 * cfg.offset_m:
        return 0
    count = int(math.floor((length_m - 2 * cfg.offset_m) / cfg.spacing_m)) + 1
    # Guard against the floor landing one off where the division rounds
    while count > 0 and cfg.offset_m + (count - 1) * cfg.spacing_m > length_m - cfg.offset_m:
        count -= 1
    while cfg.offset_m + count * cfg.spacing_m <= length_m - cfg.offset_m:
        count += 1
    return count


def sample_chainages(length_m: float, cfg: SamplingConfig) -> List[float]:
    return [cfg.offset_m + k * cfg.spacing_m for k in range(point_count(length_m, cfg))]


def sample_segment(
    segment: StreetSegment, cfg: SamplingConfig, crs: MetricCrs
) -> List[SamplePoint]:
    points = []
    for ordinal, chainage in enumerate(sample_chainages(segment.length_m, cfg)):
        lon, lat = interpolate_at(segment, chainage, crs)
        points.append(
            SamplePoint(
                point_id=f"{segment.segment_id}#{ordinal}",
                segment_id=segment.segment_id,
                chainage_m=chainage,
                lon=lon,
                lat=lat,
            )
        )
    return points


def sample_network(
    net: NetworkDataset,
    cfg: SamplingConfig,
    crs: MetricCrs,
    bbox: Optional[BoundingBox] = None,
) -> Tuple[List[SamplePoint], CountsReport]:
    """Sample every segment and report the network and sampling counts"""
    points: List[SamplePoint] = []
    for segment in net.segments:
        points.extend(sample_segment(segment, cfg, crs))

    report = CountsReport(
        segments=len(net.segments),
        total_length_km=net.total_length_m / 1000,
        points=len(points),
        bbox_km2=bbox_area_km2(bbox, crs) if bbox is not None else 0.0,
    )
    LOGGER.info(
        "Sampled %d point(s) on %d segment(s) (spacing %g m, offset %g m)",
        report.points,
        report.segments,
        cfg.spacing_m,
        cfg.offset_m,
    )
    return points, report
