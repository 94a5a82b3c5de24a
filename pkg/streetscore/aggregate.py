"""Point and segment summaries of image scores, joined onto the geometry layers

A segment's mean is the mean of its points' means, so every point weighs the same
whatever the number of its valid images.
"""
import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from streetscore.common import JoinError
from streetscore.geo_io import (
    feature_collection,
    point_feature,
    read_geojson,
    street_feature,
    write_geojson,
)
from streetscore.models import (
    STATISTICS,
    NetworkDataset,
    SamplePoint,
    ScoreRecord,
    ScoreStatus,
    SummaryRow,
)


__all__ = (
    "SEGMENT_MEAN_WEIGHTING",
    "summarize",
    "aggregate_points",
    "aggregate_segments",
    "row_properties",
    "layer_names",
    "write_geo_outputs",
    "read_geo_outputs",
)

LOGGER = logging.getLogger(__name__)

SEGMENT_MEAN_WEIGHTING = "equal_point_weight"


def summarize(entity_id: str, task_id: str, values: List[float], sum_of: Optional[List[float]] = None) -> SummaryRow:
    """Statistics over `values`; `sum_of` replaces the values summed when given"""
    if not values:
        return SummaryRow(entity_id=entity_id, task_id=task_id)
    low, high = min(values), max(values)
    # fsum rounding can push the mean of equal values just outside [min, max]
    mean = min(max(math.fsum(values) / len(values), low), high)
    return SummaryRow(
        entity_id=entity_id,
        task_id=task_id,
        mean=mean,
        sum=math.fsum(values if sum_of is None else sum_of),
        min=low,
        max=high,
        count_valid=len(values),
    )


def aggregate_points(
    records: Iterable[ScoreRecord], task_id: str, point_ids: Iterable[str]
) -> List[SummaryRow]:
    """One row per point of `point_ids` over its scored records; points without any are grey"""
    point_ids = list(point_ids)
    known = set(point_ids)
    scores: Dict[str, List[float]] = defaultdict(list)
    unknown = set()
    for record in records:
        if record.task_id != task_id:
            continue
        if record.point_id not in known:
            unknown.add(record.point_id)
            continue
        if record.status == ScoreStatus.SCORED:
            scores[record.point_id].append(record.score)
    if unknown:
        raise JoinError("point", unknown)

    rows = [summarize(point_id, task_id, scores.get(point_id, [])) for point_id in point_ids]
    LOGGER.info(
        "Task %s: %d of %d point(s) have scores",
        task_id,
        sum(1 for row in rows if not row.is_grey),
        len(rows),
    )
    return rows


def aggregate_segments(
    point_rows: List[SummaryRow],
    points: List[SamplePoint],
    task_id: str,
    segment_ids: Optional[Iterable[str]] = None,
) -> List[SummaryRow]:
    """Segment statistics from point rows: mean, min and max over point means, sum of point sums

    `segment_ids` lists every segment to report, including segments without points.
    """
    segment_of = {point.point_id: point.segment_id for point in points}
    unjoined = [row.entity_id for row in point_rows if row.entity_id not in segment_of]
    if unjoined:
        raise JoinError("point", unjoined)

    members: Dict[str, List[SummaryRow]] = defaultdict(list)
    for row in point_rows:
        members[segment_of[row.entity_id]].append(row)

    if segment_ids is None:
        segment_ids = sorted({point.segment_id for point in points})
    rows = []
    for segment_id in segment_ids:
        scored = [row for row in members.get(segment_id, []) if not row.is_grey]
        rows.append(
            summarize(
                segment_id,
                task_id,
                [row.mean for row in scored],
                sum_of=[row.sum for row in scored],
            )
        )
    return rows


def row_properties(row: Optional[SummaryRow], task_id: str) -> Dict[str, Optional[float]]:
    properties = {
        f"{task_id}_{name}": (row.statistic(name) if row is not None else None)
        for name in STATISTICS
    }
    properties[f"{task_id}_count"] = row.count_valid if row is not None else 0
    return properties


def layer_names(task_id: str) -> Dict[str, str]:
    return {"points": f"points_{task_id}.geojson", "streets": f"streets_{task_id}.geojson"}


def write_geo_outputs(
    net: NetworkDataset,
    points: List[SamplePoint],
    point_rows: List[SummaryRow],
    segment_rows: List[SummaryRow],
    out_dir: Union[str, Path],
    task_id: str,
) -> Dict[str, Path]:
    """Aggregated points and streets layers of one task, features sorted by id"""
    point_index = {row.entity_id: row for row in point_rows}
    segment_index = {row.entity_id: row for row in segment_rows}
    unknown_points = set(point_index) - {point.point_id for point in points}
    if unknown_points:
        raise JoinError("point", unknown_points)
    unknown_segments = set(segment_index) - set(net.segment_ids())
    if unknown_segments:
        raise JoinError("segment", unknown_segments)

    metadata = {"task_id": task_id, "segment_mean": SEGMENT_MEAN_WEIGHTING}
    names = layer_names(task_id)
    out_dir = Path(out_dir)
    paths = {
        "points": write_geojson(
            out_dir / names["points"],
            feature_collection(
                [
                    point_feature(point, row_properties(point_index.get(point.point_id), task_id))
                    for point in points
                ],
                metadata,
            ),
        ),
        "streets": write_geojson(
            out_dir / names["streets"],
            feature_collection(
                [
                    street_feature(
                        segment, row_properties(segment_index.get(segment.segment_id), task_id)
                    )
                    for segment in net.segments
                ],
                metadata,
            ),
        ),
    }
    LOGGER.info("Task %s: wrote %s and %s", task_id, names["points"], names["streets"])
    return paths


def read_geo_outputs(path: Union[str, Path], task_id: str) -> List[SummaryRow]:
    """Summary rows stored in an aggregated layer, in feature order"""
    rows = []
    for feature in read_geojson(path)["features"]:
        properties = feature["properties"]
        count = properties.get(f"{task_id}_count", 0)
        rows.append(
            SummaryRow(
                entity_id=feature["id"],
                task_id=task_id,
                count_valid=count,
                **{name: properties.get(f"{task_id}_{name}") for name in STATISTICS},
            )
        )
    return rows
