"""GeoJSON layers of the street network and sample points, and the optional GeoPackage export"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from streetscore.common import ConfigurationError, DataIntegrityError
from streetscore.models import (
    MetricCrs,
    NetworkDataset,
    Provenance,
    SamplePoint,
    StreetSegment,
    SummaryRow,
)
from streetscore.utils import atomic_write_text


__all__ = (
    "STREETS_LAYER",
    "POINTS_LAYER",
    "NETWORK_MANIFEST",
    "feature_collection",
    "street_feature",
    "point_feature",
    "write_geojson",
    "read_geojson",
    "write_network",
    "read_network",
    "export_geopackage",
)

LOGGER = logging.getLogger(__name__)

STREETS_LAYER = "streets.geojson"
POINTS_LAYER = "points.geojson"
NETWORK_MANIFEST = "network.json"


def street_feature(segment: StreetSegment, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    properties = {
        "segment_id": segment.segment_id,
        "source_way_id": segment.source_way_id,
        "highway_class": segment.highway_class,
        "length_m": segment.length_m,
    }
    properties.update(extra or {})
    return {
        "type": "Feature",
        "id": segment.segment_id,
        "geometry": {
            "type": "LineString",
            "coordinates": [[lon, lat] for lon, lat in segment.polyline],
        },
        "properties": properties,
    }


def point_feature(point: SamplePoint, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    properties = {
        "point_id": point.point_id,
        "segment_id": point.segment_id,
        "chainage_m": point.chainage_m,
    }
    properties.update(extra or {})
    return {
        "type": "Feature",
        "id": point.point_id,
        "geometry": {"type": "Point", "coordinates": [point.lon, point.lat]},
        "properties": properties,
    }


def feature_collection(
    features: Sequence[Dict[str, Any]], metadata: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """FeatureCollection with features sorted by id"""
    collection = {
        "type": "FeatureCollection",
        "features": sorted(features, key=lambda feature: feature["id"]),
    }
    if metadata is not None:
        collection["metadata"] = metadata
    return collection


def write_geojson(path: Union[str, Path], collection: Dict[str, Any]) -> Path:
    path = Path(path)
    atomic_write_text(path, json.dumps(collection, indent=1, ensure_ascii=False) + "\n")
    return path


def read_geojson(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as handle:
            collection = json.load(handle)
    except FileNotFoundError as exc:
        raise DataIntegrityError(f"Missing layer {path}") from exc
    except json.JSONDecodeError as exc:
        raise DataIntegrityError(f"Layer {path} is not valid JSON: {exc}") from exc
    if collection.get("type") != "FeatureCollection":
        raise DataIntegrityError(f"Layer {path} is not a GeoJSON FeatureCollection")
    return collection


def write_network(
    net: NetworkDataset, points: List[SamplePoint], out_dir: Union[str, Path]
) -> Dict[str, Path]:
    """Write the streets and points layers plus the dataset manifest into `out_dir`"""
    out_dir = Path(out_dir)
    paths = {
        "streets": write_geojson(
            out_dir / STREETS_LAYER,
            feature_collection([street_feature(segment) for segment in net.segments]),
        ),
        "points": write_geojson(
            out_dir / POINTS_LAYER,
            feature_collection([point_feature(point) for point in points]),
        ),
    }
    manifest = {
        "crs": net.crs.model_dump() if net.crs else None,
        "provenance": net.provenance.model_dump(mode="json") if net.provenance else None,
        "nodes": {str(ref): list(coord) for ref, coord in sorted(net.nodes.items())},
        "counts": {
            "segments": len(net.segments),
            "total_length_m": net.total_length_m,
            "points": len(points),
        },
    }
    paths["network"] = out_dir / NETWORK_MANIFEST
    atomic_write_text(paths["network"], json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    LOGGER.debug("Wrote network layers to %s", out_dir)
    return paths


def read_network(out_dir: Union[str, Path]) -> Tuple[NetworkDataset, List[SamplePoint]]:
    out_dir = Path(out_dir)
    streets = read_geojson(out_dir / STREETS_LAYER)
    points_layer = read_geojson(out_dir / POINTS_LAYER)
    manifest_path = out_dir / NETWORK_MANIFEST
    manifest: Dict[str, Any] = {}
    if manifest_path.exists():
        with open(manifest_path, encoding="utf-8") as handle:
            manifest = json.load(handle)

    segments = [
        StreetSegment(
            segment_id=feature["properties"]["segment_id"],
            source_way_id=feature["properties"]["source_way_id"],
            polyline=tuple(tuple(coord) for coord in feature["geometry"]["coordinates"]),
            length_m=feature["properties"]["length_m"],
            highway_class=feature["properties"]["highway_class"],
        )
        for feature in streets["features"]
    ]
    points = [
        SamplePoint(
            point_id=feature["properties"]["point_id"],
            segment_id=feature["properties"]["segment_id"],
            chainage_m=feature["properties"]["chainage_m"],
            lon=feature["geometry"]["coordinates"][0],
            lat=feature["geometry"]["coordinates"][1],
        )
        for feature in points_layer["features"]
    ]
    # Features are stored sorted by id; sampling order is segment order then ordinal
    order = {segment.segment_id: index for index, segment in enumerate(segments)}
    points.sort(key=lambda point: (order.get(point.segment_id, -1), _ordinal(point.point_id)))

    net = NetworkDataset(
        segments=segments,
        nodes={int(ref): tuple(coord) for ref, coord in manifest.get("nodes", {}).items()},
        provenance=Provenance(**manifest["provenance"]) if manifest.get("provenance") else None,
        crs=MetricCrs(**manifest["crs"]) if manifest.get("crs") else None,
    )
    return net, points


def _ordinal(point_id: str) -> int:
    try:
        return int(point_id.rsplit("#", 1)[1])
    except (IndexError, ValueError):
        return -1


def export_geopackage(
    net: NetworkDataset,
    points: List[SamplePoint],
    path: Union[str, Path],
    point_rows: Optional[Dict[str, List[SummaryRow]]] = None,
    segment_rows: Optional[Dict[str, List[SummaryRow]]] = None,
) -> Path:
    """Single-container export with `streets` and `points` layers (requires the `gpkg` extra)

    `point_rows` and `segment_rows` map task ids to their summary rows, joined as
    `<task>_mean`, `<task>_sum`, `<task>_min`, `<task>_max` and `<task>_count` columns.
    """
    try:
        import geopandas  # pylint: disable=import-outside-toplevel
        from shapely.geometry import LineString, Point  # pylint: disable=import-outside-toplevel
    except ImportError as exc:
        raise ConfigurationError(
            "GeoPackage export needs geopandas; install streetscore[gpkg]"
        ) from exc

    def joined(rows_by_task, entity_id):
        properties = {}
        for task_id, rows in sorted((rows_by_task or {}).items()):
            row = next((row for row in rows if row.entity_id == entity_id), None)
            for name in ("mean", "sum", "min", "max"):
                properties[f"{task_id}_{name}"] = getattr(row, name) if row else None
            properties[f"{task_id}_count"] = row.count_valid if row else 0
        return properties

    def frame(records, columns):
        if not records:
            return geopandas.GeoDataFrame(columns=columns + ["geometry"], geometry="geometry", crs="EPSG:4326")
        return geopandas.GeoDataFrame(records, geometry="geometry", crs="EPSG:4326")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.exists():
        path.unlink()

    streets = frame(
        [
            {
                "segment_id": segment.segment_id,
                "source_way_id": segment.source_way_id,
                "highway_class": segment.highway_class,
                "length_m": segment.length_m,
                **joined(segment_rows, segment.segment_id),
                "geometry": LineString(segment.polyline),
            }
            for segment in sorted(net.segments, key=lambda segment: segment.segment_id)
        ],
        ["segment_id", "source_way_id", "highway_class", "length_m"],
    )
    sample_points = frame(
        [
            {
                "point_id": point.point_id,
                "segment_id": point.segment_id,
                "chainage_m": point.chainage_m,
                **joined(point_rows, point.point_id),
                "geometry": Point(point.lon, point.lat),
            }
            for point in sorted(points, key=lambda point: point.point_id)
        ],
        ["point_id", "segment_id", "chainage_m"],
    )
    streets.to_file(path, layer="streets", driver="GPKG")
    sample_points.to_file(path, layer="points", driver="GPKG")
    LOGGER.info("Exported GeoPackage %s with %d street(s) and %d point(s)", path, len(streets), len(sample_points))
    return path
