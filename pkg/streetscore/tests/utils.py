import json
from pathlib import Path

from streetscore.models import MetricCrs, StreetSegment
from streetscore.projection import from_metric, polyline_length


STATIC = Path(__file__).resolve().parent / "static"

NICE_CRS = MetricCrs(utm_zone=32, hemisphere="north")


def load_static(name: str):
    with open(STATIC / name, encoding="utf-8") as handle:
        return json.load(handle)


def straight_segment(
    segment_id: str,
    length_m: float,
    crs: MetricCrs = NICE_CRS,
    origin=(350000.0, 4845000.0),
    highway_class: str = "residential",
) -> StreetSegment:
    """East-going two-vertex segment of (about) `length_m` meters"""
    x, y = origin
    polyline = tuple(
        (float(lon), float(lat)) for lon, lat in from_metric([(x, y), (x + length_m, y)], crs)
    )
    return StreetSegment(
        segment_id=segment_id,
        source_way_id=int(segment_id.split("_")[0]) if segment_id[0].isdigit() else 1,
        polyline=polyline,
        length_m=polyline_length(polyline, crs),
        highway_class=highway_class,
    )
