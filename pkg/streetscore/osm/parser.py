import json
import logging
from typing import Any, Dict, List, Tuple, Union

from streetscore.common import OsmStructureError, OverpassParseError
from streetscore.models import Coordinate, RawOsmWay


__all__ = ("load_document", "parse_overpass", "collapse_repeats")

LOGGER = logging.getLogger(__name__)


def load_document(raw: Union[str, bytes]) -> Dict[str, Any]:
    """Decode an Overpass JSON response, reporting the byte offset of any syntax error"""
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise OverpassParseError("Overpass response is not valid UTF-8", exc.start) from exc
    else:
        text = raw
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise OverpassParseError(f"Malformed Overpass response ({exc.msg})", offset) from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("elements"), list):
        raise OverpassParseError("Overpass response has no 'elements' array", 0)
    return doc


def collapse_repeats(refs) -> Tuple[int, ...]:
    """Drop consecutive duplicate node references"""
    collapsed = []
    for ref in refs:
        if not collapsed or collapsed[-1] != ref:
            collapsed.append(ref)
    return tuple(collapsed)


def _way_geometry(element: Dict[str, Any]) -> Dict[int, Coordinate]:
    """Coordinates given inline by `out geom`, keyed by node id"""
    geometry = element.get("geometry") or []
    coords = {}
    for ref, point in zip(element.get("nodes", []), geometry):
        if point and "lat" in point and "lon" in point:
            coords[int(ref)] = (float(point["lon"]), float(point["lat"]))
    return coords


def parse_overpass(
    doc: Union[Dict[str, Any], str, bytes]
) -> Tuple[List[RawOsmWay], Dict[int, Coordinate]]:
    """Ways carrying a highway tag, and the coordinates of every node they reference

    Accepts documents with inline way geometry (`out geom`) as well as documents listing
    node elements separately (`out body; >; out skel`).
    """
    if not isinstance(doc, dict):
        doc = load_document(doc)
    elements = doc.get("elements")
    if not isinstance(elements, list):
        raise OverpassParseError("Overpass response has no 'elements' array", 0)

    known_nodes: Dict[int, Coordinate] = {}
    raw_ways = []
    skipped = 0
    for element in elements:
        kind = element.get("type")
        if kind == "node" and "lat" in element and "lon" in element:
            known_nodes[int(element["id"])] = (float(element["lon"]), float(element["lat"]))
        elif kind == "way":
            known_nodes.update(_way_geometry(element))
            if "highway" in (element.get("tags") or {}):
                raw_ways.append(element)
            else:
                skipped += 1

    ways = []
    missing = set()
    for element in raw_ways:
        refs = collapse_repeats(int(ref) for ref in element.get("nodes", []))
        missing.update(ref for ref in refs if ref not in known_nodes)
        if len(refs) < 2:
            LOGGER.warning("Skipping way %s: fewer than 2 distinct nodes", element.get("id"))
            continue
        ways.append(
            RawOsmWay(
                way_id=int(element["id"]),
                node_refs=refs,
                tags={str(k): str(v) for k, v in element["tags"].items()},
            )
        )
    if missing:
        raise OsmStructureError(missing)

    referenced = {ref for way in ways for ref in way.node_refs}
    nodes = {ref: known_nodes[ref] for ref in sorted(referenced)}
    LOGGER.info(
        "Parsed %d element(s): %d highway way(s), %d other way(s), %d node(s)",
        len(elements),
        len(ways),
        skipped,
        len(nodes),
    )
    return ways, nodes
