import logging
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Set

from streetscore.models import Coordinate, MetricCrs, NetworkDataset, Provenance, RawOsmWay, StreetSegment
from streetscore.osm.parser import collapse_repeats
from streetscore.projection import polyline_length


__all__ = ("build_network", "split_nodes")

LOGGER = logging.getLogger(__name__)


def split_nodes(ways: List[RawOsmWay]) -> Set[int]:
    """Nodes where a street must be split: shared by two or more ways, or of degree >= 3"""
    ways_at: Dict[int, Set[int]] = defaultdict(set)
    neighbours: Dict[int, Set[int]] = defaultdict(set)
    for way in ways:
        for ref in way.node_refs:
            ways_at[ref].add(way.way_id)
        for start, end in zip(way.node_refs, way.node_refs[1:]):
            neighbours[start].add(end)
            neighbours[end].add(start)
    return {
        node
        for node in ways_at
        if len(ways_at[node]) >= 2 or len(neighbours[node]) >= 3
    }


def build_network(
    ways: Iterable[RawOsmWay],
    nodes: Dict[int, Coordinate],
    highway_filter: Iterable[str],
    crs: MetricCrs,
    provenance: Optional[Provenance] = None,
) -> NetworkDataset:
    """Filter ways by highway class and split them into intersection-free segments"""
    allowed = set(highway_filter)
    retained = []
    for way in ways:
        if way.highway not in allowed:
            continue
        refs = collapse_repeats(way.node_refs)
        if len(refs) < 2:
            continue
        retained.append(way if refs == way.node_refs else way.model_copy(update={"node_refs": refs}))

    splits = split_nodes(retained)
    segments: List[StreetSegment] = []
    for way in retained:
        pieces = [[way.node_refs[0]]]
        for ref in way.node_refs[1:-1]:
            pieces[-1].append(ref)
            if ref in splits:
                pieces.append([ref])
        pieces[-1].append(way.node_refs[-1])

        index = 0
        for piece in pieces:
            polyline = tuple(nodes[ref] for ref in piece)
            length = polyline_length(polyline, crs)
            if length <= 0:
                LOGGER.warning(
                    "Dropping zero-length piece of way %d between nodes %d and %d",
                    way.way_id,
                    piece[0],
                    piece[-1],
                )
                continue
            segments.append(
                StreetSegment(
                    segment_id=f"{way.way_id}_{index}",
                    source_way_id=way.way_id,
                    polyline=polyline,
                    length_m=length,
                    highway_class=way.highway,
                )
            )
            index += 1

    used = {ref for way in retained for ref in way.node_refs}
    network = NetworkDataset(
        segments=segments,
        nodes={ref: nodes[ref] for ref in sorted(used)},
        provenance=provenance,
        crs=crs,
    )
    LOGGER.info(
        "Built %d segment(s) from %d retained way(s), %.3f km in total",
        len(segments),
        len(retained),
        network.total_length_m / 1000,
    )
    return network
