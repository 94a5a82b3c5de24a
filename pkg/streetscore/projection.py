"""UTM zone selection, Transverse Mercator projection and linear referencing

The projection is the Krüger series in the form given by Karney (2011), expanded to
sixth order in the third flattening, which keeps errors well below 1 mm within the
zone. All coordinate lists are (lon, lat) in degrees or (easting, northing) in meters.
"""
import logging
import math
from typing import Sequence

import numpy as np
from shapely.geometry import LineString, Polygon

from streetscore.common import ChainageRangeError, ProjectionDomainError
from streetscore.models import BoundingBox, Coordinate, MetricCrs, StreetSegment


__all__ = (
    "select_metric_crs",
    "to_metric",
    "from_metric",
    "polyline_length",
    "interpolate_at",
    "bbox_area_km2",
)

LOGGER = logging.getLogger(__name__)

# WGS84
SEMI_MAJOR_AXIS = 6378137.0
FLATTENING = 1 / 298.257223563

SCALE_FACTOR = 0.9996
FALSE_EASTING = 500000.0
FALSE_NORTHING_SOUTH = 10000000.0
MAX_ABS_LATITUDE = 84.0
ZONE_HALF_WIDTH = 6.0

_N = FLATTENING / (2 - FLATTENING)
_ECCENTRICITY = math.sqrt(FLATTENING * (2 - FLATTENING))
_RECTIFYING_RADIUS = (
    SEMI_MAJOR_AXIS / (1 + _N) * (1 + _N ** 2 / 4 + _N ** 4 / 64 + _N ** 6 / 256)
)

_ALPHA = np.array(
    [
        _N / 2
        - 2 * _N ** 2 / 3
        + 5 * _N ** 3 / 16
        + 41 * _N ** 4 / 180
        - 127 * _N ** 5 / 288
        + 7891 * _N ** 6 / 37800,
        13 * _N ** 2 / 48
        - 3 * _N ** 3 / 5
        + 557 * _N ** 4 / 1440
        + 281 * _N ** 5 / 630
        - 1983433 * _N ** 6 / 1935360,
        61 * _N ** 3 / 240
        - 103 * _N ** 4 / 140
        + 15061 * _N ** 5 / 26880
        + 167603 * _N ** 6 / 181440,
        49561 * _N ** 4 / 161280 - 179 * _N ** 5 / 168 + 6601661 * _N ** 6 / 7257600,
        34729 * _N ** 5 / 80640 - 3418889 * _N ** 6 / 1995840,
        212378941 * _N ** 6 / 319334400,
    ]
)

_BETA = np.array(
    [
        _N / 2
        - 2 * _N ** 2 / 3
        + 37 * _N ** 3 / 96
        - _N ** 4 / 360
        - 81 * _N ** 5 / 512
        + 96199 * _N ** 6 / 604800,
        _N ** 2 / 48
        + _N ** 3 / 15
        - 437 * _N ** 4 / 1440
        + 46 * _N ** 5 / 105
        - 1118711 * _N ** 6 / 3870720,
        17 * _N ** 3 / 480
        - 37 * _N ** 4 / 840
        - 209 * _N ** 5 / 4480
        + 5569 * _N ** 6 / 90720,
        4397 * _N ** 4 / 161280 - 11 * _N ** 5 / 504 - 830251 * _N ** 6 / 7257600,
        4583 * _N ** 5 / 161280 - 108847 * _N ** 6 / 3991680,
        20648693 * _N ** 6 / 638668800,
    ]
)

_ORDERS = 2 * np.arange(1, 7)


def select_metric_crs(bbox: BoundingBox) -> MetricCrs:
    """UTM zone containing the bbox centroid; hemisphere from the centroid latitude sign"""
    lon, lat = bbox.centroid
    zone = int(math.floor((lon + 180) / 6)) + 1
    zone = min(max(zone, 1), 60)
    return MetricCrs(utm_zone=zone, hemisphere="north" if lat >= 0 else "south")


def _false_northing(crs: MetricCrs) -> float:
    return 0.0 if crs.hemisphere == "north" else FALSE_NORTHING_SOUTH


def _conformal_tau(tau: np.ndarray) -> np.ndarray:
    sigma = np.sinh(_ECCENTRICITY * np.arctanh(_ECCENTRICITY * tau / np.hypot(1, tau)))
    return tau * np.hypot(1, sigma) - sigma * np.hypot(1, tau)


def _as_array(coords: Sequence[Coordinate]) -> np.ndarray:
    array = np.asarray(coords, dtype=float)
    if array.size == 0:
        return array.reshape(0, 2)
    if array.ndim != 2 or array.shape[1] != 2:
        raise ValueError(f"Expected a list of (x, y) pairs, got an array of shape {array.shape}")
    return array


def to_metric(coords: Sequence[Coordinate], crs: MetricCrs) -> np.ndarray:
    """Forward Transverse Mercator: (lon, lat) degrees -> (easting, northing) meters"""
    lonlat = _as_array(coords)
    if not len(lonlat):
        return lonlat
    lon, lat = lonlat[:, 0], lonlat[:, 1]
    if np.any(np.abs(lat) > MAX_ABS_LATITUDE):
        raise ProjectionDomainError(
            f"Latitude beyond ±{MAX_ABS_LATITUDE}° cannot be projected to UTM "
            f"(max |lat| = {np.max(np.abs(lat))})"
        )

    delta_lon = (lon - crs.central_meridian + 180) % 360 - 180
    if np.any(np.abs(delta_lon) > ZONE_HALF_WIDTH):
        LOGGER.warning(
            "Coordinates up to %.2f° away from the central meridian of UTM zone %d; "
            "distances lose accuracy beyond ±%g°",
            float(np.max(np.abs(delta_lon))),
            crs.utm_zone,
            ZONE_HALF_WIDTH,
        )

    lam = np.radians(delta_lon)
    tau_prime = _conformal_tau(np.tan(np.radians(lat)))
    xi_prime = np.arctan2(tau_prime, np.cos(lam))
    eta_prime = np.arcsinh(np.sin(lam) / np.hypot(tau_prime, np.cos(lam)))

    orders = _ORDERS[:, None]
    xi = xi_prime + np.sum(
        _ALPHA[:, None] * np.sin(orders * xi_prime) * np.cosh(orders * eta_prime), axis=0
    )
    eta = eta_prime + np.sum(
        _ALPHA[:, None] * np.cos(orders * xi_prime) * np.sinh(orders * eta_prime), axis=0
    )

    easting = FALSE_EASTING + SCALE_FACTOR * _RECTIFYING_RADIUS * eta
    northing = _false_northing(crs) + SCALE_FACTOR * _RECTIFYING_RADIUS * xi
    return np.column_stack((easting, northing))


def from_metric(coords: Sequence[Coordinate], crs: MetricCrs) -> np.ndarray:
    """Inverse Transverse Mercator: (easting, northing) meters -> (lon, lat) degrees"""
    metric = _as_array(coords)
    if not len(metric):
        return metric
    xi = (metric[:, 1] - _false_northing(crs)) / (SCALE_FACTOR * _RECTIFYING_RADIUS)
    eta = (metric[:, 0] - FALSE_EASTING) / (SCALE_FACTOR * _RECTIFYING_RADIUS)

    orders = _ORDERS[:, None]
    xi_prime = xi - np.sum(_BETA[:, None] * np.sin(orders * xi) * np.cosh(orders * eta), axis=0)
    eta_prime = eta - np.sum(
        _BETA[:, None] * np.cos(orders * xi) * np.sinh(orders * eta), axis=0
    )

    tau_prime = np.sin(xi_prime) / np.hypot(np.sinh(eta_prime), np.cos(xi_prime))
    lam = np.arctan2(np.sinh(eta_prime), np.cos(xi_prime))

    # Newton iteration for tau from tau' (converges in 2-3 steps)
    one_minus_e2 = 1 - _ECCENTRICITY ** 2
    tau = tau_prime.copy()
    for _ in range(6):
        tau_i = _conformal_tau(tau)
        delta = (
            (tau_prime - tau_i)
            / np.hypot(1, tau_i)
            * (1 + one_minus_e2 * tau ** 2)
            / (one_minus_e2 * np.hypot(1, tau))
        )
        tau = tau + delta
        if np.all(np.abs(delta) < 1e-14):
            break

    lat = np.degrees(np.arctan(tau))
    lon = crs.central_meridian + np.degrees(lam)
    return np.column_stack((lon, lat))


def polyline_length(polyline: Sequence[Coordinate], crs: MetricCrs) -> float:
    """Sum of consecutive-vertex distances in the metric CRS, in meters"""
    metric = to_metric(polyline, crs)
    if len(metric) < 2:
        return 0.0
    return math.fsum(np.hypot(np.diff(metric[:, 0]), np.diff(metric[:, 1])))


def interpolate_at(segment: StreetSegment, chainage_m: float, crs: MetricCrs) -> Coordinate:
    """Point at arc distance `chainage_m` from the first vertex, computed in metric space"""
    if not 0 <= chainage_m <= segment.length_m:
        raise ChainageRangeError(chainage_m, segment.length_m, segment.segment_id)
    if chainage_m == 0:
        return tuple(segment.polyline[0])
    if chainage_m == segment.length_m:
        return tuple(segment.polyline[-1])

    line = LineString(to_metric(segment.polyline, crs))
    # length_m and the shapely length agree to rounding; scale so the end maps to the end
    point = line.interpolate(chainage_m * line.length / segment.length_m)
    lon, lat = from_metric([(point.x, point.y)], crs)[0]
    return (float(lon), float(lat))


def bbox_area_km2(bbox: BoundingBox, crs: MetricCrs, vertices_per_side: int = 32) -> float:
    """Area of the bbox polygon in the metric CRS, in km²"""
    # Densified edges, since straight lon/lat edges are curves in the metric CRS
    steps = np.linspace(0, 1, vertices_per_side, endpoint=False)
    d_lon = bbox.max_lon - bbox.min_lon
    d_lat = bbox.max_lat - bbox.min_lat
    ring = (
        [(bbox.min_lon + d_lon * step, bbox.min_lat) for step in steps]
        + [(bbox.max_lon, bbox.min_lat + d_lat * step) for step in steps]
        + [(bbox.max_lon - d_lon * step, bbox.max_lat) for step in steps]
        + [(bbox.min_lon, bbox.max_lat - d_lat * step) for step in steps]
    )
    return Polygon(to_metric(ring, crs)).area / 1e6
