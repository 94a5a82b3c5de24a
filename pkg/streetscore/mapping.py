"""Thematic SVG maps of aggregated scores, plus the image coverage map"""
import io
import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

from matplotlib import rc_context  # noqa: E402 pylint: disable=wrong-import-position
from matplotlib.cm import ScalarMappable  # noqa: E402 pylint: disable=wrong-import-position
from matplotlib.colors import LinearSegmentedColormap, Normalize  # noqa: E402 pylint: disable=wrong-import-position
from matplotlib.figure import Figure  # noqa: E402 pylint: disable=wrong-import-position
from matplotlib.patches import Patch  # noqa: E402 pylint: disable=wrong-import-position

from streetscore.config import CONFIG  # noqa: E402
from streetscore.models import (  # noqa: E402
    ImageRecord,
    ImageStatus,
    MapStyle,
    MetricCrs,
    NetworkDataset,
    SamplePoint,
    SummaryRow,
    parse_hex_color,
)
from streetscore.projection import to_metric  # noqa: E402


__all__ = (
    "ramp_position",
    "color_for",
    "map_domain",
    "render_maps",
    "render_coverage_map",
    "coverage_class",
)

LOGGER = logging.getLogger(__name__)

SVG_RC = {"svg.hashsalt": "streetscore", "svg.fonttype": "none", "path.simplify": False}
GREY_ZORDER = 1
COLOR_ZORDER = 2
DPI = 100


def ramp_position(value: float, domain: Tuple[float, float]) -> float:
    """Position of `value` on the ramp, 0 at the domain's low end and 1 at its high end"""
    low, high = domain
    if high <= low:
        return 0.0
    return min(max((value - low) / (high - low), 0.0), 1.0)


def _interpolate(ramp: Sequence[str], position: float) -> str:
    stops = [parse_hex_color(color) for color in ramp]
    scaled = position * (len(stops) - 1)
    index = min(int(scaled), len(stops) - 2)
    fraction = scaled - index
    start, end = stops[index], stops[index + 1]
    channels = [round(a + (b - a) * fraction) for a, b in zip(start, end)]
    return "#" + "".join(f"{channel:02x}" for channel in channels)


def color_for(
    value: Optional[float], style: MapStyle, domain: Optional[Tuple[float, float]] = None
) -> str:
    """Ramp color of `value`, clamped to the domain; the no-data color for an absent value

    `domain` is needed for data-driven styles; a fixed style uses its own.
    """
    if value is None:
        return style.nodata_color.lower()
    if style.scale_mode == "fixed" or domain is None:
        domain = style.domain or (0.0, 1.0)
    return _interpolate(style.ramp, ramp_position(value, domain))


def map_domain(style: MapStyle, values: Iterable[Optional[float]]) -> Tuple[float, float]:
    """Fixed domain of the style, or the min-max of the values present"""
    if style.scale_mode == "fixed":
        return tuple(style.domain)
    present = [value for value in values if value is not None]
    if not present:
        return (0.0, 1.0)
    low, high = min(present), max(present)
    return (low, high) if high > low else (low, low + 1.0)


def _figure(style: MapStyle, title: str) -> Tuple[Figure, "matplotlib.axes.Axes"]:
    width, height = style.canvas
    fig = Figure(figsize=(width / DPI, height / DPI), dpi=DPI)
    ax = fig.add_axes([0.02, 0.04, 0.78, 0.88])
    ax.set_axis_off()
    ax.set_aspect("equal", adjustable="datalim")
    fig.text(0.02, 0.96, title, fontsize=14, va="center")
    return fig, ax


def _fit(ax, coordinates: List[Tuple[float, float]]) -> None:
    if not coordinates:
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        return
    xs = [x for x, _ in coordinates]
    ys = [y for _, y in coordinates]
    pad = max(max(xs) - min(xs), max(ys) - min(ys), 1.0) * 0.03
    ax.set_xlim(min(xs) - pad, max(xs) + pad)
    ax.set_ylim(min(ys) - pad, max(ys) + pad)


def _colorbar(fig: Figure, style: MapStyle, domain: Tuple[float, float], label: str) -> None:
    cax = fig.add_axes([0.85, 0.3, 0.03, 0.45])
    cmap = LinearSegmentedColormap.from_list("ramp", list(style.ramp))
    colorbar = fig.colorbar(
        ScalarMappable(norm=Normalize(*domain), cmap=cmap), cax=cax, ticks=list(domain)
    )
    colorbar.set_label(label)


def _nodata_legend(ax, style: MapStyle) -> None:
    ax.legend(
        handles=[Patch(facecolor=style.nodata_color, edgecolor="none", label="No data")],
        loc="lower left",
        frameon=False,
    )


def _to_svg(fig: Figure) -> str:
    buffer = io.StringIO()
    with rc_context(SVG_RC):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def _row_value(row: Optional[SummaryRow], statistic: str) -> Optional[float]:
    if row is None or row.is_grey:
        return None
    return row.statistic(statistic)


def render_maps(
    net: NetworkDataset,
    points: List[SamplePoint],
    point_rows: List[SummaryRow],
    segment_rows: List[SummaryRow],
    style: MapStyle,
    task_id: str,
    crs: MetricCrs,
    case_name: str = "",
) -> Dict[str, str]:
    """Point-level and street-level maps of one task as SVG documents, keyed "points" and "streets"

    Features are drawn in id order, grey (no data) features beneath colored ones.
    """
    label = f"{task_id} {style.statistic}"
    prefix = f"{case_name} " if case_name else ""

    segment_index = {row.entity_id: row for row in segment_rows}
    segments = sorted(net.segments, key=lambda segment: segment.segment_id)
    segment_values = {
        segment.segment_id: _row_value(segment_index.get(segment.segment_id), style.statistic)
        for segment in segments
    }
    domain = map_domain(style, segment_values.values())
    fig, ax = _figure(style, f"{prefix}{task_id} by street segment ({style.statistic})")
    drawn = []
    for segment in segments:
        metric = to_metric(segment.polyline, crs)
        value = segment_values[segment.segment_id]
        line, = ax.plot(
            metric[:, 0],
            metric[:, 1],
            color=color_for(value, style, domain),
            linewidth=style.street_width,
            solid_capstyle="round",
            zorder=GREY_ZORDER if value is None else COLOR_ZORDER,
        )
        line.set_gid(f"segment-{segment.segment_id}")
        drawn.extend(map(tuple, metric))
    _fit(ax, drawn)
    _colorbar(fig, style, domain, label)
    _nodata_legend(ax, style)
    streets_svg = _to_svg(fig)

    point_index = {row.entity_id: row for row in point_rows}
    ordered = sorted(points, key=lambda point: point.point_id)
    point_values = {
        point.point_id: _row_value(point_index.get(point.point_id), style.statistic)
        for point in ordered
    }
    domain = map_domain(style, point_values.values())
    fig, ax = _figure(style, f"{prefix}{task_id} by sample point ({style.statistic})")
    metric = to_metric([(point.lon, point.lat) for point in ordered], crs)
    for point, (x, y) in zip(ordered, metric):
        value = point_values[point.point_id]
        marker, = ax.plot(
            [x],
            [y],
            marker="o",
            linestyle="none",
            markersize=style.point_size,
            markeredgewidth=0,
            color=color_for(value, style, domain),
            zorder=GREY_ZORDER if value is None else COLOR_ZORDER,
        )
        marker.set_gid(f"point-{point.point_id}")
    _fit(ax, [tuple(xy) for xy in metric])
    _colorbar(fig, style, domain, label)
    _nodata_legend(ax, style)
    points_svg = _to_svg(fig)

    LOGGER.info(
        "Rendered %s maps: %d segment(s), %d point(s)", task_id, len(segments), len(ordered)
    )
    return {"points": points_svg, "streets": streets_svg}


def coverage_class(statuses: Iterable[ImageStatus], headings: Sequence[float]) -> str:
    """"full" when every heading is available, "none" when none is, "partial" otherwise"""
    available = sum(1 for status in statuses if status == ImageStatus.AVAILABLE)
    if available == 0:
        return "none"
    return "full" if available >= len(headings) else "partial"


def render_coverage_map(
    points: List[SamplePoint],
    records: List[ImageRecord],
    headings: Sequence[float],
    style: MapStyle,
    crs: MetricCrs,
    case_name: str = "",
    colors: Optional[Dict[str, str]] = None,
) -> str:
    """Image availability by sample point as an SVG document"""
    colors = colors or CONFIG.map["coverage_colors"]
    statuses: Dict[str, List[ImageStatus]] = {point.point_id: [] for point in points}
    for record in records:
        statuses.setdefault(record.point_id, []).append(record.status)

    ordered = sorted(points, key=lambda point: point.point_id)
    prefix = f"{case_name} " if case_name else ""
    fig, ax = _figure(style, f"{prefix}image availability by sample point")
    metric = to_metric([(point.lon, point.lat) for point in ordered], crs)
    counts = {"full": 0, "partial": 0, "none": 0}
    for point, (x, y) in zip(ordered, metric):
        kind = coverage_class(statuses[point.point_id], headings)
        counts[kind] += 1
        marker, = ax.plot(
            [x],
            [y],
            marker="o",
            linestyle="none",
            markersize=style.point_size,
            markeredgewidth=0,
            color=colors[kind],
            zorder=COLOR_ZORDER if kind == "none" else GREY_ZORDER,
        )
        marker.set_gid(f"point-{point.point_id}")
    _fit(ax, [tuple(xy) for xy in metric])
    ax.legend(
        handles=[
            Patch(facecolor=colors["full"], label=f"All {len(headings)} headings ({counts['full']})"),
            Patch(facecolor=colors["partial"], label=f"Some headings ({counts['partial']})"),
            Patch(facecolor=colors["none"], label=f"No imagery ({counts['none']})"),
        ],
        loc="lower left",
        frameon=False,
    )
    return _to_svg(fig)
