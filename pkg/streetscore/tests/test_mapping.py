import unittest

import pytest

from streetscore.mapping import (
    color_for,
    coverage_class,
    map_domain,
    ramp_position,
    render_coverage_map,
    render_maps,
)
from streetscore.models import ImageRecord, ImageStatus, MapStyle, SummaryRow, parse_hex_color

from .test_aggregate import small_network
from .utils import NICE_CRS


STYLE = MapStyle()
HEADINGS = (0.0, 90.0, 180.0, 270.0)


def luminance(color):
    red, green, blue = parse_hex_color(color)
    return 0.2126 * red + 0.7152 * green + 0.0722 * blue


def row(entity_id, mean, count=1):
    if mean is None:
        return SummaryRow(entity_id=entity_id, task_id="T1")
    return SummaryRow(
        entity_id=entity_id, task_id="T1", mean=mean, sum=mean * count, min=mean, max=mean, count_valid=count
    )


class TestColors(unittest.TestCase):
    def test_ramp_ends_and_clamping(self):
        assert color_for(0, STYLE) == "#fde725"
        assert color_for(1, STYLE) == "#440154"
        assert color_for(-3, STYLE) == "#fde725"
        assert color_for(7, STYLE) == "#440154"
        assert color_for(0.5, STYLE) == "#21918c"

    def test_nodata(self):
        assert color_for(None, STYLE) == "#808080"
        assert color_for(None, STYLE.model_copy(update={"nodata_color": "#ABCDEF"})) == "#abcdef"

    def test_ramp_is_monotone(self):
        values = [step / 20 for step in range(21)]
        positions = [ramp_position(value, (0, 1)) for value in values]
        assert positions == sorted(positions)
        shades = [luminance(color_for(value, STYLE)) for value in values]
        for darker, lighter in zip(shades[1:], shades):
            assert darker <= lighter + 1e-9

    def test_domains(self):
        data = MapStyle(scale_mode="data", domain=None)
        assert map_domain(STYLE, [5, 9]) == (0.0, 1.0)
        assert map_domain(data, [None, 2, 5]) == (2, 5)
        assert map_domain(data, [None]) == (0.0, 1.0)
        assert map_domain(data, [3, 3]) == (3, 4)
        assert color_for(5, data, (2, 5)) == "#440154"

    def test_invalid_styles(self):
        with pytest.raises(ValueError):
            MapStyle(ramp=("#ffffff",))
        with pytest.raises(ValueError):
            MapStyle(nodata_color="grey")
        with pytest.raises(ValueError):
            MapStyle(domain=(1, 1))


class TestRenderMaps(unittest.TestCase):
    def render(self):
        net, points = small_network()
        point_rows = [row("1_0#0", 1), row("1_0#1", 0), row("2_0#0", None)]
        segment_rows = [row("1_0", 0.5, 2), row("1_1", None), row("2_0", None)]
        return render_maps(net, points, point_rows, segment_rows, STYLE, "T1", NICE_CRS, "Nice")

    def test_deterministic(self):
        assert self.render() == self.render()

    def test_every_feature_once(self):
        maps = self.render()
        assert sorted(maps) == ["points", "streets"]
        for segment_id in ("1_0", "1_1", "2_0"):
            assert maps["streets"].count(f'id="segment-{segment_id}"') == 1
        for point_id in ("1_0#0", "1_0#1", "2_0#0"):
            assert maps["points"].count(f'id="point-{point_id}"') == 1

    def test_grey_drawn_beneath(self):
        streets = self.render()["streets"]
        assert streets.index('id="segment-1_1"') < streets.index('id="segment-1_0"')
        assert streets.index('id="segment-2_0"') < streets.index('id="segment-1_0"')
        assert "#808080" in streets
        assert "#21918c" in streets

    def test_title_and_svg(self):
        streets = self.render()["streets"]
        assert streets.lstrip().startswith("<?xml")
        assert "Nice T1 by street segment (mean)" in streets


class TestCoverageMap(unittest.TestCase):
    def test_classes(self):
        available, placeholder = ImageStatus.AVAILABLE, ImageStatus.PLACEHOLDER
        assert coverage_class([available] * 4, HEADINGS) == "full"
        assert coverage_class([available, placeholder, placeholder, placeholder], HEADINGS) == "partial"
        assert coverage_class([placeholder, ImageStatus.FETCH_FAILED], HEADINGS) == "none"
        assert coverage_class([], HEADINGS) == "none"

    def test_render(self):
        _, points = small_network()
        records = [
            ImageRecord(point_id="1_0#0", heading_deg=heading, file_path="x", status=ImageStatus.AVAILABLE)
            for heading in HEADINGS
        ] + [
            ImageRecord(point_id="1_0#1", heading_deg=0.0, file_path="x", status=ImageStatus.PLACEHOLDER)
        ]
        svg = render_coverage_map(points, records, HEADINGS, STYLE, NICE_CRS, "Nice")
        assert svg == render_coverage_map(points, records, HEADINGS, STYLE, NICE_CRS, "Nice")
        for point in points:
            assert svg.count(f'id="point-{point.point_id}"') == 1
        assert "All 4 headings (1)" in svg
        assert "No imagery (2)" in svg
