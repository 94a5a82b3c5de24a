import math
import random
import unittest

from streetscore.models import CountsReport, NetworkDataset, SamplingConfig
from streetscore.projection import interpolate_at
from streetscore.sampler import point_count, sample_chainages, sample_network, sample_segment

from streetscore.tests.utils import NICE_CRS, straight_segment


DEFAULT_SAMPLING = SamplingConfig(spacing_m=40, offset_m=15)


def enumerate_chainages(length_m, offset_m, spacing_m):
    chainages = []
    chainage = offset_m
    k = 0
    while chainage <= length_m - offset_m:
        chainages.append(chainage)
        k += 1
        chainage = offset_m + k * spacing_m
    return chainages


class TestChainages(unittest.TestCase):
    def test_hundred_meters(self):
        assert sample_chainages(100, DEFAULT_SAMPLING) == [15, 55]

    def test_shorter_than_two_offsets(self):
        assert sample_chainages(29.9, DEFAULT_SAMPLING) == []

    def test_inclusive_boundary(self):
        assert sample_chainages(30, DEFAULT_SAMPLING) == [15]
        assert sample_chainages(110, DEFAULT_SAMPLING) == [15, 55, 95]

    def test_zero_offset(self):
        assert sample_chainages(80, SamplingConfig(spacing_m=40, offset_m=0)) == [0, 40, 80]

    def test_oracle(self):
        rng = random.Random(7)
        for _ in range(10000):
            length = rng.uniform(0, 500)
            offset = rng.uniform(0, 60)
            spacing = rng.uniform(0.5, 120)
            cfg = SamplingConfig(spacing_m=spacing, offset_m=offset)
            expected = enumerate_chainages(length, offset, spacing)
            assert sample_chainages(length, cfg) == expected
            assert point_count(length, cfg) == len(expected)
            ratio = (length - 2 * offset) / spacing
            if length >= 2 * offset and abs(ratio - round(ratio)) > 1e-9:
                assert len(expected) == math.floor(ratio) + 1
            elif length < 2 * offset:
                assert not expected


class TestSampleSegment(unittest.TestCase):
    def test_points_on_segment(self):
        segment = straight_segment("7_0", 230.0)
        points = sample_segment(segment, DEFAULT_SAMPLING, NICE_CRS)
        assert [point.point_id for point in points] == [f"7_0#{index}" for index in range(len(points))]
        assert len(points) == point_count(segment.length_m, DEFAULT_SAMPLING)
        for point in points:
            assert point.segment_id == "7_0"
            assert DEFAULT_SAMPLING.offset_m <= point.chainage_m <= segment.length_m - DEFAULT_SAMPLING.offset_m
            assert (point.lon, point.lat) == interpolate_at(segment, point.chainage_m, NICE_CRS)
        for first, second in zip(points, points[1:]):
            assert second.chainage_m - first.chainage_m == DEFAULT_SAMPLING.spacing_m

    def test_deterministic(self):
        segment = straight_segment("7_0", 230.0)
        assert sample_segment(segment, DEFAULT_SAMPLING, NICE_CRS) == sample_segment(
            segment, DEFAULT_SAMPLING, NICE_CRS
        )


class TestSampleNetwork(unittest.TestCase):
    def test_synthetic_kilometer(self):
        lengths = [35, 48, 62, 75, 88, 101, 117, 126, 164, 184]
        assert sum(lengths) == 1000
        segments = [
            straight_segment(f"{index + 1}_0", length, origin=(350000.0, 4845000.0 + 100 * index))
            for index, length in enumerate(lengths)
        ]
        net = NetworkDataset(segments=segments, crs=NICE_CRS)
        points, report = sample_network(net, DEFAULT_SAMPLING, NICE_CRS)
        oracle = sum(
            len(enumerate_chainages(segment.length_m, 15, 40)) for segment in segments
        )
        assert len(points) == oracle == report.points
        assert report.segments == 10
        assert abs(report.total_length_km - 1.0) < 1e-6
        assert set(report.model_dump()) == {"segments", "total_length_km", "points", "bbox_km2"}
        assert set(CountsReport.model_fields) == {"segments", "total_length_km", "points", "bbox_km2"}

    def test_short_segments_only(self):
        segments = [
            straight_segment(f"{index + 1}_0", 29.0, origin=(350000.0, 4845000.0 + 50 * index))
            for index in range(5)
        ]
        points, report = sample_network(NetworkDataset(segments=segments), DEFAULT_SAMPLING, NICE_CRS)
        assert points == []
        assert report.points == 0
        assert report.segments == 5

    def test_point_order_follows_segments(self):
        segments = [
            straight_segment("2_0", 120.0),
            straight_segment("1_0", 120.0, origin=(350000.0, 4845500.0)),
        ]
        points, _ = sample_network(NetworkDataset(segments=segments), DEFAULT_SAMPLING, NICE_CRS)
        assert [point.segment_id for point in points] == ["2_0"] * 3 + ["1_0"] * 3
