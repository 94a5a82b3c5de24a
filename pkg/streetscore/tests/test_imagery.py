import io
import threading
import unittest
from collections import Counter
from pathlib import Path
from tempfile import TemporaryDirectory
from unittest import mock

import numpy as np
import pytest
from PIL import Image
from starlette.testclient import TestClient

from streetscore.common import ConfigurationError, DataIntegrityError, ImageDecodeError, QuotaExhaustedError
from streetscore.config import MockSettings
from streetscore.imagery import (
    MANIFEST_NAME,
    RateLimiter,
    build_request,
    decode_image,
    detect_placeholder,
    fetch_batch,
    image_path,
    pixel_dominance,
    read_manifest,
    summarize_coverage,
    write_manifest,
)
from streetscore.main import create_app
from streetscore.models import CameraConfig, ImageRecord, ImageStatus, RatePolicy, SamplePoint
from streetscore.routers.streetview import is_placeholder_location
from streetscore.utils import redact_key


CAMERA = CameraConfig(image_size=(64, 48))
FAST = RatePolicy(rate_per_s=1000, burst=100, max_retries=1, backoff_s=0, workers=4)
BASE_URL = "http://testserver/maps/api/streetview"


def jpeg(pixels: np.ndarray, quality: int = 95) -> bytes:
    buffer = io.BytesIO()
    Image.fromarray(pixels.astype(np.uint8), mode="RGB").save(buffer, format="JPEG", quality=quality)
    return buffer.getvalue()


def png(pixels: np.ndarray) -> bytes:
    buffer = io.BytesIO()
    Image.fromarray(pixels.astype(np.uint8), mode="RGB").save(buffer, format="PNG")
    return buffer.getvalue()


def uniform(value=(228, 227, 223), size=(48, 64)):
    return np.broadcast_to(np.array(value), size + (3,)).copy()


def checkerboard(size=(48, 64), square=8):
    rows, cols = np.indices(size)
    board = ((rows // square + cols // square) % 2).astype(np.uint8) * 255
    return np.stack([board] * 3, axis=-1)


def make_points(count=5):
    return [
        SamplePoint(
            point_id=f"100_0#{index}",
            segment_id="100_0",
            chainage_m=15 + 40 * index,
            lon=7.30 + 0.0005 * index,
            lat=43.74,
        )
        for index in range(count)
    ]


def location(point: SamplePoint) -> str:
    return f"{point.lat:.6f},{point.lon:.6f}"


class TestPlaceholder(unittest.TestCase):
    def test_uniform_is_placeholder(self):
        assert detect_placeholder(png(uniform()), 0.9) == ImageStatus.PLACEHOLDER
        assert detect_placeholder(jpeg(uniform()), 0.9) == ImageStatus.PLACEHOLDER

    def test_checkerboard_is_genuine(self):
        assert pixel_dominance(decode_image(png(checkerboard()))) == 0.5
        assert detect_placeholder(png(checkerboard()), 0.9) == ImageStatus.AVAILABLE

    def test_thresholds_are_monotone(self):
        # dominance 0.95: a placeholder at 0.5 and 0.9, genuine at 0.99
        pixels = uniform()
        pixels.reshape(-1, 3)[: int(0.05 * 48 * 64)] = (10, 20, 30)
        pixels.reshape(-1, 3)[: int(0.05 * 48 * 64)] += np.arange(int(0.05 * 48 * 64))[:, None] % 7
        data = png(pixels)
        verdicts = [detect_placeholder(data, threshold) for threshold in (0.5, 0.9, 0.99)]
        assert verdicts == [ImageStatus.PLACEHOLDER, ImageStatus.PLACEHOLDER, ImageStatus.AVAILABLE]
        for data in (png(uniform()), png(checkerboard())):
            placeholder = [
                detect_placeholder(data, threshold) == ImageStatus.PLACEHOLDER
                for threshold in (0.5, 0.9, 0.99)
            ]
            assert placeholder == sorted(placeholder, reverse=True)

    def test_undecodable(self):
        with pytest.raises(ImageDecodeError):
            decode_image(b"<html>not an image</html>")


class TestManifest(unittest.TestCase):
    def test_image_path(self):
        assert image_path("100_0#3", 90.0) == "100_0#3/90.jpg"
        assert image_path("100_0#3", 22.5) == "100_0#3/22.5.jpg"

    def test_round_trip_and_strictness(self):
        records = [
            ImageRecord(
                point_id="100_0#0",
                heading_deg=0.0,
                file_path="100_0#0/0.jpg",
                status=ImageStatus.AVAILABLE,
                bytes_sha256="ab" * 32,
            ),
            ImageRecord(
                point_id="100_0#0",
                heading_deg=90.0,
                file_path="100_0#0/90.jpg",
                status=ImageStatus.FETCH_FAILED,
            ),
        ]
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / MANIFEST_NAME
            write_manifest(path, records)
            assert path.read_text().splitlines()[0] == "point_id,heading_deg,file_path,status,sha256"
            assert read_manifest(path) == records

            path.write_text(path.read_text() + "100_0#0,180,100_0#0/180.jpg,lost,\n")
            with pytest.raises(DataIntegrityError) as exc_info:
                read_manifest(path)
            assert "line 4" in str(exc_info.value)

            with pytest.raises(DataIntegrityError):
                read_manifest(Path(tmp) / "missing.csv")


class TestRequests(unittest.TestCase):
    def test_url(self):
        point = SamplePoint(point_id="p", segment_id="s", chainage_m=0, lon=7.3012345678, lat=43.74)
        url = build_request(point, 90, CAMERA, "k&y", base_url=BASE_URL)
        assert url == (
            f"{BASE_URL}?size=64x48&location=43.740000,7.301235&heading=90&pitch=0&fov=90&key=k%26y"
        )
        assert redact_key(url).endswith("&key=REDACTED")

    def test_missing_key(self):
        with pytest.raises(ConfigurationError):
            build_request(make_points(1)[0], 0, CAMERA, None)

    def test_rate_limiter(self):
        now = [0.0]
        waits = []

        def sleep(seconds):
            waits.append(seconds)
            now[0] += seconds

        limiter = RateLimiter(2.0, burst=2, clock=lambda: now[0], sleep=sleep)
        for _ in range(4):
            limiter.acquire()
        assert waits == [0.5, 0.5]


class TestCoverage(unittest.TestCase):
    def test_counts(self):
        def record(point_id, heading, status):
            return ImageRecord(point_id=point_id, heading_deg=heading, file_path="x", status=status)

        records = [record("a", h, ImageStatus.AVAILABLE) for h in (0, 90, 180, 270)]
        records += [record("b", h, ImageStatus.PLACEHOLDER) for h in (0, 90, 180, 270)]
        records += [record("c", 0, ImageStatus.AVAILABLE)] + [
            record("c", h, ImageStatus.FETCH_FAILED) for h in (90, 180, 270)
        ]
        counts = summarize_coverage(records, (0, 90, 180, 270))
        assert counts.points_4_images == 1
        assert counts.points_no_coverage == 1


class TestFetchBatch(unittest.TestCase):
    def fetch(self, images_dir, settings=None, **kwargs):
        client = kwargs.pop("client", None) or TestClient(create_app(settings or MockSettings()))
        return fetch_batch(
            kwargs.pop("points", make_points()),
            CAMERA,
            FAST,
            images_dir,
            kwargs.pop("api_key", "test-key"),
            base_url=BASE_URL,
            session=client,
            sleep=lambda _: None,
            **kwargs,
        )

    def test_manifest_and_coverage(self):
        settings = MockSettings(placeholder_share=0.5)
        points = make_points()
        expected_none = sum(1 for point in points if is_placeholder_location(location(point), settings))
        with TemporaryDirectory() as tmp:
            records = self.fetch(tmp, settings, points=points)
            assert len(records) == 20
            assert [record.key for record in records] == [
                (point.point_id, float(heading)) for point in points for heading in CAMERA.headings_deg
            ]
            assert read_manifest(Path(tmp) / MANIFEST_NAME) == records
            for record in records:
                assert record.status in (ImageStatus.AVAILABLE, ImageStatus.PLACEHOLDER)
                assert (Path(tmp) / record.file_path).exists()
            counts = summarize_coverage(records, CAMERA.headings_deg)
            assert counts.points_no_coverage == expected_none
            assert counts.points_4_images == len(points) - expected_none

    def test_all_placeholders(self):
        with TemporaryDirectory() as tmp:
            records = self.fetch(tmp, MockSettings(placeholder_all=True))
            assert {record.status for record in records} == {ImageStatus.PLACEHOLDER}

    def test_interrupted_run_resumes_to_same_manifest(self):
        settings = MockSettings(placeholder_share=0.3)
        with TemporaryDirectory() as first, TemporaryDirectory() as second:
            self.fetch(first, settings)
            partial = self.fetch(second, settings, limit=7)
            assert sum(1 for record in partial if record.status == ImageStatus.FETCH_FAILED) == 13
            self.fetch(second, settings)
            assert (Path(first) / MANIFEST_NAME).read_bytes() == (Path(second) / MANIFEST_NAME).read_bytes()

    def test_complete_rows_are_not_refetched(self):
        with TemporaryDirectory() as tmp:
            app = create_app(MockSettings(placeholder_share=0))
            client = TestClient(app)
            self.fetch(tmp, client=client)
            assert app.state.streetview_served.value == 20
            self.fetch(tmp, client=client)
            assert app.state.streetview_served.value == 20

    def test_quota_halts_and_flushes(self):
        with TemporaryDirectory() as tmp:
            with pytest.raises(QuotaExhaustedError):
                self.fetch(tmp, MockSettings(quota=5, placeholder_share=0))
            records = read_manifest(Path(tmp) / MANIFEST_NAME)
            assert len(records) == 20
            assert sum(1 for record in records if record.status == ImageStatus.AVAILABLE) == 5

    def test_missing_key(self):
        with TemporaryDirectory() as tmp:
            with pytest.raises(ConfigurationError):
                self.fetch(tmp, api_key="")

    def test_wrong_size_is_a_failure(self):
        class Session:
            def request(self, method, url, **kwargs):
                response = type("Response", (), {})()
                response.status_code = 200
                response.content = jpeg(checkerboard(size=(100, 100)))
                response.text = ""
                return response

        with TemporaryDirectory() as tmp:
            records = self.fetch(tmp, client=Session(), points=make_points(1))
            assert {record.status for record in records} == {ImageStatus.FETCH_FAILED}

    def test_retries_wait_for_the_rate_limiter(self):
        lock = threading.Lock()
        attempts = Counter()

        class FlakySession:
            def request(self, method, url, **kwargs):
                with lock:
                    attempts[url] += 1
                    count = attempts[url]
                response = type("Response", (), {})()
                response.status_code = 503 if count < 3 else 200
                response.content = jpeg(checkerboard()) if count >= 3 else b""
                response.text = ""
                return response

        policy = RatePolicy(rate_per_s=1000, burst=100, max_retries=2, backoff_s=0, workers=2)
        with TemporaryDirectory() as tmp, mock.patch.object(RateLimiter, "acquire", autospec=True) as acquire:
            records = fetch_batch(
                make_points(1),
                CAMERA,
                policy,
                tmp,
                "test-key",
                base_url=BASE_URL,
                session=FlakySession(),
                sleep=lambda _: None,
            )
        assert {record.status for record in records} == {ImageStatus.AVAILABLE}
        assert sum(attempts.values()) == 12
        assert acquire.call_count == 12
