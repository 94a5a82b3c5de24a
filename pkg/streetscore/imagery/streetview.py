import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple, Union
from urllib.parse import quote

import requests

from streetscore.common import (
    ConfigurationError,
    ImageDecodeError,
    QuotaExhaustedError,
    UpstreamServiceError,
)
from streetscore.config import CONFIG
from streetscore.imagery.manifest import MANIFEST_NAME, image_path, read_manifest, write_manifest
from streetscore.imagery.placeholder import decode_image, pixel_dominance
from streetscore.models import (
    CameraConfig,
    CoverageCounts,
    ImageRecord,
    ImageStatus,
    RatePolicy,
    SamplePoint,
)
from streetscore.utils import atomic_write_bytes, format_number, redact_key, request_with_retries, sha256_hex


__all__ = ("RateLimiter", "build_request", "fetch_batch", "summarize_coverage")

LOGGER = logging.getLogger(__name__)

# 429 means quota here, so only server errors are retried
IMAGERY_RETRY_STATUSES = frozenset({500, 502, 503, 504})
PROGRESS_EVERY = 100


class RateLimiter:
    """Thread-safe token bucket"""

    def __init__(
        self,
        rate_per_s: float,
        burst: int = 1,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if rate_per_s <= 0:
            raise ValueError("rate_per_s must be > 0")
        self.rate_per_s = rate_per_s
        self.burst = max(1, burst)
        self._clock = clock
        self._sleep = sleep
        self._tokens = float(self.burst)
        self._updated = clock()
        self._lock = threading.Lock()

    def _refill(self) -> None:
        now = self._clock()
        self._tokens = min(self.burst, self._tokens + (now - self._updated) * self.rate_per_s)
        self._updated = now

    def acquire(self) -> None:
        while True:
            with self._lock:
                self._refill()
                if self._tokens >= 1:
                    self._tokens -= 1
                    return
                wait = (1 - self._tokens) / self.rate_per_s
            self._sleep(wait)


def _require_key(key: Optional[str]) -> None:
    if not key:
        raise ConfigurationError(
            "No Street View API key: set the environment variable named by imagery.api_key_env "
            f"(default {CONFIG.streetview['api_key_env']})"
        )


def build_request(
    point: SamplePoint,
    heading: float,
    cam: CameraConfig,
    key: Optional[str],
    base_url: str = CONFIG.streetview["base_url"],
) -> str:
    """Street View Static API URL, parameters in a fixed order"""
    _require_key(key)
    width, height = cam.image_size
    return (
        f"{base_url}?size={width}x{height}"
        f"&location={point.lat:.6f},{point.lon:.6f}"
        f"&heading={format_number(heading)}"
        f"&pitch={format_number(cam.pitch_deg)}"
        f"&fov={format_number(cam.fov_deg)}"
        f"&key={quote(key, safe='')}"
    )


def summarize_coverage(
    records: Iterable[ImageRecord], headings: Optional[Tuple[float, ...]] = None
) -> CoverageCounts:
    """Points with every heading available, and points with no heading available"""
    return CoverageCounts.from_records(list(records), headings)


def _is_quota_response(response: Any) -> bool:
    if response.status_code == 429:
        return True
    if response.status_code == 403:
        return "quota" in (response.text or "").lower()
    return False


class _BatchFetcher:
    """Downloads one batch; the manifest has a single writer guarded by `_lock`"""

    def __init__(
        self,
        images_dir: Path,
        cam: CameraConfig,
        policy: RatePolicy,
        api_key: str,
        base_url: str,
        threshold: float,
        session: Any,
        sleep: Callable[[float], None],
    ):
        self.images_dir = images_dir
        self.cam = cam
        self.policy = policy
        self.api_key = api_key
        self.base_url = base_url
        self.threshold = threshold
        self.session = session
        self.sleep = sleep
        self.limiter = RateLimiter(policy.rate_per_s, policy.burst, sleep=sleep)
        self.halted = threading.Event()
        self._lock = threading.Lock()
        self.records: Dict[Tuple[str, float], ImageRecord] = {}

    def flush(self) -> None:
        with self._lock:
            write_manifest(self.images_dir / MANIFEST_NAME, list(self.records.values()))

    def store(self, key: Tuple[str, float], record: ImageRecord) -> None:
        with self._lock:
            self.records[key] = record

    def failed_record(self, point_id: str, heading: float) -> ImageRecord:
        return ImageRecord(
            point_id=point_id,
            heading_deg=heading,
            file_path=image_path(point_id, heading),
            status=ImageStatus.FETCH_FAILED,
        )

    def fetch_one(self, point: SamplePoint, heading: float) -> Optional[ImageRecord]:
        if self.halted.is_set():
            return None
        url = build_request(point, heading, self.cam, self.api_key, self.base_url)
        try:
            response = request_with_retries(
                self.session,
                "GET",
                url,
                max_retries=self.policy.max_retries,
                backoff_s=self.policy.backoff_s,
                retry_statuses=IMAGERY_RETRY_STATUSES,
                sleep=self.sleep,
                before_attempt=self.limiter.acquire,
                timeout=self.policy.timeout_s,
            )
        except UpstreamServiceError as exc:
            LOGGER.warning("Image %s @ %s failed: %s", point.point_id, format_number(heading), exc)
            return self.failed_record(point.point_id, heading)

        if _is_quota_response(response):
            self.halted.set()
            raise QuotaExhaustedError(
                f"Street View quota exhausted (HTTP {response.status_code}) at {redact_key(url)}"
            )
        if response.status_code != 200:
            LOGGER.warning(
                "Image %s @ %s: HTTP %d from %s",
                point.point_id,
                format_number(heading),
                response.status_code,
                redact_key(url),
            )
            return self.failed_record(point.point_id, heading)

        data = response.content
        try:
            image = decode_image(data)
        except ImageDecodeError as exc:
            LOGGER.warning("Image %s @ %s: %s", point.point_id, format_number(heading), exc)
            return self.failed_record(point.point_id, heading)
        if image.size != tuple(self.cam.image_size):
            LOGGER.warning(
                "Image %s @ %s has size %dx%d, expected %dx%d",
                point.point_id,
                format_number(heading),
                *image.size,
                *self.cam.image_size,
            )
            return self.failed_record(point.point_id, heading)

        dominance = pixel_dominance(image)
        status = ImageStatus.PLACEHOLDER if dominance >= self.threshold else ImageStatus.AVAILABLE
        LOGGER.debug(
            "Image %s @ %s: dominance %.4f, %s",
            point.point_id,
            format_number(heading),
            dominance,
            status.value,
        )
        relative = image_path(point.point_id, heading)
        atomic_write_bytes(self.images_dir / relative, data)
        return ImageRecord(
            point_id=point.point_id,
            heading_deg=heading,
            file_path=relative,
            status=status,
            bytes_sha256=sha256_hex(data),
        )

    def is_complete(self, record: Optional[ImageRecord]) -> bool:
        """A stored record may be reused when its file is present and unchanged"""
        if record is None or record.status == ImageStatus.FETCH_FAILED:
            return False
        path = self.images_dir / record.file_path
        return path.exists() and sha256_hex(path.read_bytes()) == record.bytes_sha256


def fetch_batch(
    points: List[SamplePoint],
    cam: CameraConfig,
    limits: RatePolicy,
    images_dir: Union[str, Path],
    api_key: Optional[str],
    *,
    base_url: str = CONFIG.streetview["base_url"],
    threshold: float = CONFIG.streetview["dominance_threshold"],
    session: Optional[Any] = None,
    limit: Optional[int] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> List[ImageRecord]:
    """Download every (point, heading) image not yet in the manifest and rewrite the manifest

    The manifest always holds one row per (point, heading), in point then heading order.
    Rows not fetched (yet) are recorded as fetch_failed and retried by the next call.
    `limit` caps the number of download attempts of this call.
    On exhausted quota the manifest is flushed before QuotaExhaustedError propagates.
    """
    images_dir = Path(images_dir)
    _require_key(api_key)
    fetcher = _BatchFetcher(
        images_dir,
        cam,
        limits,
        api_key,
        base_url,
        threshold,
        session or requests.Session(),
        sleep,
    )

    manifest_file = images_dir / MANIFEST_NAME
    previous = {}
    if manifest_file.exists():
        previous = {record.key: record for record in read_manifest(manifest_file)}

    pending = []
    for point in points:
        for heading in cam.headings_deg:
            key = (point.point_id, float(heading))
            record = previous.get(key)
            if fetcher.is_complete(record):
                fetcher.records[key] = record
            else:
                fetcher.records[key] = fetcher.failed_record(point.point_id, float(heading))
                pending.append((point, float(heading)))
    reused = len(fetcher.records) - len(pending)
    if limit is not None:
        pending = pending[:limit]
    LOGGER.info(
        "Fetching %d image(s) with %d worker(s); %d already in the manifest",
        len(pending),
        limits.workers,
        reused,
    )

    quota_error = None
    done = 0
    with ThreadPoolExecutor(max_workers=limits.workers) as pool:
        futures = {
            pool.submit(fetcher.fetch_one, point, heading): (point.point_id, heading)
            for point, heading in pending
        }
        for future in as_completed(futures):
            try:
                record = future.result()
            except QuotaExhaustedError as exc:
                quota_error = quota_error or exc
                continue
            if record is None:
                continue
            fetcher.store(futures[future], record)
            done += 1
            if done % PROGRESS_EVERY == 0:
                LOGGER.info("Fetched %d/%d image(s)", done, len(pending))
                fetcher.flush()

    fetcher.flush()
    if quota_error is not None:
        LOGGER.error("Quota exhausted after %d image(s); manifest flushed to %s", done, manifest_file)
        raise quota_error

    records = list(fetcher.records.values())
    tally = {status: 0 for status in ImageStatus}
    for record in records:
        tally[record.status] += 1
    LOGGER.info(
        "Manifest: %s",
        ", ".join(f"{count} {status.value}" for status, count in tally.items()),
    )
    return records
