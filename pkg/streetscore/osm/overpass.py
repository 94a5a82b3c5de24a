import json
import logging
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple, Union

import requests

from streetscore.common import OverpassError
from streetscore.config import CONFIG
from streetscore.models import BoundingBox, Provenance
from streetscore.osm.parser import load_document
from streetscore.utils import atomic_write_bytes, atomic_write_text, request_with_retries, sha256_hex


__all__ = ("build_query", "cache_path", "fetch_osm", "read_cached")

LOGGER = logging.getLogger(__name__)

_LOCKS: Dict[str, threading.Lock] = {}
_LOCKS_GUARD = threading.Lock()


def _query_lock(key: str) -> threading.Lock:
    with _LOCKS_GUARD:
        return _LOCKS.setdefault(key, threading.Lock())


def build_query(
    bbox: BoundingBox, highway_filter: Iterable[str], timeout_s: int = CONFIG.overpass["timeout_s"]
) -> str:
    """Overpass QL for every filtered highway way intersecting `bbox`, with inline geometry"""
    classes = "|".join(highway_filter)
    return (
        f"[out:json][timeout:{timeout_s}];"
        f'way["highway"~"^({classes})$"]({bbox.overpass_bbox()});'
        "out geom;"
    )


def cache_path(cache_dir: Union[str, Path], query: str) -> Path:
    return Path(cache_dir) / f"{sha256_hex(query)}.json"


def read_cached(cache_file: Path, endpoint: str, query: str) -> Tuple[Dict[str, Any], Provenance]:
    doc = load_document(cache_file.read_bytes())
    meta_file = cache_file.with_suffix(".meta.json")
    retrieved_at = None
    if meta_file.exists():
        with open(meta_file, encoding="utf-8") as handle:
            meta = json.load(handle)
        endpoint = meta.get("endpoint", endpoint)
        retrieved_at = meta.get("retrieved_at")
    provenance = Provenance(
        endpoint=endpoint,
        query=query,
        cache_key=cache_file.stem,
        retrieved_at=retrieved_at,
    )
    return doc, provenance


def fetch_osm(
    bbox: BoundingBox,
    endpoint: str,
    highway_filter: Iterable[str],
    cache_dir: Union[str, Path],
    *,
    timeout_s: int = CONFIG.overpass["timeout_s"],
    max_retries: int = CONFIG.overpass["max_retries"],
    backoff_s: float = CONFIG.overpass["backoff_s"],
    session: Optional[Any] = None,
    offline: bool = False,
) -> Tuple[Dict[str, Any], Provenance]:
    """Return the Overpass document for `bbox`, from the cache when present

    A fresh response is written verbatim to `cache_dir/<sha256 of query>.json` only once it
    parses, with a `.meta.json` sidecar holding the endpoint, query and retrieval time.
    """
    query = build_query(bbox, highway_filter, timeout_s)
    cache_file = cache_path(cache_dir, query)

    with _query_lock(cache_file.stem):
        if cache_file.exists():
            LOGGER.info("Overpass cache hit: %s", cache_file.name)
            return read_cached(cache_file, endpoint, query)
        if offline:
            raise OverpassError(f"No cached Overpass response for this query ({cache_file})")

        LOGGER.info("Overpass cache miss, querying %s", endpoint)
        session = session or requests.Session()
        response = request_with_retries(
            session,
            "POST",
            endpoint,
            max_retries=max_retries,
            backoff_s=backoff_s,
            error_cls=OverpassError,
            data={"data": query},
            headers={"User-Agent": CONFIG.user_agent},
            timeout=timeout_s + 30,
        )
        if response.status_code != 200:
            raise OverpassError(f"Overpass returned HTTP {response.status_code}", 1)

        raw = response.content
        doc = load_document(raw)
        retrieved_at = datetime.now(timezone.utc)
        atomic_write_bytes(cache_file, raw)
        atomic_write_text(
            cache_file.with_suffix(".meta.json"),
            json.dumps(
                {"endpoint": endpoint, "query": query, "retrieved_at": retrieved_at.isoformat()},
                indent=2,
                sort_keys=True,
            ),
        )
        LOGGER.info("Cached %d Overpass element(s) as %s", len(doc["elements"]), cache_file.name)
        return doc, Provenance(
            endpoint=endpoint, query=query, cache_key=cache_file.stem, retrieved_at=retrieved_at
        )
