import hashlib
import threading

from starlette.requests import Request

from streetscore.config import MockSettings


def get_settings(request: Request) -> MockSettings:
    return request.app.state.settings


def hash_fraction(text: str) -> float:
    """Stable number in [0, 1) derived from `text`"""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2 ** 64


def hash_seed(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


class Counter:
    """Thread-safe counter of served requests"""

    def __init__(self):
        self._lock = threading.Lock()
        self.value = 0

    def take(self, limit=None) -> bool:
        """Count one request; False once `limit` requests have been counted"""
        with self._lock:
            if limit is not None and self.value >= limit:
                return False
            self.value += 1
            return True


def get_streetview_counter(request: Request) -> Counter:
    return request.app.state.streetview_served
