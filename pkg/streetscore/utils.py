import hashlib
import json
import logging
import os
import re
import tempfile
import time
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Union

import requests
from fastapi.encoders import jsonable_encoder
from starlette.requests import Request
from starlette.responses import JSONResponse

from streetscore.common import UpstreamServiceError


LOGGER = logging.getLogger(__name__)

RETRY_STATUSES = frozenset({429, 500, 502, 503, 504})


def format_number(value: Union[int, float]) -> str:
    """Shortest stable text for a number: integral values lose their ".0" """
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


def sha256_hex(data: Union[bytes, str]) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def atomic_write_bytes(path: Union[str, Path], data: bytes) -> None:
    """Write to a temporary sibling, then rename it into place"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".part")
    try:
        with os.fdopen(handle, "wb") as tmp_file:
            tmp_file.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def redact_key(url: str) -> str:
    return re.sub(r"([?&]key=)[^&]*", r"\1REDACTED", url)


def request_with_retries(
    session: Any,
    method: str,
    url: str,
    *,
    max_retries: int,
    backoff_s: float,
    retry_statuses: Iterable[int] = RETRY_STATUSES,
    error_cls=UpstreamServiceError,
    sleep=time.sleep,
    before_attempt: Optional[Callable[[], Any]] = None,
    **kwargs,
):
    """Issue a request, retrying connection errors and retriable statuses with exponential backoff

    `session` is anything with requests' `request(method, url, **kwargs)` signature, e.g. a
    `requests.Session` or a starlette `TestClient`.
    Returns the final response, whatever its status, once it is not retriable.
    `before_attempt` runs ahead of every attempt, retries included, e.g. to take a rate-limit token.
    Raises `error_cls(message, attempts)` when every attempt failed.
    """
    retry_statuses = frozenset(retry_statuses)
    attempts = 0
    last_problem = ""
    while attempts <= max_retries:
        if attempts:
            delay = backoff_s * 2 ** (attempts - 1)
            LOGGER.info(
                "Retrying %s %s in %.2fs (attempt %d/%d): %s",
                method,
                redact_key(url),
                delay,
                attempts + 1,
                max_retries + 1,
                last_problem,
            )
            sleep(delay)
        attempts += 1
        if before_attempt is not None:
            before_attempt()
        try:
            response = session.request(method, url, **kwargs)
        except requests.RequestException as exc:
            last_problem = f"{exc.__class__.__name__}: {exc}"
            continue
        if response.status_code in retry_statuses:
            last_problem = f"HTTP {response.status_code}"
            continue
        return response

    raise error_cls(f"{method} {redact_key(url)} failed: {last_problem}", attempts)


def setup_logging(verbosity: int = 0, stream: Optional[Any] = None) -> None:
    """Configure the root logger for command-line use: -1 quiet, 0 info, 1+ debug"""
    level = logging.INFO
    if verbosity < 0:
        level = logging.WARNING
    elif verbosity > 0:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        stream=stream,
        format="%(asctime)s %(levelname)-7s %(name)s: %(message)s",
        force=True,
    )


def general_exception(request: Request, exc: Exception, **kwargs: Any) -> JSONResponse:
    """JSON error body `{"errors": [{"status", "title", "detail"}]}` for the mock services"""
    LOGGER.debug(
        "%s %s failed",
        request.method,
        redact_key(str(request.url)),
        exc_info=(type(exc), exc, exc.__traceback__),
    )

    status_code = getattr(exc, "status_code", kwargs.get("status_code", 500))
    detail = getattr(exc, "detail", str(exc))

    errors = kwargs.get("errors", None)
    if not errors:
        errors = [{"status": status_code, "title": exc.__class__.__name__, "detail": detail}]

    return JSONResponse(status_code=status_code, content=jsonable_encoder({"errors": errors}))
