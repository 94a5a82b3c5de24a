"""Street View Static API look-alike serving deterministic JPEGs"""
import io
import logging
import re

import numpy as np
from fastapi import APIRouter, Depends, Query
from PIL import Image
from starlette.exceptions import HTTPException as StarletteHTTPException
from starlette.responses import Response

from streetscore.config import MockSettings
from streetscore.utils import format_number

from .utils import Counter, get_settings, get_streetview_counter, hash_fraction, hash_seed


router = APIRouter()

LOGGER = logging.getLogger(__name__)

SIZE_PATTERN = re.compile(r"^(\d{1,4})x(\d{1,4})$")
PLACEHOLDER_GREY = (228, 227, 223)


def _parse_size(size: str):
    match = SIZE_PATTERN.match(size)
    if match is None:
        raise StarletteHTTPException(status_code=400, detail=f"Invalid size {size!r}")
    width, height = int(match.group(1)), int(match.group(2))
    if not (0 < width <= 640 and 0 < height <= 640):
        raise StarletteHTTPException(status_code=400, detail=f"Size out of range: {size}")
    return width, height


def _parse_location(location: str):
    try:
        lat, lon = (float(part) for part in location.split(","))
    except ValueError:
        raise StarletteHTTPException(status_code=400, detail=f"Invalid location {location!r}")
    if not (-90 <= lat <= 90 and -180 <= lon <= 180):
        raise StarletteHTTPException(status_code=400, detail=f"Location out of range: {location}")
    return lat, lon


def is_placeholder_location(location: str, settings: MockSettings) -> bool:
    """Every heading of a location shares the verdict, as with real coverage gaps"""
    return settings.placeholder_all or hash_fraction(location) < settings.placeholder_share


def render_image(location: str, heading: float, size, settings: MockSettings) -> bytes:
    width, height = size
    if is_placeholder_location(location, settings):
        image = Image.new("RGB", (width, height), PLACEHOLDER_GREY)
    else:
        rng = np.random.default_rng(hash_seed(f"{location}|{format_number(heading)}"))
        pixels = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
        image = Image.fromarray(pixels, mode="RGB")
    buffer = io.BytesIO()
    image.save(buffer, format="JPEG", quality=settings.jpeg_quality)
    return buffer.getvalue()


@router.get("/maps/api/streetview", tags=["Street View"])
def get_streetview(
    size: str = Query(...),
    location: str = Query(...),
    heading: float = Query(0.0, ge=0, lt=360),
    pitch: float = Query(0.0, ge=-90, le=90),
    fov: float = Query(90.0, gt=0, le=120),
    key: str = Query(None),
    settings: MockSettings = Depends(get_settings),
    counter: Counter = Depends(get_streetview_counter),
):
    if not key:
        raise StarletteHTTPException(
            status_code=403, detail="The request is missing a valid API key."
        )
    dimensions = _parse_size(size)
    _parse_location(location)
    if not counter.take(settings.quota):
        raise StarletteHTTPException(
            status_code=429, detail="You have exceeded your daily request quota for this API."
        )
    data = render_image(location, heading, dimensions, settings)
    LOGGER.debug("Served %s @ %s (%d bytes)", location, format_number(heading), len(data))
    return Response(content=data, media_type="image/jpeg")
