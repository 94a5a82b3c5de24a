import io
import logging

import numpy as np
from PIL import Image, UnidentifiedImageError

from streetscore.common import ImageDecodeError
from streetscore.config import CONFIG
from streetscore.models import ImageStatus


__all__ = ("decode_image", "pixel_dominance", "detect_placeholder")

LOGGER = logging.getLogger(__name__)


def decode_image(data: bytes) -> Image.Image:
    try:
        image = Image.open(io.BytesIO(data))
        image.load()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(f"Cannot decode {len(data)} byte(s) as an image: {exc}") from exc
    return image


def pixel_dominance(image: Image.Image) -> float:
    """Share of pixels carrying the modal RGB value"""
    pixels = np.asarray(image.convert("RGB"), dtype=np.uint32)
    if not pixels.size:
        return 0.0
    packed = (pixels[..., 0] << 16) | (pixels[..., 1] << 8) | pixels[..., 2]
    _, counts = np.unique(packed, return_counts=True)
    return float(counts.max()) / packed.size


def detect_placeholder(
    data: bytes, threshold: float = CONFIG.streetview["dominance_threshold"]
) -> ImageStatus:
    """PLACEHOLDER when one pixel value covers at least `threshold` of the image, else AVAILABLE"""
    dominance = pixel_dominance(decode_image(data))
    verdict = ImageStatus.PLACEHOLDER if dominance >= threshold else ImageStatus.AVAILABLE
    LOGGER.debug("Pixel dominance %.4f (threshold %.2f): %s", dominance, threshold, verdict.value)
    return verdict
