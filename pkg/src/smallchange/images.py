"""Color image I/O and PNG byte codecs used by the pipeline and the wire protocol."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import MaskFormatError
from .masks import BinaryMask, ProbabilityMask


def load_image(path) -> np.ndarray:
    """Read an RGB image as a (height, width, 3) uint8 array."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"image file not found: {path}")
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    if arr.size == 0:
        raise MaskFormatError(f"{path}: zero-dimension image")
    return arr


def save_image(image: np.ndarray, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(_as_rgb(image), mode="RGB").save(path, format="PNG")


def _as_rgb(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise MaskFormatError(f"expected (h, w, 3) RGB array, got shape {arr.shape}")
    return arr


def image_to_png_bytes(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(_as_rgb(image), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def png_bytes_to_image(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def mask_to_png_bytes(mask: BinaryMask) -> bytes:
    buf = io.BytesIO()
    arr = np.where(mask.pixels, 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def png_bytes_to_mask(data: bytes) -> BinaryMask:
    with Image.open(io.BytesIO(data)) as img:
        arr = np.asarray(img.convert("L"), dtype=np.uint8)
    return BinaryMask(arr >= 128)


def prob_to_png_bytes(prob: ProbabilityMask) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(prob.levels, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def png_bytes_to_prob(data: bytes) -> ProbabilityMask:
    with Image.open(io.BytesIO(data)) as img:
        arr = np.asarray(img.convert("L"), dtype=np.uint8)
    return ProbabilityMask.from_levels(arr)
