"""Binary and probability masks plus the pixel-set operations everything else builds on.

Masks are immutable wrappers around 2-D numpy arrays, row-major. On disk both
kinds are 8-bit single-channel PNG: binary masks store {0, 255}, probability
masks store ``round(p * 255)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import DimensionMismatchError, MaskFormatError, ValidationError

_SQUARE_8CONN = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Pixel-wise foreground/background map.

    ``pixels`` is a read-only boolean array of shape (height, width).
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=bool, copy=True)
        if arr.ndim != 2:
            raise MaskFormatError(f"mask must be 2-D, got shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise MaskFormatError(f"mask dimensions must be positive, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        """(height, width), numpy order."""
        return self.pixels.shape

    @property
    def foreground_count(self) -> int:
        return int(np.count_nonzero(self.pixels))

    def is_empty(self) -> bool:
        return not bool(self.pixels.any())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.pixels, other.pixels))

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def full(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.ones((height, width), dtype=bool))


@dataclass(frozen=True, eq=False)
class ProbabilityMask:
    """Per-pixel change probability in [0, 1].

    Values are stored as float64. File I/O quantizes to 8-bit levels
    (``round(p * 255)``); masks read from disk therefore sit exactly on the
    ``k / 255`` grid and round-trip losslessly.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise MaskFormatError(f"probability mask must be 2-D, got shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise MaskFormatError(f"probability mask dimensions must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise MaskFormatError("probability values must be finite and within [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @property
    def levels(self) -> np.ndarray:
        """8-bit quantization used by the file format."""
        return np.rint(self.pixels * 255.0).astype(np.uint8)

    @classmethod
    def from_levels(cls, levels: np.ndarray) -> "ProbabilityMask":
        arr = np.asarray(levels, dtype=np.uint8)
        return cls(arr.astype(np.float64) / 255.0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProbabilityMask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.pixels, other.pixels))


def _read_gray_png(path: Path) -> np.ndarray:
    if not path.exists():
        raise FileNotFoundError(f"mask file not found: {path}")
    with Image.open(path) as img:
        if (img.format or "").upper() != "PNG":
            raise MaskFormatError(f"{path}: expected PNG, got {img.format}")
        if img.mode != "L":
            raise MaskFormatError(f"{path}: expected 8-bit single-channel PNG, got mode {img.mode}")
        arr = np.asarray(img, dtype=np.uint8)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise MaskFormatError(f"{path}: zero-dimension image")
    return arr


def _write_gray_png(arr: np.ndarray, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def load_mask(path) -> BinaryMask:
    """Read a binary mask PNG. Values >= 128 map to foreground."""
    arr = _read_gray_png(Path(path))
    return BinaryMask(arr >= 128)


def save_mask(mask: BinaryMask, path) -> None:
    """Write a binary mask PNG (foreground 255, background 0)."""
    _write_gray_png(np.where(mask.pixels, 255, 0).astype(np.uint8), Path(path))


def load_probability_mask(path) -> ProbabilityMask:
    """Read a probability mask PNG (pixel value / 255)."""
    return ProbabilityMask.from_levels(_read_gray_png(Path(path)))


def save_probability_mask(prob: ProbabilityMask, path) -> None:
    """Write a probability mask PNG, quantizing to 8-bit levels."""
    _write_gray_png(prob.levels, Path(path))


def threshold(prob: ProbabilityMask, t: float = 0.5) -> BinaryMask:
    """Binarize: a pixel is foreground iff its probability is strictly greater than ``t``."""
    if not 0.0 <= t <= 1.0:
        raise ValidationError(f"threshold must be within [0, 1], got {t}")
    return BinaryMask(prob.pixels > t)


def _require_same_shape(a, b) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"mask dimensions differ: {a.shape} vs {b.shape}")


def iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union. Two empty masks agree perfectly: returns 1."""
    _require_same_shape(a, b)
    inter = int(np.count_nonzero(a.pixels & b.pixels))
    uni = int(np.count_nonzero(a.pixels | b.pixels))
    if uni == 0:
        return 1.0
    return inter / uni


def disjoint(a: BinaryMask, b: BinaryMask) -> int:
    """1 if the masks share no foreground pixel (vacuously 1 when either is empty), else 0."""
    _require_same_shape(a, b)
    return 0 if bool((a.pixels & b.pixels).any()) else 1


def dilate(mask: BinaryMask, kernel_size: int = 5, iterations: int = 1) -> BinaryMask:
    """Morphological dilation with a square structuring element, clipped at borders."""
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ValidationError(f"kernel size must be odd and >= 1, got {kernel_size}")
    if iterations < 0:
        raise ValidationError(f"iterations must be >= 0, got {iterations}")
    if iterations == 0:
        return mask
    structure = np.ones((kernel_size, kernel_size), dtype=bool)
    grown = ndimage.binary_dilation(mask.pixels, structure=structure, iterations=iterations)
    return BinaryMask(grown)


def union(masks, *, width: int | None = None, height: int | None = None) -> BinaryMask:
    """Pixel-wise OR of masks. An empty list needs explicit reference dimensions."""
    masks = list(masks)
    if not masks:
        if width is None or height is None:
            raise ValidationError("union of no masks requires reference width and height")
        return BinaryMask.empty(width, height)
    first = masks[0]
    acc = np.zeros(first.shape, dtype=bool)
    for m in masks:
        _require_same_shape(first, m)
        acc |= m.pixels
    return BinaryMask(acc)


def connected_components(mask: BinaryMask) -> list[BinaryMask]:
    """8-connectivity components, ordered by their top-left-most foreground pixel (row-major).

    Outputs are pairwise disjoint, share the input dimensions, and union back
    to the input.
    """
    labels, count = ndimage.label(mask.pixels, structure=_SQUARE_8CONN)
    if count == 0:
        return []
    flat = labels.ravel()
    values, first_index = np.unique(flat, return_index=True)
    order = [(idx, val) for val, idx in zip(values.tolist(), first_index.tolist()) if val != 0]
    order.sort()
    return [BinaryMask(labels == val) for _, val in order]
