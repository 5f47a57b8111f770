"""Copy-paste synthesis of pseudo change-detection training data.

A foreground cutout from a COCO-style object bank is pasted at a random scale
and position onto a reference background, producing a (reference, pseudo live,
pseudo ground truth) triplet per sample. Pastes are opaque, masks are resized
nearest-neighbor so the ground truth stays binary, and the whole dataset is a
deterministic function of its seed and inputs.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .errors import PlacementError, ValidationError
from .images import load_image, save_image
from .masks import BinaryMask, save_mask

log = logging.getLogger(__name__)

DEFAULT_SCALE_RANGE = (0.02, 0.20)


@dataclass(frozen=True)
class ObjectCutout:
    """A paste source: the object's image patch and its support mask, same dimensions."""

    object_id: str
    image: np.ndarray
    mask: BinaryMask

    def __post_init__(self):
        if self.image.shape[:2] != self.mask.shape:
            raise ValidationError(
                f"cutout {self.object_id}: image {self.image.shape[:2]} vs mask {self.mask.shape}"
            )
        if self.mask.is_empty():
            raise ValidationError(f"cutout {self.object_id}: mask is empty")


@dataclass(frozen=True)
class Placement:
    """Top-left paste anchor plus the sampled scale (target longest side over
    the background's shorter side)."""

    x: int
    y: int
    scale: float

    def __post_init__(self):
        if self.scale <= 0:
            raise ValidationError(f"placement scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class SynthSample:
    sample_id: str
    background_id: str
    background_path: str
    object_id: str
    placement: Placement
    ref_path: str
    live_path: str
    gt_path: str
    seed: int


def scaled_size(
    cutout_size: tuple[int, int], bg_size: tuple[int, int], scale: float
) -> tuple[int, int]:
    """Pixel dimensions (width, height) of a cutout scaled for this background."""
    cw, ch = cutout_size
    bw, bh = bg_size
    factor = scale * min(bw, bh) / max(cw, ch)
    return max(1, round(cw * factor)), max(1, round(ch * factor))


def sample_placement(
    rng: np.random.Generator,
    bg_size: tuple[int, int],
    cutout_size: tuple[int, int],
    scale_range: tuple[float, float] = DEFAULT_SCALE_RANGE,
) -> Placement:
    """Draw a uniform scale and a uniform in-frame anchor for one paste."""
    lo, hi = scale_range
    if not (0.0 < lo <= hi <= 1.0):
        raise ValidationError(f"scale range must satisfy 0 < lo <= hi <= 1, got {scale_range}")
    bw, bh = bg_size
    scale = float(rng.uniform(lo, hi))
    nw, nh = scaled_size(cutout_size, bg_size, scale)
    if nw > bw or nh > bh:
        raise PlacementError(
            f"cutout {cutout_size} cannot fit background {bg_size} at scale {scale:.4f}"
        )
    x = int(rng.integers(0, bw - nw + 1))
    y = int(rng.integers(0, bh - nh + 1))
    return Placement(x=x, y=y, scale=scale)


def resize_mask_nearest(mask: BinaryMask, new_width: int, new_height: int) -> BinaryMask:
    """Nearest-neighbor mask resize; source index is floor((i + 0.5) * src / dst)."""
    src_h, src_w = mask.shape
    if (new_width, new_height) == (src_w, src_h):
        return mask
    rows = np.minimum(((np.arange(new_height) + 0.5) * src_h / new_height).astype(int), src_h - 1)
    cols = np.minimum(((np.arange(new_width) + 0.5) * src_w / new_width).astype(int), src_w - 1)
    return BinaryMask(mask.pixels[rows[:, None], cols[None, :]])


def resize_image_bilinear(image: np.ndarray, new_width: int, new_height: int) -> np.ndarray:
    if (new_width, new_height) == (image.shape[1], image.shape[0]):
        return image.copy()
    pil = Image.fromarray(image, mode="RGB").resize((new_width, new_height), Image.BILINEAR)
    return np.asarray(pil, dtype=np.uint8)


def composite(
    bg: np.ndarray, cutout: ObjectCutout, placement: Placement
) -> tuple[np.ndarray, BinaryMask]:
    """Opaquely paste the scaled cutout; returns (pseudo live image, ground truth mask).

    The background is left untouched; the ground truth is exactly the placed
    support of the rescaled cutout mask.
    """
    bh, bw = bg.shape[:2]
    ch, cw = cutout.mask.shape
    nw, nh = scaled_size((cw, ch), (bw, bh), placement.scale)
    x, y = placement.x, placement.y
    if x < 0 or y < 0 or x + nw > bw or y + nh > bh:
        raise PlacementError(
            f"placement ({x}, {y}) with scaled box {nw}x{nh} exceeds frame {bw}x{bh}"
        )
    mask = resize_mask_nearest(cutout.mask, nw, nh)
    patch = resize_image_bilinear(cutout.image, nw, nh)
    live = bg.copy()
    window = live[y : y + nh, x : x + nw]
    window[mask.pixels] = patch[mask.pixels]
    gt = np.zeros((bh, bw), dtype=bool)
    gt[y : y + nh, x : x + nw] = mask.pixels
    return live, BinaryMask(gt)


# --- COCO-style object bank -------------------------------------------------


def _polygons_to_mask(polygons, width: int, height: int) -> np.ndarray:
    img = Image.new("1", (width, height), 0)
    drawer = ImageDraw.Draw(img)
    for poly in polygons:
        points = list(zip(poly[0::2], poly[1::2]))
        if len(points) >= 3:
            drawer.polygon(points, outline=1, fill=1)
    return np.asarray(img, dtype=bool)


def _rle_to_mask(rle: dict) -> np.ndarray:
    counts = rle["counts"]
    if isinstance(counts, str):
        raise ValidationError("compressed RLE segmentations are not supported")
    h, w = rle["size"]
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for run in counts:
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    # COCO RLE runs are column-major
    return flat.reshape((h, w), order="F")


def _sanitize(name: str) -> str:
    return "".join(c if c.isalnum() else "-" for c in name).strip("-") or "object"


def load_object_bank(annotation_path, images_dir=None) -> list[ObjectCutout]:
    """Materialize cutouts from COCO-style annotations (polygon or uncompressed RLE).

    ``images_dir`` defaults to the annotation file's directory; ``file_name``
    entries resolve against it.
    """
    annotation_path = Path(annotation_path)
    if not annotation_path.exists():
        raise FileNotFoundError(f"object bank annotation file not found: {annotation_path}")
    images_dir = Path(images_dir) if images_dir is not None else annotation_path.parent
    data = json.loads(annotation_path.read_text(encoding="utf-8"))
    images = {img["id"]: img for img in data.get("images", [])}
    categories = {cat["id"]: cat.get("name", "object") for cat in data.get("categories", [])}

    loaded: dict[int, np.ndarray] = {}
    cutouts: list[ObjectCutout] = []
    for ann in sorted(data.get("annotations", []), key=lambda a: a["id"]):
        info = images.get(ann["image_id"])
        if info is None:
            raise ValidationError(f"annotation {ann['id']} references unknown image {ann['image_id']}")
        if ann["image_id"] not in loaded:
            loaded[ann["image_id"]] = load_image(images_dir / info["file_name"])
        image = loaded[ann["image_id"]]
        h, w = image.shape[:2]

        seg = ann.get("segmentation")
        if isinstance(seg, dict):
            mask = _rle_to_mask(seg)
        elif isinstance(seg, list):
            mask = _polygons_to_mask(seg, w, h)
        else:
            raise ValidationError(f"annotation {ann['id']}: unsupported segmentation {type(seg)}")
        if mask.shape != (h, w):
            raise ValidationError(
                f"annotation {ann['id']}: segmentation size {mask.shape} vs image {(h, w)}"
            )
        if not mask.any():
            log.warning("annotation %s yields an empty mask; skipped", ann["id"])
            continue

        rows = np.flatnonzero(mask.any(axis=1))
        cols = np.flatnonzero(mask.any(axis=0))
        y0, y1 = int(rows[0]), int(rows[-1]) + 1
        x0, x1 = int(cols[0]), int(cols[-1]) + 1
        name = _sanitize(categories.get(ann.get("category_id"), "object"))
        cutouts.append(
            ObjectCutout(
                object_id=f"{name}-{ann['id']}",
                image=image[y0:y1, x0:x1].copy(),
                mask=BinaryMask(mask[y0:y1, x0:x1]),
            )
        )
    return cutouts


def load_backgrounds(manifest_path) -> list[tuple[str, Path]]:
    """Read a JSON-lines background manifest ({id, path}); paths resolve relative to it."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise FileNotFoundError(f"background manifest not found: {manifest_path}")
    entries: list[tuple[str, Path]] = []
    for lineno, line in enumerate(manifest_path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{manifest_path}:{lineno}: invalid JSON ({exc})") from exc
        if "id" not in row or "path" not in row:
            raise ValidationError(f"{manifest_path}:{lineno}: entry needs 'id' and 'path'")
        path = Path(row["path"])
        if not path.is_absolute():
            path = manifest_path.parent / path
        if not path.exists():
            raise ValidationError(f"{manifest_path}:{lineno}: background not found: {path}")
        entries.append((str(row["id"]), path))
    return entries


def generate_dataset(
    backgrounds: list[tuple[str, Path]],
    bank: list[ObjectCutout],
    count: int,
    seed: int,
    out_dir,
    scale_range: tuple[float, float] = DEFAULT_SCALE_RANGE,
) -> list[SynthSample]:
    """Write ``count`` triplets plus a ``samples.jsonl`` manifest under ``out_dir``.

    Backgrounds and objects are drawn uniformly with a generator seeded by
    ``seed``; identical inputs and seed reproduce the dataset byte for byte.
    """
    if count < 0:
        raise ValidationError(f"count must be >= 0, got {count}")
    if count > 0 and (not backgrounds or not bank):
        raise ValidationError("backgrounds and object bank must be nonempty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(seed)
    bg_cache: dict[Path, np.ndarray] = {}
    samples: list[SynthSample] = []
    rows: list[str] = []
    for i in range(count):
        bg_id, bg_path = backgrounds[int(rng.integers(len(backgrounds)))]
        cutout = bank[int(rng.integers(len(bank)))]
        if bg_path not in bg_cache:
            bg_cache[bg_path] = load_image(bg_path)
        bg = bg_cache[bg_path]
        bh, bw = bg.shape[:2]
        placement = sample_placement(
            rng, (bw, bh), (cutout.mask.width, cutout.mask.height), scale_range
        )
        live, gt = composite(bg, cutout, placement)

        sample_id = f"sample-{i:05d}"
        rel = {
            "ref": f"ref/{sample_id}.png",
            "live": f"live/{sample_id}.png",
            "gt": f"gt/{sample_id}.png",
        }
        save_image(bg, out_dir / rel["ref"])
        save_image(live, out_dir / rel["live"])
        save_mask(gt, out_dir / rel["gt"])
        sample = SynthSample(
            sample_id=sample_id,
            background_id=bg_id,
            background_path=str(bg_path),
            object_id=cutout.object_id,
            placement=placement,
            ref_path=rel["ref"],
            live_path=rel["live"],
            gt_path=rel["gt"],
            seed=seed,
        )
        samples.append(sample)
        rows.append(
            json.dumps(
                {
                    "sample_id": sample_id,
                    "bg": bg_id,
                    "object_id": cutout.object_id,
                    "x": placement.x,
                    "y": placement.y,
                    "scale": placement.scale,
                    "seed": seed,
                    "paths": rel,
                }
            )
        )
    manifest = out_dir / "samples.jsonl"
    manifest.write_text("".join(row + "\n" for row in rows), encoding="utf-8")
    return samples
