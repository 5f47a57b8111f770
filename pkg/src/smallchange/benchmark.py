"""Synthetic benchmark where oversegmentation is perfect and the base detector is not.

Builds a dataset of pasted-object pairs, corrupts each ground-truth mask into
a simulated base-detector output (dilate / erode / shift / wipe), and records
everything as a fixture tree: the change map reproduces the corrupted mask,
every query region is described as the same object, and live segmentation
returns the true mask. Running the pipeline over it exercises the full
adopt-or-keep decision sweep.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .fixtures import FixtureWriter
from .images import load_image
from .masks import BinaryMask, ProbabilityMask, dilate, load_mask, threshold
from .object_search import SearchConfig, prepare_query_regions
from .pipeline import PairEntry, write_pair_manifest
from .synth import ObjectCutout, generate_dataset

BENCH_LABEL = "gadget"
BENCH_RESPONSE = f"This object is a {BENCH_LABEL}."

_FG_LEVEL = 230  # 230/255 > 0.5 -> foreground after thresholding
_BG_LEVEL = 25


@dataclass
class BenchmarkPaths:
    manifest: Path
    fixtures: Path
    dataset: Path


def _tiny_banks(rng: np.random.Generator):
    """In-memory backgrounds and object bank with distinct palettes per item."""
    backgrounds = []
    for i in range(10):
        bg = np.zeros((48, 64, 3), dtype=np.uint8)
        bg[:, :] = (20 + 4 * i, 60 + 3 * i, 110 + 2 * i)
        # light texture so backgrounds are not monochrome
        noise = rng.integers(0, 12, size=bg.shape, dtype=np.uint8)
        backgrounds.append((f"bg{i}", np.clip(bg.astype(int) + noise, 0, 255).astype(np.uint8)))

    bank = []
    plus = np.zeros((9, 9), dtype=bool)
    plus[3:6, :] = True
    plus[:, 3:6] = True
    # solid / triangular / plus shapes all keep a nonempty support when
    # rescaled nearest-neighbor at the scales this benchmark draws
    shapes = [
        np.ones((6, 9), dtype=bool),
        np.tril(np.ones((8, 8), dtype=bool)),
        plus,
    ]
    for i, support in enumerate(shapes):
        img = np.zeros((*support.shape, 3), dtype=np.uint8)
        img[:, :] = (200 - 30 * i, 40 + 50 * i, 30 + 60 * i)
        bank.append(ObjectCutout(object_id=f"shape{i}", image=img, mask=BinaryMask(support)))
    return backgrounds, bank


def _shift(pixels: np.ndarray, dx: int, dy: int) -> np.ndarray:
    out = np.zeros_like(pixels)
    h, w = pixels.shape
    src_y = slice(max(0, -dy), min(h, h - dy))
    src_x = slice(max(0, -dx), min(w, w - dx))
    dst_y = slice(max(0, dy), min(h, h + dy))
    dst_x = slice(max(0, dx), min(w, w + dx))
    out[dst_y, dst_x] = pixels[src_y, src_x]
    return out


def corrupt_mask(rng: np.random.Generator, gt: BinaryMask) -> BinaryMask:
    """Simulated base-detector output: a randomly degraded copy of the truth."""
    kind = rng.choice(["dilate", "erode", "shift", "shift_dilate", "keep", "wipe"],
                      p=[0.3, 0.15, 0.25, 0.2, 0.05, 0.05])
    if kind == "keep":
        return gt
    if kind == "wipe":
        return BinaryMask(np.zeros(gt.shape, dtype=bool))
    if kind == "dilate":
        return dilate(gt, 3, int(rng.integers(1, 4)))
    if kind == "erode":
        eroded = ndimage.binary_erosion(gt.pixels, structure=np.ones((3, 3), dtype=bool))
        return BinaryMask(eroded)
    dx = int(rng.integers(1, 5)) * int(rng.choice([-1, 1]))
    dy = int(rng.integers(1, 5)) * int(rng.choice([-1, 1]))
    shifted = BinaryMask(_shift(gt.pixels, dx, dy))
    if kind == "shift_dilate":
        return dilate(shifted, 3, 1)
    return shifted


def build_perfect_ovs_benchmark(
    out_dir,
    count: int = 50,
    seed: int = 2024,
    search: SearchConfig | None = None,
) -> BenchmarkPaths:
    """Write dataset, pair manifest, and fixture tree; returns their locations."""
    out_dir = Path(out_dir)
    search = search or SearchConfig()
    rng = np.random.default_rng(seed)
    backgrounds_arr, bank = _tiny_banks(rng)

    dataset_dir = out_dir / "dataset"
    bg_dir = dataset_dir / "backgrounds"
    bg_entries = []
    for bg_id, arr in backgrounds_arr:
        from .images import save_image

        path = bg_dir / f"{bg_id}.png"
        save_image(arr, path)
        bg_entries.append((bg_id, path))

    samples = generate_dataset(
        bg_entries, bank, count=count, seed=seed, out_dir=dataset_dir, scale_range=(0.12, 0.25)
    )

    writer = FixtureWriter(out_dir / "fixtures")
    entries = []
    for sample in samples:
        ref = load_image(dataset_dir / sample.ref_path)
        live = load_image(dataset_dir / sample.live_path)
        gt = load_mask(dataset_dir / sample.gt_path)
        if gt.is_empty():
            raise RuntimeError(f"{sample.sample_id}: benchmark sample has empty ground truth")

        writer.add_pair(sample.sample_id, ref, live)
        corrupted = corrupt_mask(rng, gt)
        levels = np.where(corrupted.pixels, _FG_LEVEL, _BG_LEVEL).astype(np.uint8)
        prob = ProbabilityMask.from_levels(levels)
        writer.set_change(sample.sample_id, prob)

        base = threshold(prob, 0.5)
        for region in prepare_query_regions(base, search.dilation_iterations, search.kernel_size):
            writer.add_describe(sample.sample_id, region, BENCH_RESPONSE)
        writer.add_segment(sample.sample_id, "live", BENCH_LABEL, gt)

        entries.append(
            PairEntry(
                pair_id=sample.sample_id,
                ref_path=dataset_dir / sample.ref_path,
                live_path=dataset_dir / sample.live_path,
                gt_path=dataset_dir / sample.gt_path,
                dataset_id=sample.background_id,
            )
        )
    writer.finish()

    manifest = out_dir / "pairs.jsonl"
    write_pair_manifest(entries, manifest)
    return BenchmarkPaths(manifest=manifest, fixtures=out_dir / "fixtures", dataset=dataset_dir)
