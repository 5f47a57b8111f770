import json

import numpy as np
import pytest

from smallchange.errors import PlacementError, ValidationError
from smallchange.masks import BinaryMask, load_mask
from smallchange.images import load_image
from smallchange.synth import (
    ObjectCutout,
    Placement,
    composite,
    generate_dataset,
    load_backgrounds,
    load_object_bank,
    resize_mask_nearest,
    sample_placement,
    scaled_size,
)

from oracles import count_true, nearest_resize_pixels, to_grid


def solid_cutout(width, height, color=(200, 30, 30), mask=None):
    img = np.zeros((height, width, 3), dtype=np.uint8)
    img[:, :] = color
    support = np.ones((height, width), dtype=bool) if mask is None else mask
    return ObjectCutout(object_id="obj", image=img, mask=BinaryMask(support))


class TestSamplePlacement:
    def test_degenerate_scale_frame_sized_box(self):
        rng = np.random.default_rng(0)
        # square cutout, scale 1.0 of a square background: unique anchor (0, 0)
        p = sample_placement(rng, (16, 16), (8, 8), (1.0, 1.0))
        assert (p.x, p.y) == (0, 0)
        assert scaled_size((8, 8), (16, 16), p.scale) == (16, 16)

    def test_fixed_seed_reproducible(self):
        a = sample_placement(np.random.default_rng(42), (640, 480), (50, 30), (0.05, 0.25))
        b = sample_placement(np.random.default_rng(42), (640, 480), (50, 30), (0.05, 0.25))
        assert a == b

    def test_coco_style_bounds_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            p = sample_placement(rng, (640, 480), (123, 77), (0.05, 0.25))
            nw, nh = scaled_size((123, 77), (640, 480), p.scale)
            # feasible anchor set is exactly [0, bw-nw] x [0, bh-nh]
            assert 0 <= p.x <= 640 - nw
            assert 0 <= p.y <= 480 - nh
            assert max(nw, nh) <= round(0.25 * 480) + 1

    def test_invalid_scale_range(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValidationError):
            sample_placement(rng, (64, 48), (8, 8), (0.0, 0.2))
        with pytest.raises(ValidationError):
            sample_placement(rng, (64, 48), (8, 8), (0.5, 0.2))


class TestResize:
    def test_identity_at_same_size(self):
        mask = BinaryMask(np.eye(5, dtype=bool))
        assert resize_mask_nearest(mask, 5, 5) == mask

    def test_matches_per_pixel_oracle(self, rng):
        for _ in range(25):
            h, w = int(rng.integers(1, 12)), int(rng.integers(1, 12))
            nh, nw = int(rng.integers(1, 15)), int(rng.integers(1, 15))
            mask = BinaryMask(rng.random((h, w)) < 0.5)
            assert to_grid(resize_mask_nearest(mask, nw, nh)) == nearest_resize_pixels(mask, nw, nh)


class TestComposite:
    def test_gt_support_is_exactly_where_live_differs(self):
        bg = np.full((20, 30, 3), (10, 10, 10), dtype=np.uint8)
        cutout = solid_cutout(6, 4)
        live, gt = composite(bg, cutout, Placement(x=5, y=3, scale=0.2))
        differs = (live != bg).any(axis=2)
        assert np.array_equal(differs, gt.pixels)

    def test_full_frame_paste(self):
        bg = np.zeros((8, 8, 3), dtype=np.uint8)
        cutout = solid_cutout(8, 8)
        live, gt = composite(bg, cutout, Placement(x=0, y=0, scale=1.0))
        assert np.array_equal(live, cutout.image)
        assert gt == BinaryMask.full(8, 8)

    def test_l_shaped_mask_hand_computed(self):
        # 4x4 background, 2x2 cutout with a 3-px L mask, pasted at (1, 1), scale
        # chosen so the cutout keeps its native 2x2 size.
        bg = np.zeros((4, 4, 3), dtype=np.uint8)
        support = np.array([[True, False], [True, True]])
        cutout = solid_cutout(2, 2, mask=support)
        live, gt = composite(bg, cutout, Placement(x=1, y=1, scale=0.5))
        expected = np.zeros((4, 4), dtype=bool)
        expected[1, 1] = expected[2, 1] = expected[2, 2] = True
        assert np.array_equal(gt.pixels, expected)
        assert gt.foreground_count == 3

    def test_background_not_modified(self):
        bg = np.zeros((10, 10, 3), dtype=np.uint8)
        before = bg.copy()
        composite(bg, solid_cutout(4, 4), Placement(x=2, y=2, scale=0.4))
        assert np.array_equal(bg, before)

    def test_out_of_frame_placement_rejected(self):
        bg = np.zeros((10, 10, 3), dtype=np.uint8)
        with pytest.raises(PlacementError):
            composite(bg, solid_cutout(4, 4), Placement(x=9, y=9, scale=0.5))


class TestObjectBank:
    def test_polygon_and_rle_cutouts(self, tiny_bank):
        bank = load_object_bank(tiny_bank["bank_json"])
        assert len(bank) == 2
        brick = next(c for c in bank if c.object_id.startswith("brick"))
        elbow = next(c for c in bank if c.object_id.startswith("elbow"))
        # polygon 2..13 x 3..8 inclusive -> 12x6 box, fully filled
        assert (brick.mask.width, brick.mask.height) == (12, 6)
        assert brick.mask.foreground_count == 72
        # L-shape: 8 rows x 2 cols + 3 rows x 4 cols
        assert elbow.mask.foreground_count == 16 + 12

    def test_missing_bank_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_object_bank(tmp_path / "nope.json")


class TestGenerateDataset:
    def test_zero_count(self, tiny_bank, tmp_path):
        backgrounds = load_backgrounds(tiny_bank["bg_manifest"])
        bank = load_object_bank(tiny_bank["bank_json"])
        out = tmp_path / "ds0"
        samples = generate_dataset(backgrounds, bank, count=0, seed=1, out_dir=out)
        assert samples == []
        assert (out / "samples.jsonl").read_text() == ""

    def test_same_seed_byte_identical(self, tiny_bank, tmp_path):
        backgrounds = load_backgrounds(tiny_bank["bg_manifest"])
        bank = load_object_bank(tiny_bank["bank_json"])
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        generate_dataset(backgrounds, bank, count=8, seed=99, out_dir=out_a)
        generate_dataset(backgrounds, bank, count=8, seed=99, out_dir=out_b)
        files_a = sorted(p.relative_to(out_a) for p in out_a.rglob("*") if p.is_file())
        files_b = sorted(p.relative_to(out_b) for p in out_b.rglob("*") if p.is_file())
        assert files_a == files_b
        for rel in files_a:
            assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes()

    def test_sample_invariants(self, tiny_bank, tmp_path):
        backgrounds = load_backgrounds(tiny_bank["bg_manifest"])
        bank = load_object_bank(tiny_bank["bank_json"])
        out = tmp_path / "ds"
        samples = generate_dataset(backgrounds, bank, count=12, seed=5, out_dir=out)
        by_id = {c.object_id: c for c in bank}
        for sample in samples:
            ref = load_image(out / sample.ref_path)
            live = load_image(out / sample.live_path)
            gt = load_mask(out / sample.gt_path)
            outside = ~gt.pixels
            assert np.array_equal(ref[outside], live[outside])
            # gt count equals the independently rescaled cutout mask count
            cutout = by_id[sample.object_id]
            bw, bh = ref.shape[1], ref.shape[0]
            nw, nh = scaled_size((cutout.mask.width, cutout.mask.height), (bw, bh),
                                 sample.placement.scale)
            assert gt.foreground_count == count_true(nearest_resize_pixels(cutout.mask, nw, nh))

    def test_manifest_rows(self, tiny_bank, tmp_path):
        backgrounds = load_backgrounds(tiny_bank["bg_manifest"])
        bank = load_object_bank(tiny_bank["bank_json"])
        out = tmp_path / "ds"
        samples = generate_dataset(backgrounds, bank, count=3, seed=2, out_dir=out)
        rows = [json.loads(line) for line in (out / "samples.jsonl").read_text().splitlines()]
        assert [r["sample_id"] for r in rows] == [s.sample_id for s in samples]
        assert all({"bg", "object_id", "x", "y", "scale", "seed", "paths"} <= set(r) for r in rows)

    def test_empty_inputs_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            generate_dataset([], [], count=1, seed=0, out_dir=tmp_path / "x")
