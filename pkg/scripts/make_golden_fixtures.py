#!/usr/bin/env python3
"""Regenerate the bundled 3-pair golden fixture set under tests/data/golden/.

The expected outputs are hand-traced, not produced by running the pipeline:
each pair's geometry is chosen so the score and decision are exact round
numbers, and the expected masks/records/listing below are written from those
hand-computed values. Pairs:

  pair-a  disjoint object evidence, IoU(O_l, M_o) = 1/2  -> score 0.5, adopt OVS
  pair-b  object present in both images (overlap)        -> score 0.0, keep base
  pair-c  labels all noise ("floor" / unparseable)       -> score 1.0, keep base
"""

import json
import shutil
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from smallchange.fixtures import FixtureWriter
from smallchange.images import save_image
from smallchange.masks import BinaryMask, ProbabilityMask, save_mask, threshold
from smallchange.object_search import prepare_query_regions

ROOT = Path(__file__).resolve().parents[1] / "tests" / "data" / "golden"

W, H = 32, 24
FG, BG = 230, 25  # probability levels: 230/255 > 0.5 > 25/255


def rect_mask(x0, y0, x1, y1) -> BinaryMask:
    """Inclusive-corner rectangle on the 32x24 grid."""
    arr = np.zeros((H, W), dtype=bool)
    arr[y0 : y1 + 1, x0 : x1 + 1] = True
    return BinaryMask(arr)


def flat_image(color, marks=()) -> np.ndarray:
    img = np.zeros((H, W, 3), dtype=np.uint8)
    img[:, :] = color
    for mask, mark_color in marks:
        img[mask.pixels] = mark_color
    return img


def prob_from_mask(mask: BinaryMask) -> ProbabilityMask:
    return ProbabilityMask.from_levels(np.where(mask.pixels, FG, BG).astype(np.uint8))


def main():
    if ROOT.exists():
        shutil.rmtree(ROOT)
    images_dir = ROOT / "images"
    expected_masks = ROOT / "expected" / "masks"
    expected_records = ROOT / "expected" / "records"
    writer = FixtureWriter(ROOT / "fixtures")

    # ---- pair-a: adopt the oversegmentation -------------------------------
    # M_o is the left half of the pen; O_l is the whole pen.
    # intersection 16 px, union 32 px -> IoU 0.5 -> score 1 * (1 - 0.5) = 0.5
    m_o_a = rect_mask(8, 8, 11, 11)     # 4x4 = 16 px
    o_l_a = rect_mask(8, 8, 15, 11)     # 8x4 = 32 px
    ref_a = flat_image((25, 50, 75))
    live_a = flat_image((28, 55, 80), [(o_l_a, (210, 180, 40))])
    writer.add_pair("pair-a", ref_a, live_a)
    writer.set_change("pair-a", prob_from_mask(m_o_a))
    (region_a,) = prepare_query_regions(threshold(prob_from_mask(m_o_a), 0.5))
    writer.add_describe("pair-a", region_a, "This object is a pen.")
    writer.add_segment("pair-a", "live", "pen", o_l_a)
    writer.add_empty_segment("pair-a", "ref", "pen")

    # ---- pair-b: object visible in both images -> keep the base mask ------
    # O_l and O_r overlap, so the disjointness factor zeroes the score.
    m_o_b = rect_mask(4, 4, 9, 9)       # 6x6 = 36 px
    o_both_b = rect_mask(4, 4, 9, 9)
    ref_b = flat_image((90, 80, 70), [(o_both_b, (240, 240, 225))])
    live_b = flat_image((95, 85, 75), [(o_both_b, (240, 240, 230))])
    writer.add_pair("pair-b", ref_b, live_b)
    writer.set_change("pair-b", prob_from_mask(m_o_b))
    (region_b,) = prepare_query_regions(threshold(prob_from_mask(m_o_b), 0.5))
    writer.add_describe("pair-b", region_b, "This object is a notebook.")
    writer.add_segment("pair-b", "live", "notebook", o_both_b)
    writer.add_segment("pair-b", "ref", "notebook", o_both_b)

    # ---- pair-c: every label is noise -> empty OVS -> keep the base mask --
    blob1_c = rect_mask(2, 2, 3, 3)
    blob2_c = rect_mask(20, 14, 23, 17)
    m_o_c = BinaryMask(blob1_c.pixels | blob2_c.pixels)
    ref_c = flat_image((50, 120, 60))
    live_c = flat_image((55, 125, 65), [(blob1_c, (140, 140, 140)), (blob2_c, (20, 20, 20))])
    writer.add_pair("pair-c", ref_c, live_c)
    writer.set_change("pair-c", prob_from_mask(m_o_c))
    regions_c = prepare_query_regions(threshold(prob_from_mask(m_o_c), 0.5))
    assert len(regions_c) == 2
    writer.add_describe("pair-c", regions_c[0], "This object is the floor.")
    writer.add_describe("pair-c", regions_c[1], "I cannot tell.")
    writer.finish()

    # ---- pair manifest -----------------------------------------------------
    rows = []
    for pair_id, ref, live in (
        ("pair-a", ref_a, live_a),
        ("pair-b", ref_b, live_b),
        ("pair-c", ref_c, live_c),
    ):
        save_image(ref, images_dir / f"{pair_id}.ref.png")
        save_image(live, images_dir / f"{pair_id}.live.png")
        rows.append(
            json.dumps(
                {
                    "pair_id": pair_id,
                    "ref_path": f"images/{pair_id}.ref.png",
                    "live_path": f"images/{pair_id}.live.png",
                    "dataset_id": "golden",
                }
            )
        )
    (ROOT / "pairs.jsonl").write_text("".join(r + "\n" for r in rows), encoding="utf-8")

    # ---- hand-traced expected outputs --------------------------------------
    save_mask(o_l_a, expected_masks / "pair-a.fused.png")   # score 0.5 in (0, 0.9)
    save_mask(m_o_b, expected_masks / "pair-b.fused.png")   # score 0.0, not above 0
    save_mask(m_o_c, expected_masks / "pair-c.fused.png")   # score 1.0, not below 0.9

    expected_doi = {
        "pair-a": {
            "f_b": 1,
            "iou_ol_mo": 0.5,
            "doi": 0.5,
            "decision": "adopt_ovs",
            "thresholds": {"lower": 0.0, "upper": 0.9},
        },
        "pair-b": {
            "f_b": 0,
            "iou_ol_mo": 1.0,
            "doi": 0.0,
            "decision": "adopt_base",
            "thresholds": {"lower": 0.0, "upper": 0.9},
        },
        "pair-c": {
            "f_b": 1,
            "iou_ol_mo": 0.0,
            "doi": 1.0,
            "decision": "adopt_base",
            "thresholds": {"lower": 0.0, "upper": 0.9},
        },
    }
    expected_records.mkdir(parents=True, exist_ok=True)
    for pair_id, payload in expected_doi.items():
        (expected_records / f"{pair_id}.doi.json").write_text(
            json.dumps(payload, indent=2) + "\n", encoding="utf-8"
        )

    # pair-a object: O_l clipped to its query region is all 32 px, box 8..15 x 8..11
    # pair-b object: M_o clipped to its region is all 36 px, box 4..9 x 4..9
    # pair-c contributes no rows (no label survived)
    listing = (
        "pair_id  component  label     pixels  bbox\n"
        "pair-a   0          pen       32      8,8,15,11\n"
        "pair-b   0          notebook  36      4,4,9,9\n"
    )
    (ROOT / "expected" / "listing.txt").write_text(listing, encoding="utf-8")
    print(f"golden fixture set written to {ROOT}")


if __name__ == "__main__":
    main()
