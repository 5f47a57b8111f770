#!/usr/bin/env python3
"""Create a tiny object bank and background set for trying the synth command.

    python3 scripts/make_demo_assets.py --out demo
    smallchange synth --bank demo/bank/bank.json --backgrounds demo/backgrounds.jsonl \
        --count 20 --seed 7 --out demo/dataset
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from smallchange.images import save_image


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()
    out = Path(args.out)
    rng = np.random.default_rng(args.seed)

    # object sprites: colored shapes on one sheet each, annotated COCO-style
    bank_dir = out / "bank"
    images, annotations = [], []
    categories = [
        {"id": 1, "name": "wallet"},
        {"id": 2, "name": "cable"},
        {"id": 3, "name": "battery"},
    ]

    # wallet: filled rounded rectangle via polygon
    sheet = np.full((40, 60, 3), (235, 235, 235), dtype=np.uint8)
    sheet[8:32, 10:50] = (120, 70, 30)
    save_image(sheet, bank_dir / "wallet.png")
    images.append({"id": 1, "file_name": "wallet.png", "width": 60, "height": 40})
    annotations.append({
        "id": 1, "image_id": 1, "category_id": 1,
        "segmentation": [[10, 8, 49, 8, 49, 31, 10, 31]],
    })

    # cable: thin S-ish polyline drawn as a polygon band
    sheet = np.full((50, 50, 3), (235, 235, 235), dtype=np.uint8)
    for x in range(5, 45):
        y = int(25 + 12 * np.sin(x / 7))
        sheet[y - 1 : y + 2, x] = (30, 30, 30)
    save_image(sheet, bank_dir / "cable.png")
    images.append({"id": 2, "file_name": "cable.png", "width": 50, "height": 50})
    cable = np.zeros((50, 50), dtype=bool)
    for x in range(5, 45):
        y = int(25 + 12 * np.sin(x / 7))
        cable[y - 1 : y + 2, x] = True
    flat = cable.reshape(-1, order="F")
    counts, value, run = [], False, 0
    for v in flat:
        if bool(v) == value:
            run += 1
        else:
            counts.append(run)
            value, run = bool(v), 1
    counts.append(run)
    annotations.append({
        "id": 2, "image_id": 2, "category_id": 2,
        "segmentation": {"size": [50, 50], "counts": counts},
    })

    # battery: small solid cylinder
    sheet = np.full((30, 30, 3), (235, 235, 235), dtype=np.uint8)
    sheet[8:22, 12:19] = (40, 160, 60)
    save_image(sheet, bank_dir / "battery.png")
    images.append({"id": 3, "file_name": "battery.png", "width": 30, "height": 30})
    annotations.append({
        "id": 3, "image_id": 3, "category_id": 3,
        "segmentation": [[12, 8, 18, 8, 18, 21, 12, 21]],
    })

    (bank_dir / "bank.json").write_text(json.dumps({
        "images": images, "annotations": annotations, "categories": categories,
    }, indent=2))

    # backgrounds: flat indoor-ish colors with mild noise
    rows = []
    for i, color in enumerate([(188, 172, 150), (120, 124, 130), (150, 160, 120)]):
        bg = np.full((480, 640, 3), color, dtype=np.uint8)
        noise = rng.integers(0, 14, size=bg.shape, dtype=np.uint8)
        bg = np.clip(bg.astype(int) + noise, 0, 255).astype(np.uint8)
        path = out / "backgrounds" / f"room{i}.png"
        save_image(bg, path)
        rows.append(json.dumps({"id": f"room{i}", "path": f"backgrounds/room{i}.png"}))
    (out / "backgrounds.jsonl").write_text("".join(r + "\n" for r in rows))
    print(f"demo assets written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
