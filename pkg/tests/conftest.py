import json
from pathlib import Path

import hypothesis
import numpy as np
import pytest

from smallchange.images import save_image
from smallchange.masks import BinaryMask

hypothesis.settings.register_profile("suite", deadline=None, max_examples=60)
hypothesis.settings.load_profile("suite")

_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    if "test_acceptance.py" not in str(report.nodeid):
        return
    _ACCEPTANCE_RESULTS.append((report.nodeid.split("::")[-1], report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if outcome == 'PASSED' else outcome}] {name}")


def random_mask(rng: np.random.Generator, width: int, height: int, density: float = 0.4) -> BinaryMask:
    return BinaryMask(rng.random((height, width)) < density)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def tiny_bank(tmp_path):
    """A small COCO-style object bank plus a background manifest on disk."""
    bank_dir = tmp_path / "bank"
    bank_dir.mkdir()

    sprite = np.zeros((12, 16, 3), dtype=np.uint8)
    sprite[:, :] = (210, 60, 40)
    sprite[3:9, 2:14] = (30, 200, 90)
    save_image(sprite, bank_dir / "sprite0.png")
    sprite2 = np.zeros((10, 10, 3), dtype=np.uint8)
    sprite2[:, :] = (250, 220, 20)
    save_image(sprite2, bank_dir / "sprite1.png")

    annotations = {
        "images": [
            {"id": 1, "file_name": "sprite0.png", "width": 16, "height": 12},
            {"id": 2, "file_name": "sprite1.png", "width": 10, "height": 10},
        ],
        "annotations": [
            # a filled rectangle polygon
            {"id": 10, "image_id": 1, "category_id": 1,
             "segmentation": [[2, 3, 13, 3, 13, 8, 2, 8]]},
            # an L-shape as uncompressed column-major RLE on the 10x10 image
            {"id": 11, "image_id": 2, "category_id": 2, "segmentation": {
                "size": [10, 10],
                "counts": _l_shape_rle(),
            }},
        ],
        "categories": [{"id": 1, "name": "brick"}, {"id": 2, "name": "elbow"}],
    }
    bank_json = bank_dir / "bank.json"
    bank_json.write_text(json.dumps(annotations), encoding="utf-8")

    bg_dir = tmp_path / "bgs"
    bg_dir.mkdir()
    rows = []
    rng = np.random.default_rng(7)
    for i in range(3):
        bg = np.full((48, 64, 3), (15 + 40 * i, 90, 140), dtype=np.uint8)
        bg += rng.integers(0, 10, size=bg.shape, dtype=np.uint8)
        save_image(bg, bg_dir / f"bg{i}.png")
        rows.append(json.dumps({"id": f"bg{i}", "path": f"bg{i}.png"}))
    bg_manifest = bg_dir / "backgrounds.jsonl"
    bg_manifest.write_text("".join(r + "\n" for r in rows), encoding="utf-8")

    return {"bank_json": bank_json, "bank_dir": bank_dir, "bg_manifest": bg_manifest}


def _l_shape_rle():
    # 10x10 grid, column-major runs: columns 1-2 filled rows 1-8, column 3-6 filled rows 6-8
    grid = np.zeros((10, 10), dtype=bool)
    grid[1:9, 1:3] = True
    grid[6:9, 3:7] = True
    flat = grid.reshape(-1, order="F")
    counts = []
    value = False
    run = 0
    for v in flat:
        if bool(v) == value:
            run += 1
        else:
            counts.append(run)
            value = bool(v)
            run = 1
    counts.append(run)
    return counts


GOLDEN_ROOT = Path(__file__).parent / "data" / "golden"
