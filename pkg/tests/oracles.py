"""Independent brute-force reference implementations used to check the library.

Everything here works on plain Python lists of lists of bools (row-major),
one pixel at a time, with no numpy/scipy shortcuts, so the checked code paths
stay fully independent.
"""

from collections import deque


def to_grid(mask) -> list[list[bool]]:
    """BinaryMask or ndarray -> list of lists of bool."""
    pixels = getattr(mask, "pixels", mask)
    return [[bool(v) for v in row] for row in pixels.tolist()]


def iou_pixels(a, b) -> float:
    ga, gb = to_grid(a), to_grid(b)
    inter = uni = 0
    for row_a, row_b in zip(ga, gb):
        for va, vb in zip(row_a, row_b):
            if va and vb:
                inter += 1
            if va or vb:
                uni += 1
    if uni == 0:
        return 1.0
    return inter / uni


def disjoint_pixels(a, b) -> int:
    ga, gb = to_grid(a), to_grid(b)
    for row_a, row_b in zip(ga, gb):
        for va, vb in zip(row_a, row_b):
            if va and vb:
                return 0
    return 1


def confusion_pixels(pred, gt) -> tuple[int, int, int, int]:
    gp, gg = to_grid(pred), to_grid(gt)
    tp = fp = fn = tn = 0
    for row_p, row_g in zip(gp, gg):
        for vp, vg in zip(row_p, row_g):
            if vp and vg:
                tp += 1
            elif vp:
                fp += 1
            elif vg:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn


def components_pixels(mask) -> list[list[list[bool]]]:
    """8-connectivity flood fill; components ordered by first pixel in row-major scan."""
    grid = to_grid(mask)
    h, w = len(grid), len(grid[0])
    seen = [[False] * w for _ in range(h)]
    components = []
    for r in range(h):
        for c in range(w):
            if not grid[r][c] or seen[r][c]:
                continue
            out = [[False] * w for _ in range(h)]
            queue = deque([(r, c)])
            seen[r][c] = True
            while queue:
                y, x = queue.popleft()
                out[y][x] = True
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        if dy == 0 and dx == 0:
                            continue
                        ny, nx = y + dy, x + dx
                        if 0 <= ny < h and 0 <= nx < w and grid[ny][nx] and not seen[ny][nx]:
                            seen[ny][nx] = True
                            queue.append((ny, nx))
            components.append(out)
    return components


def dilate_pixels(mask, kernel_size: int, iterations: int) -> list[list[bool]]:
    grid = to_grid(mask)
    h, w = len(grid), len(grid[0])
    radius = kernel_size // 2
    for _ in range(iterations):
        out = [[False] * w for _ in range(h)]
        for r in range(h):
            for c in range(w):
                hit = False
                for dy in range(-radius, radius + 1):
                    for dx in range(-radius, radius + 1):
                        ny, nx = r + dy, c + dx
                        if 0 <= ny < h and 0 <= nx < w and grid[ny][nx]:
                            hit = True
                            break
                    if hit:
                        break
                out[r][c] = hit
        grid = out
    return grid


def doi_from_pixels(o_l, o_r, m_o, lower: float = 0.0, upper: float = 0.9):
    """Recompute the score and decision from raw pixels; returns (f_b, iou, doi, adopt_ovs)."""
    f_b = disjoint_pixels(o_l, o_r)
    overlap = iou_pixels(o_l, m_o)
    value = f_b * (1.0 - overlap)
    return f_b, overlap, value, lower < value < upper


def fscore_direct(tp: int, fp: int, fn: int):
    """Plain evaluation of the three formulas with the documented conventions."""
    if tp + fp == 0 and tp + fn == 0:
        return 1.0, 1.0, 1.0
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    fscore = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, fscore


def nearest_resize_pixels(mask, new_width: int, new_height: int) -> list[list[bool]]:
    """Per-pixel nearest-neighbor resize: source index floor((i + 0.5) * src / dst)."""
    grid = to_grid(mask)
    src_h, src_w = len(grid), len(grid[0])
    out = []
    for y in range(new_height):
        sy = min(src_h - 1, int((y + 0.5) * src_h / new_height))
        row = []
        for x in range(new_width):
            sx = min(src_w - 1, int((x + 0.5) * src_w / new_width))
            row.append(grid[sy][sx])
        out.append(row)
    return out


def count_true(grid) -> int:
    return sum(1 for row in grid for v in row if v)
