"""Pixel-wise precision/recall/F-score evaluation and report aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, ValidationError
from .masks import BinaryMask


@dataclass(frozen=True)
class EvalCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ScoreRow:
    pair_id: str
    precision: float
    recall: float
    fscore: float
    counts: EvalCounts


def count_pixels(pred: BinaryMask, gt: BinaryMask) -> EvalCounts:
    """Per-pixel confusion tallies of a prediction against ground truth."""
    if pred.shape != gt.shape:
        raise DimensionMismatchError(f"mask dimensions differ: {pred.shape} vs {gt.shape}")
    p, g = pred.pixels, gt.pixels
    return EvalCounts(
        tp=int(np.count_nonzero(p & g)),
        fp=int(np.count_nonzero(p & ~g)),
        fn=int(np.count_nonzero(~p & g)),
        tn=int(np.count_nonzero(~p & ~g)),
    )


def score(counts: EvalCounts) -> tuple[float, float, float]:
    """(precision, recall, fscore) with explicit zero-denominator conventions.

    An all-empty prediction against an all-empty ground truth scores 1.0 on
    all three; a zero denominator against nonempty counterpart scores 0.
    """
    pred_empty = counts.tp + counts.fp == 0
    gt_empty = counts.tp + counts.fn == 0
    if pred_empty and gt_empty:
        return 1.0, 1.0, 1.0
    precision = 0.0 if pred_empty else counts.tp / (counts.tp + counts.fp)
    recall = 0.0 if gt_empty else counts.tp / (counts.tp + counts.fn)
    if precision + recall == 0.0:
        return precision, recall, 0.0
    return precision, recall, 2.0 * precision * recall / (precision + recall)


def score_pair(pair_id: str, pred: BinaryMask, gt: BinaryMask) -> ScoreRow:
    counts = count_pixels(pred, gt)
    precision, recall, fscore = score(counts)
    return ScoreRow(pair_id=pair_id, precision=precision, recall=recall, fscore=fscore, counts=counts)


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values)


def aggregate(rows: list[ScoreRow], dataset_ids: list[str]) -> dict:
    """Per-dataset means of per-image scores plus both overall averaging orders.

    ``overall.mean_f`` averages the dataset means (the headline number);
    ``overall.pooled_mean_f`` averages over all images regardless of dataset.
    """
    if not rows:
        raise ValidationError("aggregate needs at least one score row")
    if len(rows) != len(dataset_ids):
        raise ValidationError(
            f"rows and dataset ids differ in length: {len(rows)} vs {len(dataset_ids)}"
        )
    groups: dict[str, list[ScoreRow]] = {}
    for row, dataset in zip(rows, dataset_ids):
        groups.setdefault(dataset, []).append(row)

    datasets = {
        name: {
            "mean_f": _mean(r.fscore for r in members),
            "mean_p": _mean(r.precision for r in members),
            "mean_r": _mean(r.recall for r in members),
            "n": len(members),
        }
        for name, members in sorted(groups.items())
    }
    return {
        "datasets": datasets,
        "overall": {
            "mean_f": _mean(d["mean_f"] for d in datasets.values()),
            "mean_p": _mean(d["mean_p"] for d in datasets.values()),
            "mean_r": _mean(d["mean_r"] for d in datasets.values()),
            "pooled_mean_f": _mean(r.fscore for r in rows),
            "pooled_mean_p": _mean(r.precision for r in rows),
            "pooled_mean_r": _mean(r.recall for r in rows),
            "n_images": len(rows),
            "n_datasets": len(datasets),
        },
    }


def render_report(report: dict) -> str:
    """Aligned plain-text table for an aggregate report."""
    lines = [f"{'dataset':<20} {'mean F':>8} {'mean P':>8} {'mean R':>8} {'n':>5}"]
    for name, stats in report["datasets"].items():
        lines.append(
            f"{name:<20} {stats['mean_f']:>8.4f} {stats['mean_p']:>8.4f} "
            f"{stats['mean_r']:>8.4f} {stats['n']:>5d}"
        )
    overall = report["overall"]
    lines.append(
        f"{'overall':<20} {overall['mean_f']:>8.4f} {overall['mean_p']:>8.4f} "
        f"{overall['mean_r']:>8.4f} {overall['n_images']:>5d}"
    )
    lines.append(f"pooled mean F over images: {overall['pooled_mean_f']:.4f}")
    return "\n".join(lines) + "\n"


def compare(
    base_rows: list[ScoreRow],
    fused_rows: list[ScoreRow],
    dataset_ids: dict[str, str] | None = None,
) -> dict:
    """Per-pair F deltas (fused minus base), win/loss/tie counts, optional per-dataset means."""
    base_by_id = {r.pair_id: r for r in base_rows}
    fused_by_id = {r.pair_id: r for r in fused_rows}
    if set(base_by_id) != set(fused_by_id):
        missing = set(base_by_id) ^ set(fused_by_id)
        raise ValidationError(f"pair id sets differ; mismatched ids: {sorted(missing)[:5]}")
    if len(base_rows) != len(base_by_id) or len(fused_rows) != len(fused_by_id):
        raise ValidationError("duplicate pair ids in comparison input")

    pairs = []
    wins = losses = ties = 0
    for pair_id in sorted(base_by_id):
        base_f = base_by_id[pair_id].fscore
        fused_f = fused_by_id[pair_id].fscore
        delta = fused_f - base_f
        if delta > 0:
            wins += 1
        elif delta < 0:
            losses += 1
        else:
            ties += 1
        pairs.append(
            {"pair_id": pair_id, "base_f": base_f, "fused_f": fused_f, "delta_f": delta}
        )

    result = {
        "pairs": pairs,
        "wins": wins,
        "losses": losses,
        "ties": ties,
        "overall": {
            "base_mean_f": _mean(r["base_f"] for r in pairs),
            "fused_mean_f": _mean(r["fused_f"] for r in pairs),
            "delta_mean_f": _mean(r["delta_f"] for r in pairs),
        },
    }
    if dataset_ids is not None:
        groups: dict[str, list[dict]] = {}
        for row in pairs:
            groups.setdefault(dataset_ids.get(row["pair_id"], "default"), []).append(row)
        result["datasets"] = {
            name: {
                "base_mean_f": _mean(r["base_f"] for r in members),
                "fused_mean_f": _mean(r["fused_f"] for r in members),
                "delta_mean_f": _mean(r["delta_f"] for r in members),
                "n": len(members),
            }
            for name, members in sorted(groups.items())
        }
    return result


def render_comparison(comparison: dict) -> str:
    overall = comparison["overall"]
    lines = [
        f"pairs: {len(comparison['pairs'])}  wins: {comparison['wins']}  "
        f"losses: {comparison['losses']}  ties: {comparison['ties']}",
        f"mean F: base {overall['base_mean_f']:.4f} -> fused {overall['fused_mean_f']:.4f} "
        f"(delta {overall['delta_mean_f']:+.4f})",
    ]
    if "datasets" in comparison:
        for name, stats in comparison["datasets"].items():
            lines.append(
                f"  {name:<18} base {stats['base_mean_f']:.4f} -> fused "
                f"{stats['fused_mean_f']:.4f} (delta {stats['delta_mean_f']:+.4f}, n={stats['n']})"
            )
    return "\n".join(lines) + "\n"
