#!/usr/bin/env python3
"""Measure how much fusion helps a deliberately corrupted base detector.

Builds the perfect-oversegmentation benchmark (object masks recorded as
ground truth, base change maps degraded by dilate/erode/shift), runs the full
pipeline over it, and prints per-dataset and per-decision breakdowns.

    python3 scripts/run_dominance_experiment.py --count 50 --seed 2024 --out /tmp/dom
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from smallchange.backend import FixtureBackend
from smallchange.benchmark import build_perfect_ovs_benchmark
from smallchange.evaluation import compare, render_comparison, score_pair
from smallchange.masks import iou, load_mask
from smallchange.pipeline import PipelineConfig, load_pair_manifest, run_detect


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--count", type=int, default=50)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--doi-upper", type=float, default=0.9)
    parser.add_argument("--workers", type=int, default=4)
    parser.add_argument("--out", required=True, help="working directory for the experiment")
    args = parser.parse_args()

    out = Path(args.out)
    paths = build_perfect_ovs_benchmark(out / "bench", count=args.count, seed=args.seed)
    entries = load_pair_manifest(paths.manifest)
    config = PipelineConfig(doi_upper=args.doi_upper, workers=args.workers)
    summary = run_detect(entries, FixtureBackend(paths.fixtures), config, out / "run")
    if not summary.ok:
        print(f"failed pairs: {summary.failures}", file=sys.stderr)
        return 1

    base_rows, fused_rows = [], []
    adopted = 0
    for entry in entries:
        gt = load_mask(entry.gt_path)
        base = load_mask(out / "run" / "masks" / f"{entry.pair_id}.base.png")
        fused = load_mask(out / "run" / "masks" / f"{entry.pair_id}.fused.png")
        base_rows.append(score_pair(entry.pair_id, base, gt))
        fused_rows.append(score_pair(entry.pair_id, fused, gt))
        record = json.loads(
            (out / "run" / "records" / f"{entry.pair_id}.doi.json").read_text()
        )
        if record["decision"] == "adopt_ovs":
            adopted += 1
        if 0.1 < iou(base, gt) < 1.0 and fused_rows[-1].fscore <= base_rows[-1].fscore:
            print(f"warning: no improvement on {entry.pair_id}", file=sys.stderr)

    comparison = compare(base_rows, fused_rows, {e.pair_id: e.dataset_id for e in entries})
    print(f"benchmark: {args.count} pairs, seed {args.seed}, upper bound {args.doi_upper}")
    print(f"oversegmentation adopted on {adopted}/{len(entries)} pairs")
    print(render_comparison(comparison), end="")
    (out / "comparison.json").write_text(json.dumps(comparison, indent=2) + "\n")
    print(f"details written to {out / 'comparison.json'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
