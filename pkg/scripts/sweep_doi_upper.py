#!/usr/bin/env python3
"""Sweep the upper adoption bound over the synthetic benchmark.

The band (lower, upper) controls when the oversegmentation mask replaces the
base detection; this prints the fused mean F-score per candidate upper bound
so the sensitivity of the default can be eyeballed.

    python3 scripts/sweep_doi_upper.py --out /tmp/sweep --uppers 0.5 0.7 0.9 0.99
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from smallchange.backend import FixtureBackend
from smallchange.benchmark import build_perfect_ovs_benchmark
from smallchange.evaluation import score_pair
from smallchange.masks import load_mask
from smallchange.pipeline import PipelineConfig, load_pair_manifest, run_detect


def mean_f(entries, run_dir, kind) -> float:
    values = []
    for entry in entries:
        gt = load_mask(entry.gt_path)
        pred = load_mask(run_dir / "masks" / f"{entry.pair_id}.{kind}.png")
        values.append(score_pair(entry.pair_id, pred, gt).fscore)
    return sum(values) / len(values)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--count", type=int, default=50)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--uppers", type=float, nargs="+",
                        default=[0.3, 0.5, 0.7, 0.8, 0.9, 0.95, 0.99])
    parser.add_argument("--out", required=True)
    args = parser.parse_args()

    out = Path(args.out)
    paths = build_perfect_ovs_benchmark(out / "bench", count=args.count, seed=args.seed)
    entries = load_pair_manifest(paths.manifest)
    backend = FixtureBackend(paths.fixtures)

    print(f"{'upper':>6}  {'base F':>8}  {'fused F':>8}  {'delta':>8}")
    base_printed = None
    for upper in args.uppers:
        run_dir = out / f"run-{upper}"
        config = PipelineConfig(doi_upper=upper, workers=4)
        summary = run_detect(entries, backend, config, run_dir)
        if not summary.ok:
            print(f"failed pairs at upper={upper}: {summary.failures}", file=sys.stderr)
            return 1
        base = mean_f(entries, run_dir, "base")
        fused = mean_f(entries, run_dir, "fused")
        base_printed = base if base_printed is None else base_printed
        print(f"{upper:>6.2f}  {base:>8.4f}  {fused:>8.4f}  {fused - base:>+8.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
