"""Command-line entry point: synth | detect | eval | list-objects.

Configuration precedence: CLI flags > config file (--config, JSON) >
environment variables > built-in defaults. Exit codes: 0 success, 1 partial
pair failures, 2 usage or validation errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .backend import BACKEND_URL_ENV, FixtureBackend, HttpBackend, HttpConfig, backend_url_from_env
from .errors import SmallChangeError, ValidationError
from .evaluation import (
    aggregate,
    compare,
    render_comparison,
    render_report,
    score_pair,
)
from .masks import load_mask
from .object_search import SearchConfig
from .pipeline import (
    PipelineConfig,
    load_pair_manifest,
    load_run_records,
    render_object_listing,
    run_detect,
)
from .synth import DEFAULT_SCALE_RANGE, generate_dataset, load_backgrounds, load_object_bank

log = logging.getLogger("smallchange")

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("config file must contain a JSON object")
    return data


def _setting(args_value, config: dict, key: str, default):
    """flags > config file > default (env handled by the caller where relevant)."""
    if args_value is not None:
        return args_value
    if key in config:
        return config[key]
    return default


def _resolve_backend(args, config: dict):
    fixtures = _setting(args.fixtures, config, "fixtures", None)
    url = _setting(args.backend_url, config, "backend_url", backend_url_from_env())
    if fixtures and url:
        raise ValidationError("choose one backend: --fixtures or --backend-url, not both")
    if fixtures:
        return FixtureBackend(fixtures)
    if url:
        return HttpBackend(
            HttpConfig(
                base_url=url,
                timeout=float(_setting(args.timeout, config, "timeout", 30.0)),
                retries=int(_setting(args.retries, config, "retries", 0)),
            )
        )
    raise ValidationError(
        f"no backend configured: pass --fixtures or --backend-url (or set {BACKEND_URL_ENV})"
    )


def _pipeline_config(args, config: dict) -> PipelineConfig:
    search = SearchConfig(
        dilation_iterations=int(_setting(args.dilate_iters, config, "dilate_iters", 3)),
        kernel_size=int(_setting(args.kernel_size, config, "kernel_size", 5)),
        min_confidence=float(_setting(args.min_confidence, config, "min_confidence", 0.0)),
    )
    return PipelineConfig(
        threshold=float(_setting(args.threshold, config, "threshold", 0.5)),
        doi_lower=float(_setting(args.doi_lower, config, "doi_lower", 0.0)),
        doi_upper=float(_setting(args.doi_upper, config, "doi_upper", 0.9)),
        search=search,
        use_ovs=not args.no_ovs,
        continue_on_error=args.continue_on_error,
        workers=int(_setting(args.workers, config, "workers", os.cpu_count() or 1)),
    )


def cmd_synth(args) -> int:
    config = _load_config_file(args.config)
    backgrounds = load_backgrounds(args.backgrounds)
    bank = load_object_bank(args.bank, args.bank_images)
    scale_min = float(_setting(args.scale_min, config, "scale_min", DEFAULT_SCALE_RANGE[0]))
    scale_max = float(_setting(args.scale_max, config, "scale_max", DEFAULT_SCALE_RANGE[1]))
    samples = generate_dataset(
        backgrounds,
        bank,
        count=args.count,
        seed=args.seed,
        out_dir=args.out,
        scale_range=(scale_min, scale_max),
    )
    print(f"wrote {len(samples)} samples to {args.out}")
    return EXIT_OK


def cmd_detect(args) -> int:
    config = _load_config_file(args.config)
    entries = load_pair_manifest(args.manifest)
    if not entries:
        raise ValidationError(f"pair manifest is empty: {args.manifest}")
    backend = _resolve_backend(args, config)
    pipeline_config = _pipeline_config(args, config)
    if args.assume_aligned:
        log.info("inputs declared pre-aligned by the caller (--assume-aligned)")
    summary = run_detect(entries, backend, pipeline_config, args.out)
    print(f"processed {len(summary.records)}/{len(entries)} pairs -> {args.out}")
    if summary.failures:
        for pair_id, message in summary.failures.items():
            print(f"FAILED {pair_id}: {message}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _rows_for(entries, pred_dir: Path, suffix: str):
    rows = []
    for entry in entries:
        if entry.gt_path is None:
            raise ValidationError(f"pair {entry.pair_id} has no gt_path; eval needs ground truth")
        pred_path = pred_dir / f"{entry.pair_id}{suffix}"
        if not pred_path.exists():
            raise ValidationError(f"prediction not found: {pred_path}")
        rows.append(score_pair(entry.pair_id, load_mask(pred_path), load_mask(entry.gt_path)))
    return rows


def cmd_eval(args) -> int:
    entries = load_pair_manifest(args.manifest)
    if not entries:
        raise ValidationError(f"pair manifest is empty: {args.manifest}")
    rows = _rows_for(entries, Path(args.pred), args.pred_suffix)
    dataset_ids = [e.dataset_id for e in entries]
    report = aggregate(rows, dataset_ids)
    output = {"aggregate": report}
    text = render_report(report)

    if args.baseline:
        base_rows = _rows_for(entries, Path(args.baseline), args.baseline_suffix)
        comparison = compare(base_rows, rows, {e.pair_id: e.dataset_id for e in entries})
        output["comparison"] = comparison
        text += render_comparison(comparison)

    if args.out:
        out_path = Path(args.out)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(json.dumps(output, indent=2) + "\n", encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_list_objects(args) -> int:
    records = load_run_records(args.run_dir)
    if not records:
        raise ValidationError(f"no run records found under {args.run_dir}")
    listing = render_object_listing(records)
    if args.out:
        out_path = Path(args.out)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(listing, encoding="utf-8")
    print(listing, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smallchange",
        description="Small-object change detection: synthesis, detection with "
        "ill-posedness-aware fusion, evaluation, and object listing.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a pasted-object pseudo training set")
    p_synth.add_argument("--bank", required=True, help="COCO-style annotation JSON for the object bank")
    p_synth.add_argument("--bank-images", help="image directory for the bank (default: beside the JSON)")
    p_synth.add_argument("--backgrounds", required=True, help="JSON-lines background manifest {id, path}")
    p_synth.add_argument("--count", type=int, required=True, help="number of samples")
    p_synth.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p_synth.add_argument("--scale-min", type=float, dest="scale_min", help="min object scale (default 0.02)")
    p_synth.add_argument("--scale-max", type=float, dest="scale_max", help="max object scale (default 0.20)")
    p_synth.add_argument("--out", required=True, help="output dataset directory")
    p_synth.add_argument("--config", help="JSON config file")
    p_synth.set_defaults(func=cmd_synth)

    p_detect = sub.add_parser("detect", help="run detection + fusion over a pair manifest")
    p_detect.add_argument("--manifest", required=True, help="JSON-lines pair manifest")
    p_detect.add_argument("--fixtures", help="fixture tree directory backend")
    p_detect.add_argument("--backend-url", dest="backend_url", help=f"HTTP backend base URL (or {BACKEND_URL_ENV})")
    p_detect.add_argument("--out", required=True, help="run output directory")
    p_detect.add_argument("--threshold", type=float, help="change probability threshold (default 0.5)")
    p_detect.add_argument("--doi-lower", type=float, dest="doi_lower", help="lower adoption bound (default 0)")
    p_detect.add_argument("--doi-upper", type=float, dest="doi_upper", help="upper adoption bound (default 0.9)")
    p_detect.add_argument("--dilate-iters", type=int, dest="dilate_iters", help="query-region dilation iterations (default 3)")
    p_detect.add_argument("--kernel-size", type=int, dest="kernel_size", help="dilation kernel size (default 5)")
    p_detect.add_argument("--min-confidence", type=float, dest="min_confidence", help="drop proposals scored below this (default 0)")
    p_detect.add_argument("--workers", type=int, help="worker pool size (default: logical cores)")
    p_detect.add_argument("--timeout", type=float, help="HTTP timeout seconds (default 30)")
    p_detect.add_argument("--retries", type=int, help="HTTP retries on transport failure (default 0)")
    p_detect.add_argument("--no-ovs", action="store_true", help="bypass object search; output thresholded base masks")
    p_detect.add_argument(
        "--continue-on-error",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="keep processing after a pair fails (default: on)",
    )
    p_detect.add_argument("--assume-aligned", action="store_true",
                          help="acknowledge that inputs are already pixel-aligned")
    p_detect.add_argument("--config", help="JSON config file")
    p_detect.set_defaults(func=cmd_detect)

    p_eval = sub.add_parser("eval", help="score predictions against ground truth")
    p_eval.add_argument("--manifest", required=True, help="pair manifest with gt_path entries")
    p_eval.add_argument("--pred", required=True, help="directory of prediction masks")
    p_eval.add_argument("--pred-suffix", default=".png", dest="pred_suffix",
                        help="prediction filename suffix after pair id (default .png)")
    p_eval.add_argument("--baseline", help="optional second prediction directory to compare against")
    p_eval.add_argument("--baseline-suffix", default=".png", dest="baseline_suffix")
    p_eval.add_argument("--out", help="write the JSON report here")
    p_eval.set_defaults(func=cmd_eval)

    p_list = sub.add_parser("list-objects", help="lost-and-found listing from run records")
    p_list.add_argument("--run-dir", required=True, dest="run_dir", help="detect output directory")
    p_list.add_argument("--out", help="write the listing here as well as stdout")
    p_list.set_defaults(func=cmd_list_objects)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SmallChangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
