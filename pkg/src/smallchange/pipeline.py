"""Batch detection pipeline: manifest handling, per-pair processing, run records.

Per pair the flow is detect_change -> threshold -> object search -> score ->
fuse. Outputs under the run directory:

    masks/<pair_id>.base.png    thresholded base change mask
    masks/<pair_id>.fused.png   adopted final mask
    records/<pair_id>.doi.json  score record for the pair
    records/<pair_id>.run.json  full run record (paths, labels, objects)
    summary.json                per-run roll-up

Record files are deterministic for a given fixture set; stage timings go to
the log only, so repeated runs stay byte-identical.
"""

from __future__ import annotations

import json
import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .backend import ModelBackend
from .doi import DoIRecord, compute_doi, fuse
from .errors import SmallChangeError, ValidationError
from .images import load_image
from .masks import BinaryMask, save_mask, threshold
from .object_search import SearchConfig, search_objects

log = logging.getLogger(__name__)

_PAIR_ID = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


@dataclass(frozen=True)
class PairEntry:
    pair_id: str
    ref_path: Path
    live_path: Path
    gt_path: Path | None
    dataset_id: str


def load_pair_manifest(path) -> list[PairEntry]:
    """Read a JSON-lines pair manifest; ids must be unique, referenced files must exist."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"pair manifest not found: {path}")
    entries: list[PairEntry] = []
    seen: set[str] = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
        try:
            pair_id = str(row["pair_id"])
            ref = row["ref_path"]
            live = row["live_path"]
        except KeyError as exc:
            raise ValidationError(f"{path}:{lineno}: missing key {exc}") from exc
        if not _PAIR_ID.match(pair_id):
            raise ValidationError(f"{path}:{lineno}: invalid pair id {pair_id!r}")
        if pair_id in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate pair id {pair_id!r}")
        seen.add(pair_id)

        def resolve(p) -> Path:
            p = Path(p)
            return p if p.is_absolute() else path.parent / p

        ref_path, live_path = resolve(ref), resolve(live)
        gt_path = resolve(row["gt_path"]) if row.get("gt_path") else None
        for f in (ref_path, live_path) + ((gt_path,) if gt_path else ()):
            if not f.exists():
                raise ValidationError(f"{path}:{lineno}: referenced file not found: {f}")
        entries.append(
            PairEntry(
                pair_id=pair_id,
                ref_path=ref_path,
                live_path=live_path,
                gt_path=gt_path,
                dataset_id=str(row.get("dataset_id", "default")),
            )
        )
    return entries


def write_pair_manifest(entries: list[PairEntry], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for e in entries:
        row = {
            "pair_id": e.pair_id,
            "ref_path": str(e.ref_path),
            "live_path": str(e.live_path),
            "dataset_id": e.dataset_id,
        }
        if e.gt_path is not None:
            row["gt_path"] = str(e.gt_path)
        lines.append(json.dumps(row))
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


@dataclass
class PipelineConfig:
    threshold: float = 0.5
    doi_lower: float = 0.0
    doi_upper: float = 0.9
    search: SearchConfig = field(default_factory=SearchConfig)
    use_ovs: bool = True
    continue_on_error: bool = True
    workers: int = 1


@dataclass(frozen=True)
class DetectedObject:
    component: int
    label: str
    pixels: int
    bbox: tuple[int, int, int, int] | None  # x0, y0, x1, y1 inclusive

    def to_json_dict(self) -> dict:
        return {
            "component": self.component,
            "label": self.label,
            "pixels": self.pixels,
            "bbox": list(self.bbox) if self.bbox is not None else None,
        }


@dataclass
class RunRecord:
    """Everything needed to reproduce one pair's fusion decision.

    ``timing_ms`` is informational and intentionally left out of the
    serialized form so record files stay byte-identical across runs.
    """

    pair_id: str
    mode: str  # "fused" or "base_only"
    doi: DoIRecord | None
    base_mask_path: str
    fused_mask_path: str
    labels: list[str]
    objects: list[DetectedObject]
    timing_ms: dict[str, float] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "mode": self.mode,
            "doi": self.doi.to_json_dict() if self.doi is not None else None,
            "masks": {"base": self.base_mask_path, "fused": self.fused_mask_path},
            "labels": list(self.labels),
            "objects": [obj.to_json_dict() for obj in self.objects],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "RunRecord":
        return cls(
            pair_id=data["pair_id"],
            mode=data["mode"],
            doi=DoIRecord.from_json_dict(data["doi"]) if data.get("doi") else None,
            base_mask_path=data["masks"]["base"],
            fused_mask_path=data["masks"]["fused"],
            labels=list(data.get("labels", [])),
            objects=[
                DetectedObject(
                    component=obj["component"],
                    label=obj["label"],
                    pixels=obj["pixels"],
                    bbox=tuple(obj["bbox"]) if obj.get("bbox") else None,
                )
                for obj in data.get("objects", [])
            ],
        )


def _object_rows(fused: BinaryMask, regions, per_component_labels) -> list[DetectedObject]:
    rows = []
    for index, label in per_component_labels:
        clipped = fused.pixels & regions[index].pixels
        count = int(clipped.sum())
        bbox = None
        if count:
            ys, xs = clipped.nonzero()
            bbox = (int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))
        rows.append(DetectedObject(component=index, label=label, pixels=count, bbox=bbox))
    return rows


def process_pair(
    entry: PairEntry, backend: ModelBackend, config: PipelineConfig, out_dir
) -> RunRecord:
    """Run the full detection/fusion flow for one pair and write its artifacts."""
    out_dir = Path(out_dir)
    ref = load_image(entry.ref_path)
    live = load_image(entry.live_path)

    t0 = time.perf_counter()
    prob = backend.detect_change(ref, live)
    base = threshold(prob, config.threshold)
    t1 = time.perf_counter()

    base_rel = f"masks/{entry.pair_id}.base.png"
    fused_rel = f"masks/{entry.pair_id}.fused.png"
    save_mask(base, out_dir / base_rel)

    if config.use_ovs:
        result = search_objects(live, ref, base, backend, config.search)
        t2 = time.perf_counter()
        record = compute_doi(
            result.live_object_mask,
            result.ref_object_mask,
            base,
            config.doi_lower,
            config.doi_upper,
        )
        fused = fuse(record, result.live_object_mask, base)
        run = RunRecord(
            pair_id=entry.pair_id,
            mode="fused",
            doi=record,
            base_mask_path=base_rel,
            fused_mask_path=fused_rel,
            labels=result.labels,
            objects=_object_rows(fused, result.query_regions, result.per_component_labels),
            timing_ms={
                "detect": (t1 - t0) * 1000.0,
                "search": (t2 - t1) * 1000.0,
                "fuse": (time.perf_counter() - t2) * 1000.0,
            },
        )
    else:
        fused = base
        run = RunRecord(
            pair_id=entry.pair_id,
            mode="base_only",
            doi=None,
            base_mask_path=base_rel,
            fused_mask_path=fused_rel,
            labels=[],
            objects=[],
            timing_ms={"detect": (t1 - t0) * 1000.0},
        )

    save_mask(fused, out_dir / fused_rel)
    records_dir = out_dir / "records"
    records_dir.mkdir(parents=True, exist_ok=True)
    if run.doi is not None:
        (records_dir / f"{entry.pair_id}.doi.json").write_text(
            json.dumps(run.doi.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )
    (records_dir / f"{entry.pair_id}.run.json").write_text(
        json.dumps(run.to_json_dict(), indent=2) + "\n", encoding="utf-8"
    )
    log.info(
        "pair %s: %s (timings ms: %s)",
        entry.pair_id,
        run.mode if run.doi is None else run.doi.decision.value,
        {k: round(v, 1) for k, v in run.timing_ms.items()},
    )
    return run


@dataclass
class DetectSummary:
    records: list[RunRecord]
    failures: dict[str, str]

    @property
    def ok(self) -> bool:
        return not self.failures


def run_detect(
    entries: list[PairEntry], backend: ModelBackend, config: PipelineConfig, out_dir
) -> DetectSummary:
    """Process a manifest with a bounded worker pool; artifacts are per-pair files."""
    if not entries:
        raise ValidationError("pair manifest is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    records: list[RunRecord] = []
    failures: dict[str, str] = {}
    workers = max(1, config.workers)
    if workers == 1:
        futures = None
        iterator = ((entry, None) for entry in entries)
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        futures = [(entry, pool.submit(process_pair, entry, backend, config, out_dir)) for entry in entries]
        iterator = iter(futures)

    try:
        for entry, future in iterator:
            try:
                if future is None:
                    records.append(process_pair(entry, backend, config, out_dir))
                else:
                    records.append(future.result())
            except SmallChangeError as exc:
                failures[entry.pair_id] = str(exc)
                log.error("pair %s failed: %s", entry.pair_id, exc)
                if not config.continue_on_error:
                    break
    finally:
        if futures is not None:
            pool.shutdown(wait=False, cancel_futures=not config.continue_on_error)

    summary = {
        "pairs": len(entries),
        "succeeded": len(records),
        "failed": failures,
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8"
    )
    return DetectSummary(records=records, failures=failures)


def load_run_records(out_dir) -> list[RunRecord]:
    """Read all run records under a detect output directory, ordered by pair id."""
    records_dir = Path(out_dir) / "records"
    if not records_dir.is_dir():
        raise ValidationError(f"no records directory under {out_dir}")
    records = []
    for path in sorted(records_dir.glob("*.run.json")):
        records.append(RunRecord.from_json_dict(json.loads(path.read_text(encoding="utf-8"))))
    return records


def render_object_listing(records: list[RunRecord]) -> str:
    """Lost-and-found table: one row per labeled change component."""
    rows = []
    for record in sorted(records, key=lambda r: r.pair_id):
        for obj in sorted(record.objects, key=lambda o: o.component):
            bbox = ",".join(str(v) for v in obj.bbox) if obj.bbox is not None else "-"
            rows.append((record.pair_id, str(obj.component), obj.label, str(obj.pixels), bbox))
    header = ("pair_id", "component", "label", "pixels", "bbox")
    widths = [
        max(len(header[col]), *(len(r[col]) for r in rows)) if rows else len(header[col])
        for col in range(5)
    ]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header)).rstrip()]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"
