"""File-fixture layout shared by the local backend and the reference HTTP server.

Layout, relative to a fixture root::

    <pair_id>/change.png                          probability map for the pair
    <pair_id>/describe/<i>.txt                    description for query region i
    <pair_id>/describe/<i>.region.png             the region the entry answers (inspection aid)
    <pair_id>/segment/<live|ref>/<label>/<k>.png  segmentation proposals, label URL-encoded
    index.json                                    manifest binding requests to responses

The wire protocol carries no pair identifier, so requests are resolved by
content: the manifest records a SHA-256 digest per image and per describe
region. Digest payloads are ``b"rgb:<w>x<h>:" + raw RGB bytes`` for images and
``b"mask:<w>x<h>:" + raw {0,255} bytes`` for masks, row-major.

Constraints enforced on every tree: live-image digests are unique across
pairs, no image appears as both live and ref, and when the same image is
shared by several pairs (a reused reference background) all recorded
responses for it must agree byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
import urllib.parse
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FixtureLayoutError
from .masks import BinaryMask, ProbabilityMask, save_mask, save_probability_mask

INDEX_NAME = "index.json"
INDEX_VERSION = 1


def digest_image(image: np.ndarray) -> str:
    arr = np.ascontiguousarray(image, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise FixtureLayoutError(f"image digest needs an (h, w, 3) array, got {arr.shape}")
    h, w = arr.shape[:2]
    return hashlib.sha256(b"rgb:%dx%d:" % (w, h) + arr.tobytes()).hexdigest()


def digest_mask(mask: BinaryMask) -> str:
    arr = np.where(mask.pixels, 255, 0).astype(np.uint8)
    h, w = arr.shape
    return hashlib.sha256(b"mask:%dx%d:" % (w, h) + arr.tobytes()).hexdigest()


def quote_label(label: str) -> str:
    return urllib.parse.quote(label, safe="")


@dataclass
class DescribeEntry:
    region_digest: str
    file: str
    region_file: str | None = None


@dataclass
class SegmentEntry:
    file: str
    confidence: float | None = None


@dataclass
class PairFixtures:
    pair_id: str
    live_digest: str
    ref_digest: str
    change_file: str | None = None
    describes: list[DescribeEntry] = field(default_factory=list)
    segments: dict[str, dict[str, list[SegmentEntry]]] = field(
        default_factory=lambda: {"live": {}, "ref": {}}
    )


@dataclass
class FixtureIndex:
    """Parsed, validated fixture manifest plus the content-to-pair lookup table."""

    root: Path
    pairs: dict[str, PairFixtures]
    images: dict[str, list[tuple[str, str]]]  # digest -> [(pair_id, role)]

    def resolve_image(self, digest: str) -> list[tuple[str, str]]:
        return self.images.get(digest, [])

    def path(self, relative: str) -> Path:
        return self.root / relative


def _pair_to_json(pair: PairFixtures) -> dict:
    return {
        "live_digest": pair.live_digest,
        "ref_digest": pair.ref_digest,
        "change": pair.change_file,
        "describe": [
            {
                "region_digest": d.region_digest,
                "file": d.file,
                "region_file": d.region_file,
            }
            for d in pair.describes
        ],
        "segment": {
            role: {
                label: [{"file": e.file, "confidence": e.confidence} for e in entries]
                for label, entries in sorted(by_label.items())
            }
            for role, by_label in pair.segments.items()
        },
    }


def _pair_from_json(pair_id: str, data: dict) -> PairFixtures:
    describes = [
        DescribeEntry(
            region_digest=entry["region_digest"],
            file=entry["file"],
            region_file=entry.get("region_file"),
        )
        for entry in data.get("describe", [])
    ]
    segments: dict[str, dict[str, list[SegmentEntry]]] = {"live": {}, "ref": {}}
    for role in ("live", "ref"):
        for label, entries in data.get("segment", {}).get(role, {}).items():
            segments[role][label] = [
                SegmentEntry(file=e["file"], confidence=e.get("confidence")) for e in entries
            ]
    return PairFixtures(
        pair_id=pair_id,
        live_digest=data["live_digest"],
        ref_digest=data["ref_digest"],
        change_file=data.get("change"),
        describes=describes,
        segments=segments,
    )


def _build_image_table(pairs: dict[str, PairFixtures]) -> dict[str, list[tuple[str, str]]]:
    images: dict[str, list[tuple[str, str]]] = {}
    for pair in pairs.values():
        images.setdefault(pair.live_digest, []).append((pair.pair_id, "live"))
        images.setdefault(pair.ref_digest, []).append((pair.pair_id, "ref"))
    return images


def _validate(index: FixtureIndex) -> None:
    for pair in index.pairs.values():
        files = []
        if pair.change_file:
            files.append(pair.change_file)
        for entry in pair.describes:
            files.append(entry.file)
            if entry.region_file:
                files.append(entry.region_file)
        for by_label in pair.segments.values():
            for entries in by_label.values():
                files.extend(e.file for e in entries)
        for rel in files:
            if not index.path(rel).exists():
                raise FixtureLayoutError(f"manifest entry does not resolve to a file: {rel}")

    for digest, holders in index.images.items():
        roles = {role for _, role in holders}
        live_holders = [p for p, role in holders if role == "live"]
        if len(live_holders) > 1:
            raise FixtureLayoutError(
                f"live image shared by pairs {live_holders}; live digests must be unique"
            )
        if roles == {"live", "ref"}:
            raise FixtureLayoutError(
                f"image {digest[:12]} appears as both live and ref; roles must not mix"
            )
        if len(holders) > 1:
            _check_shared_consistency(index, holders)


def _check_shared_consistency(index: FixtureIndex, holders: list[tuple[str, str]]) -> None:
    # A fixture models a deterministic function of content, so pairs sharing an
    # image must agree on every response recorded for it.
    def read(rel: str) -> bytes:
        return index.path(rel).read_bytes()

    seen_describe: dict[str, bytes] = {}
    seen_segment: dict[str, list[bytes]] = {}
    for pair_id, role in holders:
        pair = index.pairs[pair_id]
        if role == "live":
            for entry in pair.describes:
                content = read(entry.file)
                prev = seen_describe.get(entry.region_digest)
                if prev is not None and prev != content:
                    raise FixtureLayoutError(
                        f"conflicting describe fixtures for a shared image (pair {pair_id})"
                    )
                seen_describe[entry.region_digest] = content
        for label, entries in pair.segments[role].items():
            content = [read(e.file) for e in entries]
            prev_seg = seen_segment.get(label)
            if prev_seg is not None and prev_seg != content:
                raise FixtureLayoutError(
                    f"conflicting segment fixtures for label {label!r} on a shared image "
                    f"(pair {pair_id})"
                )
            seen_segment[label] = content


def load_fixture_index(root) -> FixtureIndex:
    """Parse and validate ``index.json`` under the fixture root."""
    root = Path(root)
    index_path = root / INDEX_NAME
    if not index_path.exists():
        raise FixtureLayoutError(f"fixture index not found: {index_path}")
    try:
        data = json.loads(index_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FixtureLayoutError(f"fixture index is not valid JSON: {exc}") from exc
    if data.get("version") != INDEX_VERSION:
        raise FixtureLayoutError(f"unsupported fixture index version: {data.get('version')!r}")
    pairs = {
        pair_id: _pair_from_json(pair_id, entry) for pair_id, entry in data.get("pairs", {}).items()
    }
    index = FixtureIndex(root=root, pairs=pairs, images=_build_image_table(pairs))
    _validate(index)
    return index


class FixtureWriter:
    """Builds a fixture tree plus its manifest.

    Add pairs, then responses, then call :meth:`finish` to write and validate
    ``index.json``.
    """

    def __init__(self, root):
        self.root = Path(root)
        self._pairs: dict[str, PairFixtures] = {}

    def add_pair(self, pair_id: str, ref_image: np.ndarray, live_image: np.ndarray) -> None:
        if pair_id in self._pairs:
            raise FixtureLayoutError(f"duplicate pair id {pair_id!r}")
        self._pairs[pair_id] = PairFixtures(
            pair_id=pair_id,
            live_digest=digest_image(live_image),
            ref_digest=digest_image(ref_image),
        )

    def _pair(self, pair_id: str) -> PairFixtures:
        try:
            return self._pairs[pair_id]
        except KeyError:
            raise FixtureLayoutError(f"unknown pair id {pair_id!r}; call add_pair first") from None

    def set_change(self, pair_id: str, prob: ProbabilityMask) -> None:
        pair = self._pair(pair_id)
        rel = f"{pair_id}/change.png"
        save_probability_mask(prob, self.root / rel)
        pair.change_file = rel

    def add_describe(self, pair_id: str, region: BinaryMask, text: str) -> int:
        pair = self._pair(pair_id)
        idx = len(pair.describes)
        rel = f"{pair_id}/describe/{idx}.txt"
        rel_region = f"{pair_id}/describe/{idx}.region.png"
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        save_mask(region, self.root / rel_region)
        pair.describes.append(
            DescribeEntry(region_digest=digest_mask(region), file=rel, region_file=rel_region)
        )
        return idx

    def add_segment(
        self,
        pair_id: str,
        role: str,
        label: str,
        mask: BinaryMask,
        confidence: float | None = None,
    ) -> None:
        if role not in ("live", "ref"):
            raise FixtureLayoutError(f"segment role must be 'live' or 'ref', got {role!r}")
        pair = self._pair(pair_id)
        entries = pair.segments[role].setdefault(label, [])
        rel = f"{pair_id}/segment/{role}/{quote_label(label)}/{len(entries)}.png"
        save_mask(mask, self.root / rel)
        entries.append(SegmentEntry(file=rel, confidence=confidence))

    def add_empty_segment(self, pair_id: str, role: str, label: str) -> None:
        """Record an explicit no-hits response for a label."""
        self._pair(pair_id).segments[role].setdefault(label, [])

    def finish(self) -> FixtureIndex:
        self.root.mkdir(parents=True, exist_ok=True)
        payload = {
            "version": INDEX_VERSION,
            "pairs": {pid: _pair_to_json(pair) for pid, pair in sorted(self._pairs.items())},
        }
        (self.root / INDEX_NAME).write_text(
            json.dumps(payload, indent=2) + "\n", encoding="utf-8"
        )
        return load_fixture_index(self.root)
