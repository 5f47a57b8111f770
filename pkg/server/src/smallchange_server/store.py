"""Read-only fixture store: the server side of the recorded-response layout.

Independent implementation of the fixture tree schema (see the main toolkit
README, "Fixture layout" and "Digests"): ``index.json`` binds content digests
to response files. All lookups are content-addressed and stateless.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

INDEX_NAME = "index.json"
INDEX_VERSION = 1


class StoreError(Exception):
    """Malformed fixture tree; the server refuses to start on this."""


class LookupMiss(Exception):
    """No fixture is recorded for the request fingerprint."""

    def __init__(self, message: str, pair_id: str | None = None):
        super().__init__(message)
        self.pair_id = pair_id


class BadRequest(Exception):
    """The request payload cannot be decoded."""


def digest_rgb_png(data: bytes) -> str:
    """SHA-256 over b"rgb:<w>x<h>:" + raw row-major RGB bytes."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            rgb = img.convert("RGB")
            w, h = rgb.size
            raw = rgb.tobytes()
    except Exception as exc:
        raise BadRequest(f"invalid PNG image: {exc}") from exc
    return hashlib.sha256(f"rgb:{w}x{h}:".encode() + raw).hexdigest()


def digest_mask_png(data: bytes) -> str:
    """SHA-256 over b"mask:<w>x<h>:" + raw {0,255} bytes (gray >= 128 is foreground)."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            gray = np.asarray(img.convert("L"), dtype=np.uint8)
    except Exception as exc:
        raise BadRequest(f"invalid PNG mask: {exc}") from exc
    h, w = gray.shape
    raw = np.where(gray >= 128, 255, 0).astype(np.uint8).tobytes()
    return hashlib.sha256(f"mask:{w}x{h}:".encode() + raw).hexdigest()


@dataclass
class PairRecord:
    pair_id: str
    live_digest: str
    ref_digest: str
    change_file: str | None
    describes: list[dict]
    segments: dict[str, dict[str, list[dict]]] = field(default_factory=dict)


class FixtureStore:
    def __init__(self, root):
        self.root = Path(root)
        index_path = self.root / INDEX_NAME
        if not index_path.exists():
            raise StoreError(f"fixture index not found: {index_path}")
        try:
            data = json.loads(index_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise StoreError(f"fixture index is not valid JSON: {exc}") from exc
        if data.get("version") != INDEX_VERSION:
            raise StoreError(f"unsupported fixture index version: {data.get('version')!r}")

        self.pairs: dict[str, PairRecord] = {}
        for pair_id, entry in data.get("pairs", {}).items():
            try:
                record = PairRecord(
                    pair_id=pair_id,
                    live_digest=entry["live_digest"],
                    ref_digest=entry["ref_digest"],
                    change_file=entry.get("change"),
                    describes=list(entry.get("describe", [])),
                    segments={
                        role: dict(entry.get("segment", {}).get(role, {}))
                        for role in ("live", "ref")
                    },
                )
            except KeyError as exc:
                raise StoreError(f"pair {pair_id}: missing index key {exc}") from exc
            self.pairs[pair_id] = record

        self.images: dict[str, list[tuple[str, str]]] = {}
        for record in self.pairs.values():
            self.images.setdefault(record.live_digest, []).append((record.pair_id, "live"))
            self.images.setdefault(record.ref_digest, []).append((record.pair_id, "ref"))
        self._validate()

    def _file(self, relative: str) -> Path:
        return self.root / relative

    def _validate(self) -> None:
        for record in self.pairs.values():
            files = []
            if record.change_file:
                files.append(record.change_file)
            for entry in record.describes:
                files.append(entry["file"])
            for by_label in record.segments.values():
                for entries in by_label.values():
                    files.extend(e["file"] for e in entries)
            for rel in files:
                if not self._file(rel).exists():
                    raise StoreError(f"manifest entry does not resolve to a file: {rel}")

        for digest, holders in self.images.items():
            roles = {role for _, role in holders}
            live_holders = [p for p, role in holders if role == "live"]
            if len(live_holders) > 1:
                raise StoreError(f"live image shared by pairs {live_holders}")
            if roles == {"live", "ref"}:
                raise StoreError(f"image {digest[:12]} appears as both live and ref")
            if len(holders) > 1:
                self._check_shared(holders)

    def _check_shared(self, holders: list[tuple[str, str]]) -> None:
        seen_describe: dict[str, bytes] = {}
        seen_segment: dict[str, list[bytes]] = {}
        for pair_id, role in holders:
            record = self.pairs[pair_id]
            if role == "live":
                for entry in record.describes:
                    content = self._file(entry["file"]).read_bytes()
                    prev = seen_describe.get(entry["region_digest"])
                    if prev is not None and prev != content:
                        raise StoreError(f"conflicting describe fixtures (pair {pair_id})")
                    seen_describe[entry["region_digest"]] = content
            for label, entries in record.segments[role].items():
                content = [self._file(e["file"]).read_bytes() for e in entries]
                prev_seg = seen_segment.get(label)
                if prev_seg is not None and prev_seg != content:
                    raise StoreError(
                        f"conflicting segment fixtures for {label!r} (pair {pair_id})"
                    )
                seen_segment[label] = content

    # --- lookups -----------------------------------------------------------

    def _holders(self, image_digest: str) -> list[tuple[str, str]]:
        holders = self.images.get(image_digest, [])
        if not holders:
            raise LookupMiss("fixture missing: no recorded pair matches the submitted image")
        return holders

    def change(self, ref_digest: str, live_digest: str) -> bytes:
        holders = self._holders(live_digest)
        pair_id = next((p for p, role in holders if role == "live"), None)
        if pair_id is None:
            raise LookupMiss("fixture missing: submitted image is not a recorded live image")
        record = self.pairs[pair_id]
        if ref_digest != record.ref_digest:
            raise LookupMiss(
                "fixture missing: reference image does not match the recorded pair",
                pair_id=pair_id,
            )
        if record.change_file is None:
            raise LookupMiss("fixture missing: no change map recorded", pair_id=pair_id)
        return self._file(record.change_file).read_bytes()

    def describe(self, image_digest: str, region_digest: str) -> str:
        holders = self._holders(image_digest)
        for pair_id, _role in holders:
            for entry in self.pairs[pair_id].describes:
                if entry["region_digest"] == region_digest:
                    return self._file(entry["file"]).read_text(encoding="utf-8")
        raise LookupMiss(
            "fixture missing: no description recorded for the submitted region",
            pair_id=holders[0][0],
        )

    def segment(self, image_digest: str, label: str) -> list[dict]:
        holders = self._holders(image_digest)
        for pair_id, role in holders:
            entries = self.pairs[pair_id].segments[role].get(label)
            if entries is None:
                continue
            return [
                {"file_bytes": self._file(e["file"]).read_bytes(),
                 "confidence": e.get("confidence")}
                for e in entries
            ]
        return []
