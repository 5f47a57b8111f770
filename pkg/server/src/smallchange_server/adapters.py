"""Hook points for attaching real models behind the wire protocol.

The reference server answers from fixtures; a deployment that wants live
inference implements these interfaces and passes them to
:func:`smallchange_server.app.serve`. Each adapter owns one endpoint and
receives decoded request payloads (PNG bytes and text). These are stubs by
design: wiring SAM/Grounding-DINO-style segmenters, a captioning LMM, or a
trained change detector happens downstream and needs GPU infrastructure this
package does not manage.
"""

from __future__ import annotations

from abc import ABC, abstractmethod


class ChangeDetectorAdapter(ABC):
    @abstractmethod
    def detect_change(self, ref_png: bytes, live_png: bytes) -> bytes:
        """Return an 8-bit single-channel PNG of per-pixel change probability."""


class DescriberAdapter(ABC):
    @abstractmethod
    def describe(self, image_png: bytes, region_png: bytes, prompt: str) -> str:
        """Return free text naming the object inside the region."""


class SegmenterAdapter(ABC):
    @abstractmethod
    def segment(self, image_png: bytes, label: str) -> list[dict]:
        """Return proposals: [{"mask_png": bytes, "confidence": float | None}, ...]."""


class Adapters:
    """Optional per-endpoint overrides; endpoints without an adapter use fixtures."""

    def __init__(
        self,
        change: ChangeDetectorAdapter | None = None,
        describe: DescriberAdapter | None = None,
        segment: SegmenterAdapter | None = None,
    ):
        self.change = change
        self.describe = describe
        self.segment = segment
