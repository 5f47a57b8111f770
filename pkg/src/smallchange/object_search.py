"""Object search: turn base change detections into labeled object masks.

For each connected region of the (dilated) base change mask the backend is
asked to name the object; noisy labels are filtered, and the surviving labels
drive open-vocabulary segmentation on both the live and the reference image.
"""

from __future__ import annotations

import base64
import json
import re
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import DimensionMismatchError, ValidationError
from .images import mask_to_png_bytes
from .masks import BinaryMask, connected_components, dilate, union

if TYPE_CHECKING:
    from .backend import ModelBackend

OBJECT_PROMPT = "What is the class name of this object? Please answer like 'This object is .."

DEFAULT_DILATION_ITERATIONS = 3
DEFAULT_KERNEL_SIZE = 5

_LABEL_MARKER = re.compile(r"this\s+object\s+is", re.IGNORECASE)
_CLAUSE_BOUNDARY = re.compile(r"[.!?\n,;:]")
_ARTICLES = ("a", "an", "the")
_TRIM_CHARS = string.punctuation + string.whitespace


def build_prompt() -> str:
    """The canonical region-naming prompt, identical on every call."""
    return OBJECT_PROMPT


def parse_label(response: str) -> str | None:
    """Extract the object name from a backend description.

    Takes the phrase after the first occurrence of "this object is", cut at
    the first clause boundary, with leading articles, surrounding punctuation,
    and excess whitespace removed. Lowercased. Returns None when the pattern
    is absent or yields nothing.
    """
    match = _LABEL_MARKER.search(response)
    if match is None:
        return None
    tail = response[match.end():]
    nested = _LABEL_MARKER.search(tail)
    if nested is not None:
        tail = tail[: nested.start()]
    tail = _CLAUSE_BOUNDARY.split(tail, maxsplit=1)[0]
    phrase = tail.strip(_TRIM_CHARS).lower()
    words = phrase.split()
    if words and words[0] in _ARTICLES:
        words = words[1:]
    phrase = " ".join(words).strip(_TRIM_CHARS)
    return phrase or None


def filter_labels(labels, *, word: str = "floor", whole_word: bool = True) -> list[str]:
    """Drop labels containing the noise word; de-duplicate, preserving first occurrences."""
    pattern = re.compile(rf"\b{re.escape(word)}\b", re.IGNORECASE)
    lowered = word.lower()
    out: list[str] = []
    seen: set[str] = set()
    for label in labels:
        if whole_word:
            noisy = pattern.search(label) is not None
        else:
            noisy = lowered in label.lower()
        if noisy or label in seen:
            continue
        seen.add(label)
        out.append(label)
    return out


def prepare_query_regions(
    base_mask: BinaryMask,
    dilation_iterations: int = DEFAULT_DILATION_ITERATIONS,
    kernel_size: int = DEFAULT_KERNEL_SIZE,
) -> list[BinaryMask]:
    """Dilate the base change mask and split it into per-object query regions."""
    return connected_components(dilate(base_mask, kernel_size, dilation_iterations))


@dataclass(frozen=True)
class ObjectProposal:
    """One open-vocabulary segmentation hit: a label, its mask, and an optional score."""

    label: str
    mask: BinaryMask
    confidence: float | None = None

    def __post_init__(self):
        if not self.label.strip():
            raise ValidationError("proposal label must be nonempty")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"confidence must be within [0, 1], got {self.confidence}")


@dataclass
class SearchConfig:
    dilation_iterations: int = DEFAULT_DILATION_ITERATIONS
    kernel_size: int = DEFAULT_KERNEL_SIZE
    min_confidence: float = 0.0
    noise_word: str = "floor"
    whole_word_filter: bool = True
    max_workers: int = 1


@dataclass
class SearchResult:
    """Labels and object masks produced for one image pair."""

    labels: list[str]
    live_object_mask: BinaryMask
    ref_object_mask: BinaryMask
    per_component_labels: list[tuple[int, str]]
    live_proposals: list[ObjectProposal] = field(default_factory=list)
    ref_proposals: list[ObjectProposal] = field(default_factory=list)
    query_regions: list[BinaryMask] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        def encode(mask: BinaryMask) -> str:
            return base64.b64encode(mask_to_png_bytes(mask)).decode("ascii")

        def proposals(items) -> list[dict]:
            return [
                {"label": p.label, "mask_png": encode(p.mask), "confidence": p.confidence}
                for p in items
            ]

        return {
            "labels": list(self.labels),
            "live_object_mask_png": encode(self.live_object_mask),
            "ref_object_mask_png": encode(self.ref_object_mask),
            "per_component_labels": [[i, label] for i, label in self.per_component_labels],
            "live_proposals": proposals(self.live_proposals),
            "ref_proposals": proposals(self.ref_proposals),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def _map_ordered(fn, items, max_workers: int):
    items = list(items)
    if max_workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fn, items))


def _check_image_pair(live: np.ndarray, ref: np.ndarray, base_mask: BinaryMask) -> None:
    if live.shape != ref.shape:
        raise DimensionMismatchError(f"live/ref dimensions differ: {live.shape} vs {ref.shape}")
    if live.shape[:2] != base_mask.shape:
        raise DimensionMismatchError(
            f"base mask {base_mask.shape} does not match images {live.shape[:2]}"
        )


def _validated_proposals(proposals, label: str, image_shape, min_confidence: float):
    kept = []
    for prop in proposals:
        if prop.mask.shape != image_shape:
            raise DimensionMismatchError(
                f"segment proposal for {label!r} has dimensions {prop.mask.shape}, "
                f"expected {image_shape}"
            )
        if prop.confidence is not None and prop.confidence < min_confidence:
            continue
        kept.append(prop)
    return kept


def search_objects(
    live: np.ndarray,
    ref: np.ndarray,
    base_mask: BinaryMask,
    backend: "ModelBackend",
    config: SearchConfig | None = None,
) -> SearchResult:
    """Run the describe / filter / segment sequence for one image pair.

    Issues one describe call per connected region of the dilated base mask,
    then one segment call per surviving label on each image. Empty masks come
    back when the base mask has no regions or every label is filtered out.
    """
    cfg = config or SearchConfig()
    _check_image_pair(live, ref, base_mask)
    height, width = base_mask.shape

    regions = prepare_query_regions(base_mask, cfg.dilation_iterations, cfg.kernel_size)
    empty = lambda: BinaryMask.empty(width, height)  # noqa: E731
    if not regions:
        return SearchResult([], empty(), empty(), [], [], [], [])

    prompt = build_prompt()
    responses = _map_ordered(
        lambda region: backend.describe(live, region, prompt), regions, cfg.max_workers
    )
    parsed = [parse_label(text) for text in responses]
    raw_labels = [(i, label) for i, label in enumerate(parsed) if label is not None]

    labels = filter_labels(
        [label for _, label in raw_labels],
        word=cfg.noise_word,
        whole_word=cfg.whole_word_filter,
    )
    surviving = set(labels)
    per_component = [(i, label) for i, label in raw_labels if label in surviving]

    image_shape = (height, width)
    live_hits = _map_ordered(lambda lab: backend.segment(live, lab), labels, cfg.max_workers)
    ref_hits = _map_ordered(lambda lab: backend.segment(ref, lab), labels, cfg.max_workers)
    live_proposals: list[ObjectProposal] = []
    ref_proposals: list[ObjectProposal] = []
    for label, hits in zip(labels, live_hits):
        live_proposals.extend(_validated_proposals(hits, label, image_shape, cfg.min_confidence))
    for label, hits in zip(labels, ref_hits):
        ref_proposals.extend(_validated_proposals(hits, label, image_shape, cfg.min_confidence))

    live_mask = union([p.mask for p in live_proposals], width=width, height=height)
    ref_mask = union([p.mask for p in ref_proposals], width=width, height=height)
    return SearchResult(
        labels=labels,
        live_object_mask=live_mask,
        ref_object_mask=ref_mask,
        per_component_labels=per_component,
        live_proposals=live_proposals,
        ref_proposals=ref_proposals,
        query_regions=regions,
    )
