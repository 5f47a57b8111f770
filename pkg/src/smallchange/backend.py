"""Model backend contract plus the file-fixture and HTTP client implementations.

Three endpoints cover every neural model the pipeline consumes: change
detection, region description, and open-vocabulary segmentation. The fixture
backend answers from a recorded tree (see :mod:`smallchange.fixtures`); the
HTTP client speaks the JSON-over-HTTP protocol documented in the README.
Both are interchangeable for a given fixture set.
"""

from __future__ import annotations

import base64
import binascii
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
import requests

from .errors import BackendError, DimensionMismatchError, FixtureMissingError, TransportError
from .fixtures import FixtureIndex, digest_image, digest_mask, load_fixture_index
from .images import (
    image_to_png_bytes,
    mask_to_png_bytes,
    png_bytes_to_mask,
    png_bytes_to_prob,
)
from .masks import BinaryMask, ProbabilityMask, load_mask, load_probability_mask
from .object_search import ObjectProposal

BACKEND_URL_ENV = "SMALLCHANGE_BACKEND_URL"

CHANGE_PATH = "/v1/change"
DESCRIBE_PATH = "/v1/describe"
SEGMENT_PATH = "/v1/segment"


class ModelBackend(ABC):
    """Contract every backend satisfies; returned masks match the submitted image."""

    @abstractmethod
    def detect_change(self, ref: np.ndarray, live: np.ndarray) -> ProbabilityMask:
        """Per-pixel change probability for an aligned reference/live pair."""

    @abstractmethod
    def describe(self, image: np.ndarray, region: BinaryMask, prompt: str) -> str:
        """Free-text description of the region of interest within the image."""

    @abstractmethod
    def segment(self, image: np.ndarray, label: str) -> list[ObjectProposal]:
        """Open-vocabulary segmentation hits for the label; may be empty."""


def _check_change_pre(ref: np.ndarray, live: np.ndarray) -> None:
    if ref.shape != live.shape:
        raise DimensionMismatchError(f"ref/live dimensions differ: {ref.shape} vs {live.shape}")


def _check_region_pre(image: np.ndarray, region: BinaryMask) -> None:
    if image.shape[:2] != region.shape:
        raise DimensionMismatchError(
            f"region {region.shape} does not match image {image.shape[:2]}"
        )


def _check_label_pre(label: str) -> None:
    if not label.strip():
        raise BackendError("label must be nonempty", endpoint="segment")


class FixtureBackend(ModelBackend):
    """Pure-lookup backend answering from a fixture tree; stateless and thread-safe."""

    def __init__(self, root):
        self.index: FixtureIndex = load_fixture_index(root)

    def _candidates(self, image: np.ndarray, endpoint: str) -> list[tuple[str, str]]:
        holders = self.index.resolve_image(digest_image(image))
        if not holders:
            raise FixtureMissingError(
                "fixture missing: no recorded pair matches the submitted image",
                endpoint=endpoint,
            )
        return holders

    def detect_change(self, ref: np.ndarray, live: np.ndarray) -> ProbabilityMask:
        _check_change_pre(ref, live)
        holders = self._candidates(live, "change")
        pair_id = next((p for p, role in holders if role == "live"), None)
        if pair_id is None:
            raise FixtureMissingError(
                "fixture missing: submitted image is not a recorded live image",
                endpoint="change",
            )
        pair = self.index.pairs[pair_id]
        if digest_image(ref) != pair.ref_digest:
            raise FixtureMissingError(
                "fixture missing: reference image does not match the recorded pair",
                endpoint="change",
                pair_id=pair_id,
            )
        if pair.change_file is None:
            raise FixtureMissingError(
                "fixture missing: no change map recorded", endpoint="change", pair_id=pair_id
            )
        prob = load_probability_mask(self.index.path(pair.change_file))
        if prob.shape != live.shape[:2]:
            raise BackendError(
                f"dimension mismatch: change map {prob.shape} vs image {live.shape[:2]}",
                endpoint="change",
                pair_id=pair_id,
            )
        return prob

    def describe(self, image: np.ndarray, region: BinaryMask, prompt: str) -> str:
        _check_region_pre(image, region)
        holders = self._candidates(image, "describe")
        wanted = digest_mask(region)
        for pair_id, _role in holders:
            for entry in self.index.pairs[pair_id].describes:
                if entry.region_digest == wanted:
                    return self.index.path(entry.file).read_text(encoding="utf-8")
        raise FixtureMissingError(
            "fixture missing: no description recorded for the submitted region",
            endpoint="describe",
            pair_id=holders[0][0],
        )

    def segment(self, image: np.ndarray, label: str) -> list[ObjectProposal]:
        _check_label_pre(label)
        holders = self._candidates(image, "segment")
        for pair_id, role in holders:
            entries = self.index.pairs[pair_id].segments[role].get(label)
            if entries is None:
                continue
            proposals = []
            for entry in entries:
                mask = load_mask(self.index.path(entry.file))
                if mask.shape != image.shape[:2]:
                    raise BackendError(
                        f"dimension mismatch: proposal {mask.shape} vs image {image.shape[:2]}",
                        endpoint="segment",
                        pair_id=pair_id,
                    )
                proposals.append(
                    ObjectProposal(label=label, mask=mask, confidence=entry.confidence)
                )
            return proposals
        return []


@dataclass
class HttpConfig:
    base_url: str
    timeout: float = 30.0
    retries: int = 0
    max_connections: int = 8


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


class HttpBackend(ModelBackend):
    """JSON-over-HTTP client for a backend server; see the README for the protocol."""

    def __init__(self, config: HttpConfig):
        self.config = config
        self._session = requests.Session()
        adapter = requests.adapters.HTTPAdapter(
            pool_connections=1, pool_maxsize=config.max_connections, pool_block=True
        )
        self._session.mount("http://", adapter)
        self._session.mount("https://", adapter)

    @classmethod
    def from_url(cls, base_url: str, **kwargs) -> "HttpBackend":
        return cls(HttpConfig(base_url=base_url, **kwargs))

    def _post(self, path: str, payload: dict, endpoint: str) -> dict:
        url = self.config.base_url.rstrip("/") + path
        attempts = self.config.retries + 1
        last_exc: Exception | None = None
        for _ in range(attempts):
            try:
                response = self._session.post(url, json=payload, timeout=self.config.timeout)
            except requests.RequestException as exc:
                last_exc = TransportError(f"request failed: {exc}", endpoint=endpoint)
                continue
            return self._interpret(response, endpoint)
        assert last_exc is not None
        raise last_exc

    def _interpret(self, response: requests.Response, endpoint: str) -> dict:
        if response.status_code == 404:
            body = self._json_or_none(response)
            pair_id = body.get("pair_id") if isinstance(body, dict) else None
            message = body.get("error", "fixture missing") if isinstance(body, dict) else "fixture missing"
            raise FixtureMissingError(message, endpoint=endpoint, pair_id=pair_id)
        if response.status_code == 400:
            body = self._json_or_none(response)
            message = body.get("error", "bad request") if isinstance(body, dict) else "bad request"
            raise BackendError(f"rejected request: {message}", endpoint=endpoint)
        if response.status_code != 200:
            raise TransportError(
                f"server returned HTTP {response.status_code}", endpoint=endpoint
            )
        body = self._json_or_none(response)
        if not isinstance(body, dict):
            raise BackendError("malformed response: body is not a JSON object", endpoint=endpoint)
        return body

    @staticmethod
    def _json_or_none(response: requests.Response):
        try:
            return response.json()
        except ValueError:
            return None

    @staticmethod
    def _decode_png(field: str, value, endpoint: str) -> bytes:
        if not isinstance(value, str):
            raise BackendError(f"malformed response: missing {field}", endpoint=endpoint)
        try:
            return base64.b64decode(value, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise BackendError(
                f"malformed response: {field} is not valid base64 ({exc})", endpoint=endpoint
            ) from exc

    def detect_change(self, ref: np.ndarray, live: np.ndarray) -> ProbabilityMask:
        _check_change_pre(ref, live)
        body = self._post(
            CHANGE_PATH,
            {"ref_png": _b64(image_to_png_bytes(ref)), "image_png": _b64(image_to_png_bytes(live))},
            endpoint="change",
        )
        prob = png_bytes_to_prob(self._decode_png("prob_png", body.get("prob_png"), "change"))
        if prob.shape != live.shape[:2]:
            raise BackendError(
                f"dimension mismatch: change map {prob.shape} vs image {live.shape[:2]}",
                endpoint="change",
            )
        return prob

    def describe(self, image: np.ndarray, region: BinaryMask, prompt: str) -> str:
        _check_region_pre(image, region)
        body = self._post(
            DESCRIBE_PATH,
            {
                "image_png": _b64(image_to_png_bytes(image)),
                "region_png": _b64(mask_to_png_bytes(region)),
                "prompt": prompt,
            },
            endpoint="describe",
        )
        text = body.get("text")
        if not isinstance(text, str):
            raise BackendError("malformed response: missing text", endpoint="describe")
        return text

    def segment(self, image: np.ndarray, label: str) -> list[ObjectProposal]:
        _check_label_pre(label)
        body = self._post(
            SEGMENT_PATH,
            {"image_png": _b64(image_to_png_bytes(image)), "label": label},
            endpoint="segment",
        )
        raw = body.get("proposals")
        if not isinstance(raw, list):
            raise BackendError("malformed response: missing proposals", endpoint="segment")
        proposals = []
        for item in raw:
            if not isinstance(item, dict):
                raise BackendError("malformed response: proposal is not an object", endpoint="segment")
            mask = png_bytes_to_mask(self._decode_png("mask_png", item.get("mask_png"), "segment"))
            if mask.shape != image.shape[:2]:
                raise BackendError(
                    f"dimension mismatch: proposal {mask.shape} vs image {image.shape[:2]}",
                    endpoint="segment",
                )
            confidence = item.get("confidence")
            proposals.append(
                ObjectProposal(
                    label=item.get("label", label),
                    mask=mask,
                    confidence=float(confidence) if confidence is not None else None,
                )
            )
        return proposals


def backend_url_from_env() -> str | None:
    url = os.environ.get(BACKEND_URL_ENV, "").strip()
    return url or None
