"""Ill-posedness scoring and the base-vs-oversegmentation fusion rule.

The score for one image pair is ``f_b(O_l, O_r) * (1 - IoU(O_l, M_o))`` where
``f_b`` indicates that the live and reference object masks share no pixel.
The oversegmentation mask is adopted only when the score falls strictly
between the two thresholds; otherwise the base change mask wins.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import DimensionMismatchError, ValidationError
from .masks import BinaryMask, disjoint, iou

DEFAULT_LOWER_THRESHOLD = 0.0
DEFAULT_UPPER_THRESHOLD = 0.9


class FusionDecision(enum.Enum):
    ADOPT_OVS = "adopt_ovs"
    ADOPT_BASE = "adopt_base"


@dataclass(frozen=True)
class DoIRecord:
    """Intermediate values of the score plus the fusion decision taken."""

    f_b: int
    iou_ol_mo: float
    doi: float
    decision: FusionDecision
    lower_threshold: float = DEFAULT_LOWER_THRESHOLD
    upper_threshold: float = DEFAULT_UPPER_THRESHOLD

    def to_json_dict(self) -> dict:
        return {
            "f_b": self.f_b,
            "iou_ol_mo": self.iou_ol_mo,
            "doi": self.doi,
            "decision": self.decision.value,
            "thresholds": {"lower": self.lower_threshold, "upper": self.upper_threshold},
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "DoIRecord":
        return cls(
            f_b=int(data["f_b"]),
            iou_ol_mo=float(data["iou_ol_mo"]),
            doi=float(data["doi"]),
            decision=FusionDecision(data["decision"]),
            lower_threshold=float(data["thresholds"]["lower"]),
            upper_threshold=float(data["thresholds"]["upper"]),
        )


def compute_doi(
    o_l: BinaryMask,
    o_r: BinaryMask,
    m_o: BinaryMask,
    lower_threshold: float = DEFAULT_LOWER_THRESHOLD,
    upper_threshold: float = DEFAULT_UPPER_THRESHOLD,
) -> DoIRecord:
    """Score one mask triple and decide which mask the fusion step should adopt."""
    if not lower_threshold < upper_threshold:
        raise ValidationError(
            f"lower threshold must be below upper, got {lower_threshold} / {upper_threshold}"
        )
    if o_l.shape != o_r.shape or o_l.shape != m_o.shape:
        raise DimensionMismatchError(
            f"mask dimensions differ: o_l {o_l.shape}, o_r {o_r.shape}, m_o {m_o.shape}"
        )
    f_b = disjoint(o_l, o_r)
    overlap = iou(o_l, m_o)
    value = f_b * (1.0 - overlap)
    if lower_threshold < value < upper_threshold:
        decision = FusionDecision.ADOPT_OVS
    else:
        decision = FusionDecision.ADOPT_BASE
    return DoIRecord(
        f_b=f_b,
        iou_ol_mo=overlap,
        doi=value,
        decision=decision,
        lower_threshold=lower_threshold,
        upper_threshold=upper_threshold,
    )


def fuse(record: DoIRecord, o_l: BinaryMask, m_o: BinaryMask) -> BinaryMask:
    """Return the adopted mask, bit-exact: o_l on ADOPT_OVS, m_o otherwise."""
    if o_l.shape != m_o.shape:
        raise DimensionMismatchError(f"mask dimensions differ: {o_l.shape} vs {m_o.shape}")
    return o_l if record.decision is FusionDecision.ADOPT_OVS else m_o
