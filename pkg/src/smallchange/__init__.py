"""Small-object change detection toolkit.

Fuses a base change-detection mask with open-vocabulary segmentation evidence
via an ill-posedness score, generates copy-paste pseudo training data, and
evaluates predictions pixel-wise. All neural models sit behind the
:class:`~smallchange.backend.ModelBackend` contract.
"""

from .backend import FixtureBackend, HttpBackend, HttpConfig, ModelBackend
from .doi import DoIRecord, FusionDecision, compute_doi, fuse
from .errors import (
    BackendError,
    DimensionMismatchError,
    FixtureLayoutError,
    FixtureMissingError,
    MaskFormatError,
    PlacementError,
    SmallChangeError,
    TransportError,
    ValidationError,
)
from .evaluation import EvalCounts, ScoreRow, aggregate, compare, count_pixels, score, score_pair
from .masks import (
    BinaryMask,
    ProbabilityMask,
    connected_components,
    dilate,
    disjoint,
    iou,
    load_mask,
    load_probability_mask,
    save_mask,
    save_probability_mask,
    threshold,
    union,
)
from .object_search import (
    OBJECT_PROMPT,
    ObjectProposal,
    SearchConfig,
    SearchResult,
    build_prompt,
    filter_labels,
    parse_label,
    prepare_query_regions,
    search_objects,
)
from .synth import (
    ObjectCutout,
    Placement,
    SynthSample,
    composite,
    generate_dataset,
    load_backgrounds,
    load_object_bank,
    sample_placement,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryMask",
    "ProbabilityMask",
    "load_mask",
    "save_mask",
    "load_probability_mask",
    "save_probability_mask",
    "threshold",
    "iou",
    "disjoint",
    "dilate",
    "union",
    "connected_components",
    "DoIRecord",
    "FusionDecision",
    "compute_doi",
    "fuse",
    "OBJECT_PROMPT",
    "build_prompt",
    "parse_label",
    "filter_labels",
    "prepare_query_regions",
    "search_objects",
    "ObjectProposal",
    "SearchConfig",
    "SearchResult",
    "ModelBackend",
    "FixtureBackend",
    "HttpBackend",
    "HttpConfig",
    "ObjectCutout",
    "Placement",
    "SynthSample",
    "sample_placement",
    "composite",
    "generate_dataset",
    "load_object_bank",
    "load_backgrounds",
    "EvalCounts",
    "ScoreRow",
    "count_pixels",
    "score",
    "score_pair",
    "aggregate",
    "compare",
    "SmallChangeError",
    "MaskFormatError",
    "DimensionMismatchError",
    "ValidationError",
    "PlacementError",
    "FixtureLayoutError",
    "BackendError",
    "TransportError",
    "FixtureMissingError",
]
