"""Exception hierarchy shared across the toolkit."""


class SmallChangeError(Exception):
    """Base class for all toolkit errors."""


class MaskFormatError(SmallChangeError, ValueError):
    """Mask or image data violates the expected format (mode, bit depth, dimensions)."""


class DimensionMismatchError(SmallChangeError, ValueError):
    """Two masks or images that must share dimensions do not."""


class ValidationError(SmallChangeError, ValueError):
    """Invalid configuration, manifest, or argument value."""


class PlacementError(SmallChangeError):
    """No feasible paste placement for the requested cutout and scale."""


class FixtureLayoutError(SmallChangeError):
    """A fixture tree or its index is malformed or internally inconsistent."""


class BackendError(SmallChangeError):
    """Model backend failure. Carries the endpoint and, when known, the pair id."""

    def __init__(self, message: str, *, endpoint: str, pair_id: str | None = None):
        self.endpoint = endpoint
        self.pair_id = pair_id
        detail = f"[{endpoint}"
        if pair_id is not None:
            detail += f", pair {pair_id}"
        detail += f"] {message}"
        super().__init__(detail)


class TransportError(BackendError):
    """Network or server-side failure while talking to an HTTP backend."""


class FixtureMissingError(BackendError):
    """No fixture response is recorded for the request fingerprint."""
