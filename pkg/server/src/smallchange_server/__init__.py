"""Reference HTTP server for the smallchange backend wire protocol."""

from .adapters import Adapters, ChangeDetectorAdapter, DescriberAdapter, SegmenterAdapter
from .app import main, run, serve, start_in_thread
from .store import BadRequest, FixtureStore, LookupMiss, StoreError

__version__ = "0.1.0"

__all__ = [
    "serve",
    "run",
    "main",
    "start_in_thread",
    "FixtureStore",
    "StoreError",
    "LookupMiss",
    "BadRequest",
    "Adapters",
    "ChangeDetectorAdapter",
    "DescriberAdapter",
    "SegmenterAdapter",
]
