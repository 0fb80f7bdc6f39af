"""Order-preserving map over independent samples, optionally in worker processes."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Iterable

WORKERS_ENV = "DBAR_WORKERS"


@dataclass(frozen=True)
class Outcome:
    value: Any = None
    error: dict | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _guarded(fn: Callable, item) -> Outcome:
    try:
        return Outcome(fn(item))
    except Exception as exc:  # recorded per sample, never fatal
        return Outcome(error={"type": type(exc).__name__, "message": str(exc)})


class _Guard:
    def __init__(self, fn):
        self.fn = fn

    def __call__(self, item):
        return _guarded(self.fn, item)


def parallel_map(fn: Callable, items: Iterable, workers: int | None = None) -> list[Outcome]:
    """Apply ``fn`` to every item; results come back in input order.

    ``fn`` must be picklable when ``workers > 1``.  A raising item yields an
    :class:`Outcome` carrying the error instead of aborting the map.
    """
    items = list(items)
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    guard = _Guard(fn)
    if workers == 1 or len(items) <= 1:
        return [guard(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(guard, items))
