"""Allocation audit hooks.

Every code path that materialises a container of length ``N**M`` (digit
tables, dense vectors, the dense operator) reports through
:func:`note_dense`.  :class:`AllocationAudit` collects those reports and
tracks the tracemalloc peak, so callers can check that a solve stayed in
the compressed representation.
"""

from __future__ import annotations

import threading
import tracemalloc
from dataclasses import dataclass, field

_local = threading.local()


def _stack() -> list["AllocationAudit"]:
    if not hasattr(_local, "stack"):
        _local.stack = []
    return _local.stack


def note_dense(length: int, what: str) -> None:
    for audit in _stack():
        audit.dense_events.append((what, int(length)))


@dataclass
class AllocationAudit:
    """Context manager; ``dense_events`` lists (what, length) for each dense allocation."""

    trace_memory: bool = True
    dense_events: list[tuple[str, int]] = field(default_factory=list)
    peak_bytes: int = 0

    def __enter__(self):
        _stack().append(self)
        self._started = False
        if self.trace_memory:
            if not tracemalloc.is_tracing():
                tracemalloc.start()
                self._started = True
            tracemalloc.reset_peak()
            self._base = tracemalloc.get_traced_memory()[0]
        return self

    def __exit__(self, *exc):
        _stack().remove(self)
        if self.trace_memory:
            _, peak = tracemalloc.get_traced_memory()
            self.peak_bytes = max(0, peak - self._base)
            if self._started:
                tracemalloc.stop()
        return False

    def max_dense_length(self) -> int:
        return max((n for _, n in self.dense_events), default=0)
