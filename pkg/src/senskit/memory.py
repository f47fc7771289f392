"""Allocation accounting for the large pipeline buffers.

Peaks reported here count only buffers registered explicitly (Gram matrices,
per-voxel fields, eigen outputs), not interpreter overhead or temporaries
inside numpy, so they are lower bounds on the true footprint.
"""

from __future__ import annotations

from contextlib import contextmanager


class AllocationTracker:
    def __init__(self):
        self.live: dict[str, int] = {}
        self.current = 0
        self.peak = 0
        self.stage_peaks: dict[str, int] = {}
        self._stage: str | None = None
        self._stage_base = 0

    def alloc(self, label: str, nbytes: int) -> None:
        nbytes = int(nbytes)
        self.free(label)
        self.live[label] = nbytes
        self.current += nbytes
        self.peak = max(self.peak, self.current)
        if self._stage is not None:
            self.stage_peaks[self._stage] = max(self.stage_peaks.get(self._stage, 0), self.current - self._stage_base)

    def track(self, label: str, array):
        """Register an array's buffer under ``label`` and return the array."""
        self.alloc(label, array.nbytes)
        return array

    def free(self, label: str) -> None:
        self.current -= self.live.pop(label, 0)

    @contextmanager
    def stage(self, name: str):
        """Attribute allocations made inside the block to ``name`` (net of what was live before)."""
        prev, prev_base = self._stage, self._stage_base
        self._stage, self._stage_base = name, self.current
        self.stage_peaks.setdefault(name, 0)
        try:
            yield self
        finally:
            self._stage, self._stage_base = prev, prev_base


class NullTracker(AllocationTracker):
    """Tracker that records nothing; the default when accounting is not requested."""

    def alloc(self, label, nbytes):
        pass

    def track(self, label, array):
        return array
