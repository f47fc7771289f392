"""FIR filter supports: rectangular and ellipsoidal index sets around the origin."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Literal

import numpy as np

Shape = Literal["rect", "ellipsoid"]


@dataclass(frozen=True)
class KernelSupport:
    """A symmetric finite index set with a fixed enumeration order.

    ``offsets`` is an ``(L, D)`` integer array in lexicographic order (first
    axis slowest). Column order of calibration matrices and of the filter
    vectors follows this order.
    """

    shape: Shape
    tau: int
    offsets: np.ndarray

    @property
    def size(self) -> int:
        return len(self.offsets)

    @property
    def ndim(self) -> int:
        return self.offsets.shape[1]

    def index_of(self, offset) -> int:
        hits = np.flatnonzero((self.offsets == np.asarray(offset)).all(axis=1))
        if not len(hits):
            raise KeyError(f"offset {tuple(offset)} not in support")
        return int(hits[0])

    def contains(self, other: "KernelSupport") -> bool:
        mine = {tuple(o) for o in self.offsets}
        return all(tuple(o) in mine for o in other.offsets)

    def __eq__(self, other):
        if not isinstance(other, KernelSupport):
            return NotImplemented
        return self.shape == other.shape and self.tau == other.tau and np.array_equal(self.offsets, other.offsets)

    __hash__ = None


def make_support(shape: Shape, tau: int, ndim: int = 2) -> KernelSupport:
    """``rect``: ``|n|_inf <= tau``; ``ellipsoid``: ``n.n <= tau**2`` (exact integer test)."""
    if tau < 0 or ndim < 1:
        raise ValueError("tau must be >= 0 and ndim >= 1")
    if shape not in ("rect", "ellipsoid"):
        raise ValueError(f"unknown kernel shape {shape!r}")
    axis = range(-tau, tau + 1)
    pts = np.array(list(itertools.product(axis, repeat=ndim)), dtype=np.int64)
    if shape == "ellipsoid":
        pts = pts[(pts * pts).sum(axis=1) <= tau * tau]
    pts.flags.writeable = False
    return KernelSupport(shape, int(tau), pts)
