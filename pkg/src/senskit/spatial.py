"""Per-voxel Q x Q matrices built from the nullspace filters.

``G(x) = H(x)^H H(x)`` where row ``r`` of ``H(x)`` is the image-domain filter
``h_r(x, q) = sum_n h_r[n, q] exp(i 2 pi n.x)``. The naive route forms every
``h_r(x, q)``; the fast route folds ``W = sum_r h_r h_r^H`` into a lag-domain
kernel per channel pair and evaluates it with one inverse FFT per pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import MemoryCapError
from .grid import evaluate_fourier_series
from .kernels import KernelSupport
from .memory import AllocationTracker, NullTracker
from .nullspace import NullspaceBasis

# R * Q * N complex values; 2**26 values is 1 GiB.
DEFAULT_FIELD_CAP = 2 ** 26


@dataclass(frozen=True)
class FilterField:
    values: np.ndarray  # (R, Q, *dims)
    support_size: int = 1

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.values.shape[2:])


@dataclass(frozen=True)
class GramField:
    """Per-voxel Hermitian matrices, ``values`` shaped ``(*dims, Q, Q)``.

    ``kind`` is ``"G"`` for ``H^H H`` and ``"B"`` for ``I - G / support_size``.
    """

    values: np.ndarray
    kind: Literal["G", "B"] = "G"
    support_size: int = 1

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.values.shape[:-2])

    @property
    def channels(self) -> int:
        return self.values.shape[-1]


def projected_filter_field_bytes(rank: int, channels: int, n_voxels: int) -> int:
    """Bytes needed to hold every ``h_r(x, q)`` at complex128."""
    return int(rank) * int(channels) * int(n_voxels) * 16


def filter_field_naive(basis: NullspaceBasis, support: KernelSupport, dims: Sequence[int],
                       max_values: int = DEFAULT_FIELD_CAP) -> FilterField:
    dims = tuple(int(d) for d in dims)
    count = basis.rank * basis.channels * int(np.prod(dims))
    if count > max_values:
        raise MemoryCapError(
            f"filter field needs {count} complex values ({projected_filter_field_bytes(basis.rank, basis.channels, np.prod(dims))} bytes),"
            f" above the cap of {max_values}")
    values = evaluate_fourier_series(basis.filter_planes(), support.offsets, dims)
    return FilterField(values, support.size)


def gram_field_naive(field: FilterField) -> GramField:
    """``[G(x)]_pq = sum_r conj(h_r(x, p)) h_r(x, q)``."""
    h = field.values
    Q = h.shape[1]
    if h.shape[0] == 0:
        return GramField(np.zeros(field.dims + (Q, Q), dtype=np.complex128), support_size=field.support_size)
    G = np.einsum("rp...,rq...->...pq", h.conj(), h)
    return GramField(G, support_size=field.support_size)


def aggregate_w(basis: NullspaceBasis) -> np.ndarray:
    """``W = sum_r h_r h_r^H``, a Hermitian ``(Q|L|, Q|L|)`` matrix with Q x Q blocks."""
    F = basis.filters
    W = F @ F.conj().T
    return 0.5 * (W + W.conj().T)


def _lag_folding(support: KernelSupport):
    """Sort order and segment starts that sum ``(s, t)`` entries sharing ``n_s - n_t``."""
    offs = support.offsets
    lags = (offs[:, None, :] - offs[None, :, :]).reshape(-1, support.ndim)
    span = 4 * support.tau + 1
    key = np.ravel_multi_index(tuple((lags + 2 * support.tau).T), (span,) * support.ndim)
    order = np.argsort(key, kind="stable")
    uniq, starts = np.unique(key[order], return_index=True)
    lag_offsets = np.stack(np.unravel_index(uniq, (span,) * support.ndim), axis=1) - 2 * support.tau
    return order, starts, lag_offsets


def fold_lag_kernels(W: np.ndarray, support: KernelSupport, channels: int):
    """Lag-domain kernels ``K[p, q, l] = sum_{n_s - n_t = lag_l} [W_qp]_st``.

    Pure additions; returns ``(K, lag_offsets)``.
    """
    Q, L = channels, support.size
    W4 = W.reshape(Q, L, Q, L)  # [q, s, p, t]
    flat = W4.transpose(2, 0, 1, 3).reshape(Q, Q, L * L)  # [p, q, s*L + t]
    order, starts, lag_offsets = _lag_folding(support)
    K = np.add.reduceat(flat[:, :, order], starts, axis=2)
    return K, lag_offsets


def gram_field_fast(W: np.ndarray, support: KernelSupport, dims: Sequence[int], channels: int | None = None,
                    tracker: AllocationTracker | None = None) -> GramField:
    """Evaluate ``G(x)`` on a voxel grid via the folded-lag kernels of ``W``.

    Only blocks with ``p <= q`` are transformed; the rest are conjugate mirrors.
    """
    tracker = tracker or NullTracker()
    dims = tuple(int(d) for d in dims)
    Q = channels if channels is not None else W.shape[0] // support.size
    K, lag_offsets = fold_lag_kernels(W, support, Q)

    G = tracker.track("gram_field", np.empty(dims + (Q, Q), dtype=np.complex128))
    for p in range(Q):
        for q in range(p, Q):
            plane = tracker.track("gram_field_plane", evaluate_fourier_series(K[p, q], lag_offsets, dims))
            if p == q:
                G[..., p, p] = plane.real
            else:
                G[..., p, q] = plane
                G[..., q, p] = plane.conj()
            tracker.free("gram_field_plane")
    return GramField(G, support_size=support.size)


def multiplication_counts(channels: int, support_size: int, rank: int, n_voxels: int) -> dict:
    """Complex multiplications of the direct and FFT-based G(x) evaluations."""
    Q, L, R, N = channels, support_size, rank, n_voxels
    return {
        "naive": Q * Q * L * L * (R + 1) * N,
        "fast": int(Q * Q * (N * np.log2(max(N, 2)) + L * L * R)),
    }


def to_espirit_field(G: GramField, support_size: int) -> GramField:
    """``B(x) = I - G(x) / |support|``."""
    eye = np.eye(G.channels)
    return GramField(eye - G.values / support_size, kind="B", support_size=support_size)
