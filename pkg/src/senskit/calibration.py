"""Multichannel convolution-structured calibration matrix and its Gram.

The calibration matrix ``C`` has one row per valid shift ``n`` and one column
per (channel ``q``, support offset ``n_i``) pair, channel-major, with entry
``s_q[n - n_i]``. A filter vector ``h`` laid out the same way satisfies
``(C h)[n] = sum_q sum_i h[n_i, q] s_q[n - n_i]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import CalibrationTooSmallError, DimensionMismatchError
from .grid import CalibrationRegion
from .kernels import KernelSupport


@dataclass(frozen=True)
class CalibMatrix:
    entries: np.ndarray  # (P, Q * |support|)
    channels: int
    support: KernelSupport

    @property
    def n_rows(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class GramMatrix:
    entries: np.ndarray  # (Q|L|, Q|L|) Hermitian
    method: Literal["explicit", "fft"]
    channels: int
    support: KernelSupport
    info: dict = field(default_factory=dict)

    def block(self, p: int, q: int) -> np.ndarray:
        L = self.support.size
        return self.entries[p * L:(p + 1) * L, q * L:(q + 1) * L]


def _check_sizes(calib: CalibrationRegion, support: KernelSupport) -> None:
    if len(calib.dims) != support.ndim:
        raise DimensionMismatchError(f"{support.ndim}-D support on {len(calib.dims)}-D calibration data")
    if any(c <= 2 * support.tau for c in calib.dims):
        raise CalibrationTooSmallError(
            f"calibration extents {calib.dims} must exceed 2*tau = {2 * support.tau} on every axis")


def valid_shift_count(calib_dims, tau: int) -> int:
    """Rows of C: shifts whose full (2 tau + 1)^D bounding box fits in the region."""
    return int(np.prod([c - 2 * tau for c in calib_dims]))


def _window_columns(support: KernelSupport) -> np.ndarray:
    """Flat index, inside a (2 tau + 1)^D window, of sample ``n - n_i`` for each offset."""
    tau = support.tau
    width = (2 * tau + 1,) * support.ndim
    return np.ravel_multi_index(tuple((tau - support.offsets).T), width)


def build_calib_matrix(calib: CalibrationRegion, support: KernelSupport) -> CalibMatrix:
    _check_sizes(calib, support)
    tau, D = support.tau, support.ndim
    width = (2 * tau + 1,) * D
    cols = _window_columns(support)
    blocks = []
    for chan in calib.data:
        win = sliding_window_view(chan, width)  # (c - 2 tau, ...) + width
        P = int(np.prod(win.shape[:D]))
        blocks.append(win.reshape(P, -1)[:, cols])
    return CalibMatrix(np.concatenate(blocks, axis=1), calib.channels, support)


def gram_explicit(C: CalibMatrix) -> GramMatrix:
    G = C.entries.conj().T @ C.entries
    G = 0.5 * (G + G.conj().T)
    return GramMatrix(G, "explicit", C.channels, C.support)


def fft_pad_shape(calib_dims, tau: int) -> tuple[int, ...]:
    """Per axis, the next power of two >= extent + 2 tau (linear correlation over all lags)."""
    return tuple(1 << int(np.ceil(np.log2(c + 2 * tau))) for c in calib_dims)


def gram_fft(calib: CalibrationRegion, support: KernelSupport) -> GramMatrix:
    """Approximate ``C^H C`` from one FFT cross-correlation per channel pair.

    ``a_pq[l] = sum_m conj(s_p[m]) s_q[m + l]`` is computed for all lags with Q
    forward and Q^2 inverse zero-padded transforms; block ``(p, q)`` entry
    ``(t, s)`` is read at lag ``n_t - n_s``. Boundary masking of the exact
    Gram is ignored, so this approximates :func:`gram_explicit`.
    """
    _check_sizes(calib, support)
    Q, L, D = calib.channels, support.size, support.ndim
    pad = fft_pad_shape(calib.dims, support.tau)
    axes = tuple(range(1, D + 1))

    spectra = np.fft.fftn(calib.data, s=pad, axes=axes)  # Q forward
    cross = spectra.conj()[:, None] * spectra[None, :]
    corr = np.fft.ifftn(cross, axes=tuple(a + 1 for a in axes))  # Q^2 inverse
    corr = corr.reshape(Q, Q, -1)

    lags = support.offsets[:, None, :] - support.offsets[None, :, :]  # (t, s) -> n_t - n_s
    lag_idx = np.ravel_multi_index(tuple(np.moveaxis(lags % np.array(pad), -1, 0)), pad)
    blocks = corr[:, :, lag_idx]  # (p, q, t, s)
    G = blocks.transpose(0, 2, 1, 3).reshape(Q * L, Q * L)
    G = 0.5 * (G + G.conj().T)
    info = {"pad_shape": list(pad), "forward_transforms": Q, "inverse_transforms": Q * Q}
    return GramMatrix(G, "fft", Q, support, info)


def compute_gram(calib: CalibrationRegion, support: KernelSupport, method: str = "explicit") -> GramMatrix:
    if method == "explicit":
        return gram_explicit(build_calib_matrix(calib, support))
    if method == "fft":
        return gram_fft(calib, support)
    raise ValueError(f"unknown gram method {method!r}")
