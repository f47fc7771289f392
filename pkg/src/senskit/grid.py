"""Gridded multichannel data and the coordinate conventions shared by every module.

Conventions
-----------
* The field of view is the unit hypercube ``{x : |x|_inf < 1/2}``.
* On an axis with ``n`` voxels, voxel ``j`` sits at ``x_j = (j - n // 2) / n``, so
  voxel 0 lies on the ``-1/2`` boundary side and the origin is at index ``n // 2``.
* k-space index ``k`` on an axis of extent ``n`` holds frequency ``k - n // 2``.
  Centered extraction and centered zero-padding therefore commute.
* Image-domain series use ``exp(+i 2 pi n.x)`` (see :data:`FOURIER_SIGN`); the
  centered DFT between the domains is unitary (``norm="ortho"``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import DimensionMismatchError

# Sign of the exponent in h(x) = sum_n h[n] exp(FOURIER_SIGN * i 2 pi n.x).
FOURIER_SIGN = +1

Domain = Literal["image", "kspace"]


@dataclass(frozen=True)
class ComplexImageStack:
    """Q channels of complex samples on a D-dimensional rectilinear grid.

    ``data`` has shape ``(Q, *dims)``, channel-major and row-major within a
    channel. It is stored read-only.
    """

    data: np.ndarray
    domain: Domain = "kspace"

    def __post_init__(self):
        data = np.array(self.data, dtype=np.complex128)
        if data.ndim < 2:
            raise DimensionMismatchError("stack data needs a channel axis and >= 1 spatial axis")
        if any(d < 1 for d in data.shape):
            raise DimensionMismatchError(f"all extents must be >= 1, got {data.shape}")
        if self.domain not in ("image", "kspace"):
            raise ValueError(f"unknown domain tag {self.domain!r}")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.data.shape[1:])

    @property
    def n_voxels(self) -> int:
        return int(np.prod(self.dims))

    def __eq__(self, other):
        if not isinstance(other, ComplexImageStack):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None


@dataclass(frozen=True)
class CalibrationRegion:
    """Centered block of Nyquist-rate k-space samples.

    ``center_offset`` is the per-axis index of the k-space origin inside the region.
    """

    grid: ComplexImageStack
    center_offset: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.grid.domain != "kspace":
            raise ValueError("calibration data must be in k-space")
        offset = tuple(self.center_offset) or tuple(d // 2 for d in self.grid.dims)
        if len(offset) != len(self.grid.dims):
            raise DimensionMismatchError("center_offset has the wrong number of axes")
        if any(not 0 <= o < d for o, d in zip(offset, self.grid.dims)):
            raise DimensionMismatchError(f"k-space origin {offset} outside region {self.grid.dims}")
        object.__setattr__(self, "center_offset", offset)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.grid.dims

    @property
    def channels(self) -> int:
        return self.grid.channels

    @property
    def data(self) -> np.ndarray:
        return self.grid.data


def voxel_coords(n: int) -> np.ndarray:
    """Continuous FOV coordinates of the ``n`` voxels on one axis."""
    return (np.arange(n) - n // 2) / n


def voxel_grid(dims: Sequence[int]) -> list[np.ndarray]:
    """Broadcastable coordinate arrays (``indexing="ij"``) for a voxel grid."""
    return np.meshgrid(*[voxel_coords(n) for n in dims], indexing="ij", sparse=True)


def _spatial_axes(ndim: int, n_spatial: int) -> tuple[int, ...]:
    return tuple(range(ndim - n_spatial, ndim))


def image_to_kspace(img: np.ndarray, n_spatial: int | None = None) -> np.ndarray:
    """Centered unitary DFT over the trailing ``n_spatial`` axes."""
    img = np.asarray(img)
    axes = _spatial_axes(img.ndim, img.ndim - 1 if n_spatial is None else n_spatial)
    shifted = np.fft.ifftshift(img, axes=axes)
    return np.fft.fftshift(np.fft.fftn(shifted, axes=axes, norm="ortho"), axes=axes)


def kspace_to_image(ksp: np.ndarray, n_spatial: int | None = None) -> np.ndarray:
    """Inverse of :func:`image_to_kspace`."""
    ksp = np.asarray(ksp)
    axes = _spatial_axes(ksp.ndim, ksp.ndim - 1 if n_spatial is None else n_spatial)
    shifted = np.fft.ifftshift(ksp, axes=axes)
    return np.fft.fftshift(np.fft.ifftn(shifted, axes=axes, norm="ortho"), axes=axes)


def _centered_slices(small: Sequence[int], large: Sequence[int]) -> tuple[slice, ...]:
    return tuple(slice(L // 2 - s // 2, L // 2 - s // 2 + s) for s, L in zip(small, large))


def crop_centered(arr: np.ndarray, size: Sequence[int]) -> np.ndarray:
    """Centered crop of the trailing ``len(size)`` axes."""
    size = tuple(int(s) for s in size)
    spatial = arr.shape[arr.ndim - len(size):]
    if any(s > L for s, L in zip(size, spatial)):
        raise DimensionMismatchError(f"crop size {size} exceeds extents {spatial}")
    lead = (slice(None),) * (arr.ndim - len(size))
    return arr[lead + _centered_slices(size, spatial)]


def zero_pad_centered(arr: np.ndarray, size: Sequence[int]) -> np.ndarray:
    """Centered zero-padding of the trailing ``len(size)`` axes (inverse of the crop)."""
    size = tuple(int(s) for s in size)
    spatial = arr.shape[arr.ndim - len(size):]
    if any(s < L for s, L in zip(size, spatial)):
        raise DimensionMismatchError(f"pad size {size} smaller than extents {spatial}")
    out = np.zeros(arr.shape[: arr.ndim - len(size)] + size, dtype=np.result_type(arr, np.complex128))
    lead = (slice(None),) * (arr.ndim - len(size))
    out[lead + _centered_slices(spatial, size)] = arr
    return out


def extract_calibration(stack: ComplexImageStack, size: Sequence[int] | int) -> CalibrationRegion:
    """Central ``size`` block of a k-space stack (a scalar size applies to every axis)."""
    if stack.domain != "kspace":
        raise ValueError("extract_calibration expects a k-space stack")
    size = tuple(int(s) for s in np.broadcast_to(size, (len(stack.dims),)))
    if len(size) != len(stack.dims):
        raise DimensionMismatchError(f"size {size} does not match {len(stack.dims)} axes")
    if any(s < 1 or s > d for s, d in zip(size, stack.dims)):
        raise DimensionMismatchError(f"calibration size {size} exceeds stack dims {stack.dims}")
    block = crop_centered(stack.data, size)
    return CalibrationRegion(ComplexImageStack(block, "kspace"), tuple(s // 2 for s in size))


def evaluate_fourier_series(coeffs: np.ndarray, offsets: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Evaluate ``sum_l coeffs[..., l] exp(i 2 pi offsets[l].x)`` at every voxel of ``dims``.

    Offsets are folded modulo the grid extent (exact, since the voxel
    exponentials are periodic in the offset), then one inverse FFT per leading
    index evaluates the sum on the whole grid.
    """
    coeffs = np.asarray(coeffs)
    offsets = np.asarray(offsets, dtype=np.int64).reshape(-1, len(dims))
    dims = tuple(int(d) for d in dims)
    lead = coeffs.shape[:-1]
    flat = coeffs.reshape(-1, coeffs.shape[-1])
    centers = np.array([d // 2 for d in dims])
    pos = (offsets * FOURIER_SIGN + centers) % np.array(dims)
    lin = np.ravel_multi_index(tuple(pos.T), dims)
    n_total = int(np.prod(dims))

    spec = np.zeros((flat.shape[0], n_total), dtype=np.complex128)
    if len(np.unique(lin)) == len(lin):
        spec[:, lin] = flat
    else:
        for col, idx in enumerate(lin):
            spec[:, idx] += flat[:, col]
    spec = spec.reshape((flat.shape[0],) + dims)
    axes = tuple(range(1, len(dims) + 1))
    out = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(spec, axes=axes), axes=axes), axes=axes)
    return (out * n_total).reshape(lead + dims)
