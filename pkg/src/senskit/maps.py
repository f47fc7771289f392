"""Map post-processing: normalisation, sinc interpolation and support masking."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError
from .grid import (
    CalibrationRegion,
    ComplexImageStack,
    crop_centered,
    image_to_kspace,
    kspace_to_image,
    zero_pad_centered,
)

REDUCED_GRID_PAD = 24


def reduced_grid_dims(calib_dims: Sequence[int], pad: int = REDUCED_GRID_PAD,
                      full_dims: Sequence[int] | None = None) -> tuple[int, ...]:
    """Low-resolution estimation grid: calibration extent plus ``pad``, clamped to the full grid."""
    dims = [int(c) + int(pad) for c in calib_dims]
    if full_dims is not None:
        dims = [min(d, int(f)) for d, f in zip(dims, full_dims)]
    return tuple(dims)


def default_apodization(calib_dims: Sequence[int]) -> tuple[float, ...]:
    return tuple(c / 4.0 for c in calib_dims)


def apodized_calibration_image(calib: CalibrationRegion, dims: Sequence[int],
                               apod_width: Sequence[float] | float | None = None) -> np.ndarray:
    """Per-channel low-resolution image from Gaussian-weighted, zero-filled calibration data.

    ``apod_width`` is the Gaussian standard deviation in k-space index units
    (per axis or scalar); ``None`` means a quarter of the calibration extent.
    On even axes the lowest-frequency sample has no mirror partner and is
    dropped, so the reference of a real-valued object stays real.
    """
    D = len(calib.dims)
    if apod_width is None:
        sigma = default_apodization(calib.dims)
    else:
        sigma = tuple(np.broadcast_to(np.asarray(apod_width, dtype=float), (D,)))
    weight = np.ones(calib.dims)
    for ax, (c, sg) in enumerate(zip(calib.dims, sigma)):
        k = np.arange(c) - c // 2
        shape = [1] * D
        shape[ax] = c
        w = np.exp(-0.5 * (k / sg) ** 2)
        if c % 2 == 0:
            w[0] = 0.0  # unpaired -c/2 sample would make the reference of a real image complex
        weight = weight * w.reshape(shape)
    ksp = calib.data * weight
    dims = tuple(int(d) for d in dims)
    ksp = crop_centered(ksp, tuple(min(c, d) for c, d in zip(calib.dims, dims)))
    return kspace_to_image(zero_pad_centered(ksp, dims))


def normalize_maps(raw: ComplexImageStack, calib: CalibrationRegion,
                   apod_width: Sequence[float] | float | None = None):
    """Sum-of-squares magnitude normalisation plus phase referencing.

    Maps are divided by their root-sum-of-squares, then rotated per voxel so
    that coil-combining the apodised calibration image with them,
    ``sum_q conj(c_q) rho_q``, is real and non-negative. Returns the
    normalised stack and a record of what was applied.
    """
    c = raw.data
    sos = np.sqrt(np.sum(np.abs(c) ** 2, axis=0))
    zero_mag = sos == 0
    c = np.where(zero_mag, 0.0, c / np.where(zero_mag, 1.0, sos))

    rho = apodized_calibration_image(calib, raw.dims, apod_width)
    combined = np.sum(c.conj() * rho, axis=0)
    mag = np.abs(combined)
    no_ref = (mag == 0) & ~zero_mag
    phase = np.where(mag > 0, combined / np.where(mag > 0, mag, 1.0), 1.0)
    c = c * phase

    sigma = default_apodization(calib.dims) if apod_width is None else apod_width
    record = {
        "convention": "sos+phase-reference",
        "apodization_sigma": np.broadcast_to(np.asarray(sigma, dtype=float), (len(calib.dims),)).tolist(),
        "zero_magnitude_voxels": int(zero_mag.sum()),
        "unreferenced_voxels": int(no_ref.sum()),
    }
    return ComplexImageStack(c, "image"), record


def interpolate_maps(lowres: ComplexImageStack, full_dims: Sequence[int]) -> ComplexImageStack:
    """Periodic sinc interpolation by centered zero-padding of each channel's spectrum."""
    full_dims = tuple(int(d) for d in full_dims)
    low_dims = lowres.dims
    if len(full_dims) != len(low_dims):
        raise DimensionMismatchError("interpolation target has the wrong number of axes")
    if any(f < l for f, l in zip(full_dims, low_dims)):
        raise DimensionMismatchError(f"target {full_dims} smaller than input {low_dims}")
    if full_dims == low_dims:
        return lowres
    D = len(full_dims)
    spec = image_to_kspace(lowres.data, D)
    grow = [ax for ax, (f, l) in enumerate(zip(full_dims, low_dims)) if f > l]
    # even axes that grow get their Nyquist bin split; the padded extent absorbs the extra sample
    for ax in grow:
        n = spec.shape[ax + 1]
        if n % 2 == 0:
            first = np.take(spec, [0], axis=ax + 1)
            spec = np.concatenate([0.5 * first, np.take(spec, range(1, n), axis=ax + 1), 0.5 * first], axis=ax + 1)
    padded = _pad_to(spec, full_dims)
    scale = np.sqrt(np.prod(full_dims) / np.prod(low_dims))
    return ComplexImageStack(kspace_to_image(padded, D) * scale, lowres.domain)


def _pad_to(spec: np.ndarray, full_dims: Sequence[int]) -> np.ndarray:
    """Centered zero-pad where a Nyquist-split axis of odd length 2m+1 came from even length 2m."""
    out = np.zeros(spec.shape[:1] + tuple(full_dims), dtype=np.complex128)
    index = [slice(None)]
    for n, f in zip(spec.shape[1:], full_dims):
        # the odd-length split spectrum spans frequencies -m..m and is centred on f // 2
        start = f // 2 - n // 2
        index.append(slice(start, start + n))
    out[tuple(index)] = spec
    return out


def support_mask(lambda_min_map: np.ndarray, mask_threshold: float) -> np.ndarray:
    return np.asarray(lambda_min_map) < mask_threshold


def dice(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a, bool), np.asarray(b, bool)
    denom = a.sum() + b.sum()
    return 1.0 if denom == 0 else float(2.0 * np.logical_and(a, b).sum() / denom)
