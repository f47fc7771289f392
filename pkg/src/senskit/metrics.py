"""Normalized projection residual of multichannel data against estimated maps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError
from .grid import ComplexImageStack, kspace_to_image


@dataclass(frozen=True)
class ResidualReport:
    value: float
    dataset: str = ""
    config: dict = field(default_factory=dict)


def projection_residual_value(images: np.ndarray, maps: np.ndarray) -> float:
    """``||rho - P rho|| / ||rho||`` with ``P(x) = c c^H / ||c||^2`` (zero where ``c`` vanishes)."""
    norm2 = np.sum(np.abs(maps) ** 2, axis=0)
    coef = np.sum(maps.conj() * images, axis=0) / np.where(norm2 > 0, norm2, 1.0)
    coef = np.where(norm2 > 0, coef, 0.0)
    resid = images - maps * coef
    total = np.linalg.norm(images)
    return float(np.linalg.norm(resid) / total) if total > 0 else 0.0


def projection_residual(data: ComplexImageStack, maps, dataset: str = "", config: dict | None = None) -> ResidualReport:
    """Residual of k-space ``data`` after projecting each voxel onto the span of ``maps``.

    ``maps`` may be a :class:`ComplexImageStack` or anything with a ``maps`` attribute.
    """
    stack = getattr(maps, "maps", maps)
    if data.dims != stack.dims or data.channels != stack.channels:
        raise DimensionMismatchError(
            f"data {data.channels}x{data.dims} and maps {stack.channels}x{stack.dims} differ")
    images = kspace_to_image(data.data) if data.domain == "kspace" else data.data
    if config is None:
        config = getattr(maps, "provenance", {}).get("config", {})
    return ResidualReport(projection_residual_value(images, stack.data), dataset, dict(config))
