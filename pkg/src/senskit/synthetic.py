"""Synthetic multichannel scenes with known coil maps and image support.

Coil maps are built directly from Fourier coefficients on ``rect(tau_gen)``
so they are exactly bandlimited, and the phantom sits inside the field of
view with a margin of at least 10% per side. Under these conditions the
calibration matrix has exact annihilating filters (cross-relations between
channel pairs) in addition to the approximate ones the limited support
provides.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import DimensionMismatchError
from .grid import ComplexImageStack, evaluate_fourier_series, image_to_kspace, voxel_grid
from .kernels import KernelSupport, make_support

PhantomKind = Literal["disk", "shepp"]

COIL_RING_RADIUS = 0.3
COIL_WIDTH = 0.25
PHANTOM_RADIUS = 0.35


@dataclass(frozen=True)
class SyntheticScene:
    true_maps: ComplexImageStack  # image domain, (Q, *dims)
    map_coeffs: np.ndarray  # (Q, |gen_support|) Fourier coefficients of the maps
    gen_support: KernelSupport
    phantom: np.ndarray  # (*dims,)
    support_mask_true: np.ndarray
    seed: int
    bandlimited: bool = True

    @property
    def channels(self) -> int:
        return self.true_maps.channels

    @property
    def dims(self) -> tuple[int, ...]:
        return self.true_maps.dims


def _coil_coefficients(Q: int, gen: KernelSupport, rng: np.random.Generator) -> np.ndarray:
    """Gaussian sensitivity bumps on a ring, truncated to ``gen``, with random phase and perturbation."""
    D = gen.ndim
    m = gen.offsets.astype(float)
    envelope = np.exp(-2.0 * np.pi ** 2 * COIL_WIDTH ** 2 * (m * m).sum(axis=1))
    start = rng.uniform(0, 2 * np.pi)
    coeffs = np.empty((Q, gen.size), dtype=np.complex128)
    for q in range(Q):
        centre = np.zeros(D)
        angle = start + 2 * np.pi * q / max(Q, 1)
        centre[0] = COIL_RING_RADIUS * np.cos(angle)
        if D > 1:
            centre[1] = COIL_RING_RADIUS * np.sin(angle)
        bump = envelope * np.exp(-2j * np.pi * (m @ centre))
        wiggle = 0.15 * envelope * (rng.standard_normal(gen.size) + 1j * rng.standard_normal(gen.size))
        coeffs[q] = np.exp(2j * np.pi * rng.uniform()) * (bump + wiggle)
    return coeffs


def _phantom(dims: Sequence[int], kind: PhantomKind) -> np.ndarray:
    coords = voxel_grid(dims)
    r2 = sum(c ** 2 for c in coords)
    if kind == "disk":
        inside = r2 < PHANTOM_RADIUS ** 2
        # soft radial roll-off plus a gentle ripple, strictly positive inside
        ripple = 1.0 + 0.1 * np.cos(2 * np.pi * 3 * coords[0])
        img = (1.0 - 0.4 * r2 / PHANTOM_RADIUS ** 2) * ripple
        return np.where(inside, img, 0.0)
    if kind == "shepp":
        img = np.zeros(tuple(dims))

        def box(lo, hi):
            sel = np.ones(tuple(dims), bool)
            for ax, c in enumerate(coords[:2]):
                sel &= (c >= lo[ax]) & (c < hi[ax])
            return sel

        img[box((-0.36, -0.3), (0.36, 0.3))] = 1.0
        img[box((-0.25, -0.2), (-0.05, 0.1))] = 0.55
        img[box((0.05, -0.15), (0.25, 0.05))] = 0.75
        img[box((-0.1, 0.15), (0.1, 0.25))] = 1.3
        return img
    raise ValueError(f"unknown phantom kind {kind!r}")


def make_scene(Q: int, dims: Sequence[int], tau_gen: int = 2, seed: int = 0,
               phantom_kind: PhantomKind = "disk", window: bool = False) -> SyntheticScene:
    """Build a seeded scene.

    With ``window=True`` the maps are multiplied by a Gaussian spatial window,
    which breaks exact bandlimitedness the way real coil maps do.
    """
    dims = tuple(int(d) for d in dims)
    rng = np.random.default_rng(seed)
    gen = make_support("rect", tau_gen, len(dims))
    coeffs = _coil_coefficients(Q, gen, rng)
    maps = evaluate_fourier_series(coeffs, gen.offsets, dims)
    if window:
        r2 = sum(c ** 2 for c in voxel_grid(dims))
        maps = maps * np.exp(-r2 / (2 * 0.3 ** 2))
    phantom = _phantom(dims, phantom_kind)
    return SyntheticScene(
        true_maps=ComplexImageStack(maps, "image"),
        map_coeffs=coeffs,
        gen_support=gen,
        phantom=phantom,
        support_mask_true=phantom != 0,
        seed=seed,
        bandlimited=not window,
    )


def forward_kspace(scene: SyntheticScene, noise_sigma: float = 0.0, seed: int | None = None) -> ComplexImageStack:
    """Centered unitary DFT of ``c_q * rho`` plus i.i.d. complex Gaussian noise.

    ``noise_sigma`` is the standard deviation of each real and imaginary part.
    """
    ksp = image_to_kspace(scene.true_maps.data * scene.phantom)
    if noise_sigma > 0:
        rng = np.random.default_rng([scene.seed if seed is None else seed, 1])
        ksp = ksp + noise_sigma * (rng.standard_normal(ksp.shape) + 1j * rng.standard_normal(ksp.shape))
    return ComplexImageStack(ksp, "kspace")


def cross_relation_filters(scene: SyntheticScene, support: KernelSupport,
                           pairs: Iterable[tuple[int, int]] | None = None) -> np.ndarray:
    """Analytic annihilators ``h[n, i] = -c_j[n]``, ``h[n, j] = c_i[n]`` for channel pairs ``(i, j)``.

    Returns ``(len(pairs), Q * |support|)`` filter vectors in calibration-column layout.
    """
    if not support.contains(scene.gen_support):
        raise DimensionMismatchError("kernel support does not contain the maps' frequency support")
    Q, L = scene.channels, support.size
    pairs = list(combinations(range(Q), 2)) if pairs is None else list(pairs)
    cols = np.array([support.index_of(o) for o in scene.gen_support.offsets])
    out = np.zeros((len(pairs), Q, L), dtype=np.complex128)
    for k, (i, j) in enumerate(pairs):
        out[k, i, cols] -= scene.map_coeffs[j]
        out[k, j, cols] += scene.map_coeffs[i]
    return out.reshape(len(pairs), Q * L)
