"""End-to-end sensitivity map estimation with selectable accelerations."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Literal, Sequence

import numpy as np

from .calibration import compute_gram
from .eigensolve import DEFAULT_POWER_ITERS, eig_dense_field, eig_power_field
from .grid import CalibrationRegion, ComplexImageStack
from .kernels import make_support
from .maps import REDUCED_GRID_PAD, interpolate_maps, normalize_maps, reduced_grid_dims, support_mask
from .memory import AllocationTracker, NullTracker
from .nullspace import DEFAULT_THRESHOLD, extract_nullspace
from .spatial import (
    DEFAULT_FIELD_CAP,
    aggregate_w,
    filter_field_naive,
    gram_field_fast,
    gram_field_naive,
    projected_filter_field_bytes,
    to_espirit_field,
)

STAGES = ("gram", "nullspace", "field", "eig", "normalize", "interpolate", "mask")


@dataclass(frozen=True)
class PipelineConfig:
    kernel: Literal["rect", "ellipsoid"] = "rect"
    tau: int = 3
    gram: Literal["explicit", "fft"] = "explicit"
    nullspace_threshold: float = DEFAULT_THRESHOLD
    grid: Literal["full", "reduced"] = "full"
    grid_pad: int = REDUCED_GRID_PAD
    field: Literal["naive", "fast"] = "fast"
    eig: Literal["dense", "power"] = "dense"
    power_iters: int = DEFAULT_POWER_ITERS
    method: Literal["nullspace", "espirit"] = "nullspace"
    mask_threshold: float = 0.05
    apod_width: float | None = None
    dense_backend: Literal["lapack", "jacobi"] = "lapack"
    field_cap: int = DEFAULT_FIELD_CAP

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    def with_(self, **changes) -> "PipelineConfig":
        return replace(self, **changes)


PRESETS = {
    "baseline": PipelineConfig(kernel="rect", gram="explicit", grid="full", eig="dense"),
    "pisco": PipelineConfig(kernel="ellipsoid", gram="fft", grid="reduced", eig="power"),
}


def preset(name: str, **overrides) -> PipelineConfig:
    return replace(PRESETS[name], **overrides)


@dataclass(frozen=True)
class SensitivityResult:
    maps: ComplexImageStack
    lambda_min_map: np.ndarray
    support_mask: np.ndarray
    normalization: dict
    provenance: dict
    stats: dict = field(default_factory=dict)


class _StageClock:
    def __init__(self):
        self.seconds = {}

    @contextmanager
    def __call__(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[name] = self.seconds.get(name, 0.0) + time.perf_counter() - t0


def _estimate_on_grid(calib: CalibrationRegion, grid_dims, cfg: PipelineConfig, tracker, clock):
    """Stages up to the raw (unnormalised) maps and lambda surrogate on ``grid_dims``."""
    support = make_support(cfg.kernel, cfg.tau, len(calib.dims))
    L, Q = support.size, calib.channels

    with clock("gram"), tracker.stage("gram"):
        gram = compute_gram(calib, support, cfg.gram)
        tracker.track("calib_gram", gram.entries)
    with clock("nullspace"), tracker.stage("nullspace"):
        basis = extract_nullspace(gram, cfg.nullspace_threshold)
    tracker.free("calib_gram")

    with clock("field"), tracker.stage("field"):
        if cfg.field == "fast":
            G = gram_field_fast(aggregate_w(basis), support, grid_dims, Q, tracker=tracker)
        elif cfg.field == "naive":
            hfield = filter_field_naive(basis, support, grid_dims, max_values=cfg.field_cap)
            tracker.track("filter_field", hfield.values)
            G = gram_field_naive(hfield)
            tracker.track("gram_field", G.values)
            del hfield
            tracker.free("filter_field")
        else:
            raise ValueError(f"unknown field path {cfg.field!r}")

    with clock("eig"), tracker.stage("eig"):
        if cfg.eig == "power":
            B = to_espirit_field(G, L)
            tracker.track("espirit_field", B.values)
            res = eig_power_field(B, cfg.power_iters)
            lam = 1.0 - res.values
        elif cfg.eig == "dense" and cfg.method == "espirit":
            B = to_espirit_field(G, L)
            tracker.track("espirit_field", B.values)
            res = eig_dense_field(B, "largest", cfg.dense_backend)
            lam = 1.0 - res.values
        elif cfg.eig == "dense" and cfg.method == "nullspace":
            res = eig_dense_field(G, "smallest", cfg.dense_backend)
            lam = res.values / L
        else:
            raise ValueError(f"unsupported eig/method combination {cfg.eig}/{cfg.method}")
        tracker.track("eig_vectors", res.vectors)
    tracker.free("gram_field")
    tracker.free("espirit_field")

    raw = ComplexImageStack(np.moveaxis(res.vectors, -1, 0), "image")
    stats = {
        "support_size": L,
        "nullspace_rank": basis.rank,
        "grid_dims": list(grid_dims),
        "spectrum": basis.spectrum,
        "gram_info": gram.info,
    }
    return raw, lam, stats


def estimate_maps(calib: CalibrationRegion, full_dims: Sequence[int], cfg: PipelineConfig = PRESETS["baseline"],
                  tracker: AllocationTracker | None = None) -> SensitivityResult:
    """Estimate normalised coil maps on ``full_dims`` from calibration data.

    support -> Gram -> nullspace -> G(x) on the full or reduced grid -> extremal
    eigenvectors -> SOS + phase normalisation -> (reduced grid) sinc
    interpolation -> support mask. Raises :class:`NullspaceError` when the
    calibration Gram has no nullspace.
    """
    tracker = tracker or NullTracker()
    clock = _StageClock()
    full_dims = tuple(int(d) for d in full_dims)
    grid_dims = full_dims if cfg.grid == "full" else reduced_grid_dims(calib.dims, cfg.grid_pad, full_dims)

    raw, lam, stats = _estimate_on_grid(calib, grid_dims, cfg, tracker, clock)

    with clock("normalize"):
        maps, record = normalize_maps(raw, calib, cfg.apod_width)
    with clock("interpolate"):
        if grid_dims != full_dims:
            maps = interpolate_maps(maps, full_dims)
            lam = interpolate_maps(ComplexImageStack(lam[None], "image"), full_dims).data[0].real
            sos = np.sqrt(np.sum(np.abs(maps.data) ** 2, axis=0))
            maps = ComplexImageStack(maps.data / np.where(sos > 0, sos, 1.0), "image")
            record["interpolated_from"] = list(grid_dims)
    with clock("mask"):
        mask = support_mask(lam, cfg.mask_threshold)

    n_full = int(np.prod(full_dims))
    stats.update(
        stage_seconds=dict(clock.seconds),
        total_seconds=float(sum(clock.seconds.values())),
        peak_bytes=int(tracker.peak),
        stage_peak_bytes=dict(tracker.stage_peaks),
        projected_filter_field_bytes=projected_filter_field_bytes(stats["nullspace_rank"], calib.channels,
                                                                  int(np.prod(grid_dims))),
        projected_filter_field_bytes_full=projected_filter_field_bytes(stats["nullspace_rank"], calib.channels,
                                                                       n_full),
    )
    provenance = {
        "config": cfg.to_dict(),
        "calib_dims": list(calib.dims),
        "full_dims": list(full_dims),
        "channels": calib.channels,
    }
    return SensitivityResult(maps, lam, mask, record, provenance, stats)
