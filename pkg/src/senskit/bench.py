"""Timing and memory benchmark of two pipeline configurations over calibration sizes.

Each cell (calibration size, arm) gets one discarded warm-up run followed by
``reps`` measured runs; stage times are reported as medians. Memory figures
come from the allocation tracker and are labelled as accounted, while the
hypothetical per-voxel filter field is labelled as projected.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from threadpoolctl import threadpool_info, threadpool_limits

from .grid import ComplexImageStack, extract_calibration
from .memory import AllocationTracker
from .metrics import projection_residual
from .pipeline import STAGES, PipelineConfig, estimate_maps

CSV_FIELDS = ("calib_size", "arm", "stage", "median_seconds", "peak_bytes", "residual")
MIN_REPS = 5


@dataclass
class BenchReport:
    rows: list[dict]
    cells: dict[str, dict]
    speedups: dict[str, float]
    arms: dict[str, dict]
    reps: int
    threads: int | None
    blas: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    dataset: str = ""

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
            writer.writeheader()
            writer.writerows(self.rows)

    def to_json(self) -> dict:
        return {
            "dataset": self.dataset,
            "reps": self.reps,
            "statistic": "median",
            "threads": self.threads,
            "blas": self.blas,
            "arms": self.arms,
            "cells": self.cells,
            "speedups": self.speedups,
            "failures": self.failures,
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))

    def total_median(self, calib_size: int, arm: str) -> float:
        return self.cells[_cell_key(calib_size, arm)]["total_median_seconds"]


def _cell_key(calib_size: int, arm: str) -> str:
    return f"{calib_size}/{arm}"


def _run_cell(data: ComplexImageStack, calib_size: int, cfg: PipelineConfig, reps: int) -> dict:
    calib = extract_calibration(data, calib_size)
    estimate_maps(calib, data.dims, cfg)  # warm-up, discarded
    stage_samples = {s: [] for s in STAGES}
    totals = []
    result = tracker = None
    for _ in range(reps):
        tracker = AllocationTracker()
        result = estimate_maps(calib, data.dims, cfg, tracker=tracker)
        for s in STAGES:
            stage_samples[s].append(result.stats["stage_seconds"].get(s, 0.0))
        totals.append(result.stats["total_seconds"])
    stats = result.stats
    field_peak = tracker.stage_peaks.get("field", 0)
    return {
        "stage_median_seconds": {s: statistics.median(v) for s, v in stage_samples.items()},
        "total_median_seconds": statistics.median(totals),
        "total_samples_seconds": totals,
        "residual": projection_residual(data, result).value,
        "nullspace_rank": stats["nullspace_rank"],
        "grid_dims": stats["grid_dims"],
        "memory": {
            "peak_bytes": {"value": int(tracker.peak), "source": "accounted"},
            "stage_peak_bytes": {"value": dict(tracker.stage_peaks), "source": "accounted"},
            "per_voxel_stage_bytes": {"value": int(field_peak), "source": "accounted"},
            "filter_field_bytes_estimation_grid": {"value": stats["projected_filter_field_bytes"],
                                                   "source": "projected"},
            "filter_field_bytes_full_grid": {"value": stats["projected_filter_field_bytes_full"],
                                             "source": "projected"},
        },
    }


def run_benchmark(data: ComplexImageStack, arms: Mapping[str, PipelineConfig], calib_sizes: Sequence[int],
                  reps: int = MIN_REPS, threads: int | None = None, dataset: str = "") -> BenchReport:
    """Benchmark every arm at every calibration size on k-space ``data``.

    A failing cell is recorded in ``failures`` and the sweep continues.
    Speedups are the first arm's median total time over each other arm's.
    """
    if reps < MIN_REPS:
        raise ValueError(f"at least {MIN_REPS} repetitions are required, got {reps}")
    if data.domain != "kspace":
        raise ValueError("benchmark input must be a k-space stack")
    names = list(arms)
    rows, cells, failures = [], {}, []
    with threadpool_limits(limits=threads):
        blas = [{k: lib.get(k) for k in ("internal_api", "num_threads", "version")} for lib in threadpool_info()]
        for c in calib_sizes:
            for name in names:
                try:
                    cell = _run_cell(data, int(c), arms[name], reps)
                except Exception as exc:  # recorded, the sweep goes on
                    failures.append({"calib_size": int(c), "arm": name, "error": f"{type(exc).__name__}: {exc}"})
                    continue
                cells[_cell_key(c, name)] = cell
                stage_peaks = cell["memory"]["stage_peak_bytes"]["value"]
                for s in STAGES:
                    rows.append({"calib_size": int(c), "arm": name, "stage": s,
                                 "median_seconds": cell["stage_median_seconds"][s],
                                 "peak_bytes": stage_peaks.get(s, 0), "residual": cell["residual"]})
                rows.append({"calib_size": int(c), "arm": name, "stage": "total",
                             "median_seconds": cell["total_median_seconds"],
                             "peak_bytes": cell["memory"]["peak_bytes"]["value"], "residual": cell["residual"]})

    speedups = {}
    ref = names[0]
    for c in calib_sizes:
        for other in names[1:]:
            a, b = cells.get(_cell_key(c, ref)), cells.get(_cell_key(c, other))
            if a and b and b["total_median_seconds"] > 0:
                speedups[f"{c}/{ref}/{other}"] = a["total_median_seconds"] / b["total_median_seconds"]
    return BenchReport(rows, cells, speedups, {n: arms[n].to_dict() for n in names}, reps, threads,
                       blas, failures, dataset)
