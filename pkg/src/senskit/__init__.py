"""Multichannel coil sensitivity estimation by the calibration nullspace method, with fast paths."""

from .bench import BenchReport, run_benchmark
from .calibration import CalibMatrix, GramMatrix, build_calib_matrix, compute_gram, gram_explicit, gram_fft
from .eigensolve import EigenResult, eig_dense_field, eig_power_field, jacobi_eigh
from .errors import (
    CalibrationTooSmallError,
    DimensionMismatchError,
    MemoryCapError,
    NullspaceError,
    SenskitError,
    StackFormatError,
)
from .grid import CalibrationRegion, ComplexImageStack, extract_calibration
from .io import load_stack, save_stack
from .kernels import KernelSupport, make_support
from .metrics import ResidualReport, projection_residual
from .nullspace import NullspaceBasis, extract_nullspace
from .pipeline import PRESETS, PipelineConfig, SensitivityResult, estimate_maps, preset
from .spatial import FilterField, GramField, aggregate_w, gram_field_fast, gram_field_naive, filter_field_naive
from .synthetic import SyntheticScene, cross_relation_filters, forward_kspace, make_scene

__all__ = [name for name in dir() if not name.startswith("_")]
