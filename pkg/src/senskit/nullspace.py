"""Approximate nullspace of the calibration matrix from its Gram."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import GramMatrix
from .errors import NullspaceError
from .kernels import KernelSupport

DEFAULT_THRESHOLD = 0.05


@dataclass(frozen=True)
class NullspaceBasis:
    """Orthonormal filters (columns of ``filters``) spanning the approximate nullspace.

    ``spectrum`` holds every singular value of C in descending order.
    """

    filters: np.ndarray  # (Q|L|, R)
    spectrum: np.ndarray
    threshold_ratio: float
    channels: int
    support: KernelSupport

    @property
    def rank(self) -> int:
        return self.filters.shape[1]

    def filter_planes(self) -> np.ndarray:
        """Filters reshaped to ``(R, Q, |L|)``: ``[r, q, i] = h_r[n_i, q]``."""
        return self.filters.T.reshape(self.rank, self.channels, self.support.size)


def extract_nullspace(G: GramMatrix, threshold_ratio: float = DEFAULT_THRESHOLD) -> NullspaceBasis:
    """Keep right singular vectors of C with ``sigma_n < threshold_ratio * sigma_1``."""
    if not 0.0 < threshold_ratio < 1.0:
        raise ValueError("threshold_ratio must lie in (0, 1)")
    evals, evecs = np.linalg.eigh(G.entries)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    sigma = np.sqrt(np.clip(evals, 0.0, None))
    keep = sigma < threshold_ratio * sigma[0]
    if not keep.any():
        raise NullspaceError(
            f"no singular value below {threshold_ratio} * sigma_1; the calibration data show no nullspace")
    return NullspaceBasis(evecs[:, keep], sigma, float(threshold_ratio), G.channels, G.support)


def singular_spectrum_report(basis: NullspaceBasis) -> np.ndarray:
    return basis.spectrum / basis.spectrum[0]


def spectrum_csv(spectrum: NullspaceBasis | np.ndarray) -> str:
    """CSV text ``index,sigma_normalized`` from a basis or a raw descending spectrum."""
    s = np.asarray(getattr(spectrum, "spectrum", spectrum), dtype=float)
    s = s / s[0] if s.size and s[0] > 0 else s
    rows = ["index,sigma_normalized"]
    rows += [f"{i + 1},{v:.17g}" for i, v in enumerate(s)]
    return "\n".join(rows) + "\n"
