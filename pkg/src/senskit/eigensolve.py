"""Per-voxel extremal eigenpairs of small Hermitian matrices.

Both solvers work on every voxel at once: the dense path runs cyclic complex
Jacobi sweeps vectorised over voxels, the power path runs a fixed number of
batched multiply-and-normalise steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .spatial import GramField

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 30
DEFAULT_POWER_ITERS = 10


@dataclass(frozen=True)
class EigenResult:
    vectors: np.ndarray  # (*dims, Q), unit norm
    values: np.ndarray  # (*dims,)
    second_values: np.ndarray | None
    iterations_used: int
    history: np.ndarray | None = None  # (iters, *dims) Rayleigh quotients, power path only


def _offdiag_norm2(A: np.ndarray) -> np.ndarray:
    """Squared off-diagonal Frobenius norm of a ``(Q, Q, n)`` stack."""
    total = (A.real ** 2 + A.imag ** 2).sum(axis=(0, 1))
    diag = np.einsum("iin->in", A)
    return total - (diag.real ** 2 + diag.imag ** 2).sum(axis=0)


def jacobi_eigh(A: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigendecomposition of a batch ``(n, Q, Q)`` of Hermitian matrices.

    Cyclic sweeps of complex Jacobi rotations until every matrix has
    off-diagonal Frobenius norm below ``tol * ||A||_F``. Returns ascending
    eigenvalues ``(n, Q)``, eigenvectors as columns ``(n, Q, Q)`` and the
    number of sweeps performed.
    """
    # voxel axis last so row and column slices are contiguous runs
    A = np.ascontiguousarray(np.moveaxis(np.asarray(A, dtype=np.complex128), 0, -1))
    Q, _, n = A.shape
    V = np.ascontiguousarray(np.broadcast_to(np.eye(Q, dtype=np.complex128)[:, :, None], A.shape))
    target = (tol ** 2) * (A.real ** 2 + A.imag ** 2).sum(axis=(0, 1))

    sweeps = 0
    while sweeps < max_sweeps and Q > 1:
        if np.all(_offdiag_norm2(A) <= target):
            break
        sweeps += 1
        for p in range(Q - 1):
            for q in range(p + 1, Q):
                apq = A[p, q]
                app, aqq = A[p, p].real, A[q, q].real
                mag = np.abs(apq)
                active = mag > 1e-18 * np.sqrt(np.abs(app * aqq)) + 1e-300
                if not active.any():
                    continue
                safe = np.where(active, mag, 1.0)
                phase = np.where(active, apq.conj() / safe, 1.0)  # exp(-i phi)
                theta = (aqq - app) / (2.0 * safe)
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # U = diag(1, exp(-i phi)) @ [[c, s], [-s, c]] on the (p, q) plane
                uqp, uqq = -phase * s, phase * c

                colp, colq = A[:, p].copy(), A[:, q]
                A[:, p] = colp * c + colq * uqp
                A[:, q] = colp * s + colq * uqq
                rowp, rowq = A[p].copy(), A[q]
                A[p] = rowp * c + rowq * uqp.conj()
                A[q] = rowp * s + rowq * uqq.conj()
                A[p, q] = 0.0
                A[q, p] = 0.0

                vp, vq = V[:, p].copy(), V[:, q]
                V[:, p] = vp * c + vq * uqp
                V[:, q] = vp * s + vq * uqq

    evals = np.einsum("iin->ni", A).real
    V = np.moveaxis(V, -1, 0)
    order = np.argsort(evals, axis=1, kind="stable")
    evals = np.take_along_axis(evals, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return evals, V, sweeps


def eig_dense_field(field: GramField, which: Literal["smallest", "largest"] = "smallest",
                    backend: Literal["lapack", "jacobi"] = "lapack") -> EigenResult:
    """Full per-voxel eigendecomposition, returning the requested extremal pair.

    ``second_values`` holds the runner-up eigenvalue for eigengap diagnostics.
    ``iterations_used`` is the Jacobi sweep count (0 for the LAPACK backend).
    """
    dims, Q = field.dims, field.channels
    flat = field.values.reshape(-1, Q, Q)
    if backend == "jacobi":
        evals, evecs, sweeps = jacobi_eigh(flat)
    elif backend == "lapack":
        evals, evecs = np.linalg.eigh(flat)
        sweeps = 0
    else:
        raise ValueError(f"unknown dense backend {backend!r}")
    if which == "smallest":
        idx, idx2 = 0, min(1, Q - 1)
    elif which == "largest":
        idx, idx2 = Q - 1, max(Q - 2, 0)
    else:
        raise ValueError(f"which must be 'smallest' or 'largest', not {which!r}")
    vectors = evecs[:, :, idx]
    second = evals[:, idx2] if Q > 1 else np.full(len(evals), np.nan)
    return EigenResult(
        vectors.reshape(dims + (Q,)),
        evals[:, idx].reshape(dims),
        second.reshape(dims),
        sweeps,
    )


def eig_power_field(field: GramField, iters: int = DEFAULT_POWER_ITERS, record_history: bool = False) -> EigenResult:
    """Dominant eigenpair of every voxel matrix by ``iters`` power steps.

    Meant for the ``B = I - G/|L|`` form, whose largest eigenpair is the
    smallest of ``G``. Starts from the normalised all-ones vector; a voxel
    whose first iterate vanishes restarts from ``e_1``.
    """
    dims, Q = field.dims, field.channels
    B = field.values.reshape(-1, Q, Q)
    n = B.shape[0]
    v = np.full((n, Q), 1.0 / np.sqrt(Q), dtype=np.complex128)
    history = np.empty((iters, n)) if record_history else None

    for it in range(iters):
        w = (B @ v[:, :, None])[:, :, 0]
        norm = np.linalg.norm(w, axis=1)
        if it == 0:
            dead = norm < 1e-14
            if dead.any():
                e1 = np.zeros(Q, dtype=np.complex128)
                e1[0] = 1.0
                w[dead] = (B[dead] @ e1)
                norm[dead] = np.linalg.norm(w[dead], axis=1)
        norm = np.where(norm > 0, norm, 1.0)
        v = w / norm[:, None]
        if record_history:
            history[it] = np.einsum("ni,nij,nj->n", v.conj(), B, v).real

    values = np.einsum("ni,nij,nj->n", v.conj(), B, v).real
    return EigenResult(
        v.reshape(dims + (Q,)),
        values.reshape(dims),
        None,
        iters,
        None if history is None else history.reshape((iters,) + dims),
    )


def phase_align(v: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Rotate each vector (last axis) by the unit phase that best matches ``ref``."""
    # real arithmetic keeps <v, v> exactly real, so identical inputs align exactly
    re = np.sum(v.real * ref.real + v.imag * ref.imag, axis=-1, keepdims=True)
    im = np.sum(v.real * ref.imag - v.imag * ref.real, axis=-1, keepdims=True)
    mag = np.hypot(re, im)
    safe = np.where(mag > 0, mag, 1.0)
    return v * np.where(mag > 0, re / safe + 1j * (im / safe), 1.0)


def vector_angle(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Phase-insensitive angle between vectors along the last axis."""
    def unit(a):
        n = np.linalg.norm(a, axis=-1, keepdims=True)
        return a / np.where(n > 0, n, 1.0)

    u, v = unit(u), unit(v)
    inner = np.sum(u.conj() * v, axis=-1, keepdims=True)
    perp = np.linalg.norm(v - u * inner, axis=-1)
    return np.arctan2(perp, np.abs(inner[..., 0]))
