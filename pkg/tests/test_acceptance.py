"""Acceptance criteria A1 to A10, each checked at its stated tolerance.

Run with ``pytest tests/test_acceptance.py``; the terminal summary lists one
PASS/FAIL line per criterion.
"""

import numpy as np
import pytest

from senskit.bench import run_benchmark
from senskit.calibration import compute_gram
from senskit.eigensolve import eig_dense_field, eig_power_field, phase_align, vector_angle
from senskit.grid import ComplexImageStack, extract_calibration, kspace_to_image
from senskit.kernels import make_support
from senskit.maps import dice, normalize_maps
from senskit.metrics import projection_residual, projection_residual_value
from senskit.nullspace import extract_nullspace
from senskit.pipeline import estimate_maps, preset
from senskit.spatial import aggregate_w, filter_field_naive, gram_field_fast, gram_field_naive, to_espirit_field
from senskit.synthetic import forward_kspace, make_scene

from conftest import NOISELESS_OVERRIDES

FULL = (256, 256)


@pytest.fixture(scope="module")
def noisy256():
    """256x256, 8 channels, noise 0.01: the scene shared by A3, A5, A6, A8 and A9."""
    scene = make_scene(8, FULL, tau_gen=2, seed=7)
    return scene, forward_kspace(scene, 0.01)


@pytest.fixture(scope="module")
def noiseless128():
    scene = make_scene(8, (128, 128), tau_gen=2, seed=7)
    ksp = forward_kspace(scene)
    return scene, ksp, extract_calibration(ksp, 24)


@pytest.fixture(scope="module")
def bench_report(noisy256):
    _, ksp = noisy256
    arms = {"baseline": preset("baseline"), "pisco": preset("pisco")}
    return run_benchmark(ksp, arms, [24, 48, 96], reps=5, dataset="noisy256")


def _map_vectors(stack):
    return np.moveaxis(stack.data, 0, -1)


def test_a1_fast_gram_field_identity(acceptance):
    worst = 0.0
    rng = np.random.default_rng(2024)
    for k in range(24):
        Q = int(rng.integers(2, 5))
        tau = int(rng.integers(1, 3))
        dims = (int(rng.integers(8, 17)), int(rng.integers(8, 17)))
        shape = ("rect", "ellipsoid")[k % 2]
        scene = make_scene(Q, dims, tau_gen=1, seed=1000 + k)
        ksp = forward_kspace(scene, 0.01)
        calib = extract_calibration(ksp, min(dims))
        sup = make_support(shape, tau)
        basis = extract_nullspace(compute_gram(calib, sup), 0.05)
        naive = gram_field_naive(filter_field_naive(basis, sup, dims)).values
        fast = gram_field_fast(aggregate_w(basis), sup, dims, Q).values
        worst = max(worst, np.abs(fast - naive).max() / np.abs(naive).max())
    ok = acceptance("A1", worst < 1e-10, f"24 scenes, worst relative deviation {worst:.2e} (limit 1e-10)")
    assert ok


def test_a2_nullspace_espirit_equivalence(acceptance):
    worst = 0.0
    for seed in range(10):
        Q = (4, 6, 8)[seed % 3]
        scene = make_scene(Q, (64, 64), seed=200 + seed, phantom_kind=("disk", "shepp")[seed % 2])
        ksp = forward_kspace(scene, 0.01)
        calib = extract_calibration(ksp, 24)
        a = estimate_maps(calib, ksp.dims, preset("baseline", method="nullspace"))
        b = estimate_maps(calib, ksp.dims, preset("baseline", method="espirit"))
        va, vb = _map_vectors(a.maps), _map_vectors(b.maps)
        worst = max(worst, np.abs(phase_align(vb, va) - va).max())
    ok = acceptance("A2", worst < 1e-8, f"10 scenes, worst gauge-aligned difference {worst:.2e} (limit 1e-8)")
    assert ok


def test_a3_fft_gram_fidelity(acceptance, noisy256):
    _, ksp = noisy256
    calib = extract_calibration(ksp, 24)
    r_exp = projection_residual(ksp, estimate_maps(calib, FULL, preset("baseline", gram="explicit"))).value
    r_fft = projection_residual(ksp, estimate_maps(calib, FULL, preset("baseline", gram="fft"))).value
    diff = abs(r_exp - r_fft)
    ok = acceptance("A3", diff < 0.01, f"residual explicit {r_exp:.4f} vs fft {r_fft:.4f}, difference {diff:.4f} (limit 0.01)")
    assert ok


def test_a4_rank_structure(acceptance, noiseless128):
    scene, ksp, calib = noiseless128
    cfg = preset("baseline", **NOISELESS_OVERRIDES)
    sup = make_support(cfg.kernel, cfg.tau)
    basis = extract_nullspace(compute_gram(calib, sup, cfg.gram), cfg.nullspace_threshold)
    ev = np.linalg.eigvalsh(gram_field_fast(aggregate_w(basis), sup, ksp.dims, ksp.channels).values)
    inside = scene.support_mask_true
    frac = float(np.mean(ev[..., 0][inside] / ev[..., -1][inside] < 1e-3))
    contrast = np.median(ev[..., 0][~inside]) / np.median(ev[..., 0][inside])
    ok = acceptance("A4", frac >= 0.99 and contrast >= 10,
                    f"in-support fraction with ratio < 1e-3 = {frac:.4f} (need 0.99); "
                    f"out/in median lambda_min = {contrast:.3g} (need 10)")
    assert ok


def test_a5_power_iteration(acceptance, noisy256):
    _, ksp = noisy256
    calib = extract_calibration(ksp, 24)
    cfg = preset("baseline")
    sup = make_support(cfg.kernel, cfg.tau)
    basis = extract_nullspace(compute_gram(calib, sup), cfg.nullspace_threshold)
    B = to_espirit_field(gram_field_fast(aggregate_w(basis), sup, FULL, ksp.channels), sup.size)
    dense = eig_dense_field(B, "largest")
    power = eig_power_field(B, 10)
    gap = (dense.values - dense.second_values) / np.abs(dense.values)
    sel = gap > 0.3
    angle = vector_angle(power.vectors, dense.vectors)[sel]
    worst = float(angle.max())
    r_dense = projection_residual(ksp, estimate_maps(calib, FULL, cfg)).value
    r_power = projection_residual(ksp, estimate_maps(calib, FULL, cfg.with_(eig="power"))).value
    rdiff = abs(r_dense - r_power)
    ok = acceptance("A5", worst < 1e-3 and rdiff < 0.005,
                    f"max angle {worst:.2e} rad over {sel.sum()} voxels with gap > 0.3 (limit 1e-3), "
                    f"{np.mean(angle >= 1e-3):.1%} of them over the limit; "
                    f"residual difference {rdiff:.2e} (limit 0.005)")
    assert ok


def test_a6_reduced_grid_interpolation(acceptance, noisy256):
    _, ksp = noisy256
    calib = extract_calibration(ksp, 24)
    full = estimate_maps(calib, FULL, preset("baseline"))
    reduced = estimate_maps(calib, FULL, preset("baseline", grid="reduced", grid_pad=24))
    assert reduced.normalization["interpolated_from"] == [48, 48]
    r_full, r_red = projection_residual(ksp, full).value, projection_residual(ksp, reduced).value
    ok = acceptance("A6", abs(r_full - r_red) < 0.02,
                    f"residual full {r_full:.4f} vs 48x48 interpolated {r_red:.4f} (limit 0.02)")
    assert ok


def test_a7_noiseless_recovery(acceptance, noiseless128):
    scene, ksp, calib = noiseless128
    res = estimate_maps(calib, ksp.dims, preset("baseline", **NOISELESS_OVERRIDES))
    inside = scene.support_mask_true
    resid = projection_residual(ksp, res).value
    angle = vector_angle(_map_vectors(res.maps), _map_vectors(scene.true_maps))[inside].max()
    d = dice(res.support_mask, inside)
    ok = acceptance("A7", resid < 1e-3 and angle < 1e-2 and d > 0.95,
                    f"residual {resid:.2e} (limit 1e-3), max in-support angle {angle:.2e} rad (limit 1e-2), "
                    f"Dice {d:.4f} (limit 0.95)")
    assert ok


def test_a8_speedup(acceptance, bench_report):
    sizes = [24, 48, 96]
    base = [bench_report.total_median(c, "baseline") for c in sizes]
    fast = [bench_report.total_median(c, "pisco") for c in sizes]
    ratios = [b / f for b, f in zip(base, fast)]
    faster = all(f < b for b, f in zip(base, fast))
    monotone = all(r2 > r1 for r1, r2 in zip(ratios, ratios[1:]))
    ok = acceptance("A8", faster and ratios[-1] > 3 and monotone,
                    "speedups " + ", ".join(f"{c}: {r:.1f}x" for c, r in zip(sizes, ratios))
                    + f"; faster everywhere={faster}, >3x at 96={ratios[-1] > 3}, monotone={monotone}")
    assert ok


def test_a9_memory(acceptance, bench_report):
    worst = np.inf
    for key, cell in bench_report.cells.items():
        accounted = cell["memory"]["per_voxel_stage_bytes"]["value"]
        projected = cell["memory"]["filter_field_bytes_estimation_grid"]["value"]
        worst = min(worst, projected / accounted)
    ok = acceptance("A9", worst >= 10, f"smallest projected/accounted per-voxel memory ratio {worst:.1f} (need 10)")
    assert ok


def test_a10_gauge_invariance(acceptance, noisy256):
    _, ksp = noisy256
    calib = extract_calibration(ksp, 24)
    sup = make_support("rect", 3)
    basis = extract_nullspace(compute_gram(calib, sup), 0.05)
    G = gram_field_fast(aggregate_w(basis), sup, FULL, ksp.channels)
    raw = np.moveaxis(eig_dense_field(G, "smallest").vectors, -1, 0)
    phase = np.exp(1j * np.random.default_rng(99).uniform(0, 2 * np.pi, FULL))
    a, _ = normalize_maps(ComplexImageStack(raw, "image"), calib)
    b, _ = normalize_maps(ComplexImageStack(raw * phase, "image"), calib)
    change = np.abs(a.data - b.data).max()
    images = kspace_to_image(ksp.data)
    rdiff = abs(projection_residual_value(images, a.data) - projection_residual_value(images, b.data))
    ok = acceptance("A10", change < 1e-10 and rdiff < 1e-12,
                    f"max map change {change:.2e} (limit 1e-10), residual change {rdiff:.2e} (limit 1e-12)")
    assert ok
