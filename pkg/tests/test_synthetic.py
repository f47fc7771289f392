import numpy as np
import pytest

from senskit.calibration import build_calib_matrix, compute_gram
from senskit.errors import DimensionMismatchError
from senskit.grid import CalibrationRegion, ComplexImageStack, extract_calibration, image_to_kspace, voxel_grid
from senskit.kernels import make_support
from senskit.synthetic import cross_relation_filters, forward_kspace, make_scene


def test_scene_is_deterministic():
    a, b = make_scene(4, (32, 32), seed=3), make_scene(4, (32, 32), seed=3)
    assert a.true_maps == b.true_maps
    assert np.array_equal(a.phantom, b.phantom)
    assert make_scene(4, (32, 32), seed=4).true_maps != a.true_maps


def test_tau_gen_zero_gives_constant_maps():
    scene = make_scene(1, (16, 12), tau_gen=0, seed=1)
    m = scene.true_maps.data[0]
    np.testing.assert_allclose(m, m[0, 0], atol=1e-14)


def test_map_spectra_vanish_outside_generator_support():
    scene = make_scene(4, (64, 64), tau_gen=2, seed=7)
    spec = image_to_kspace(scene.true_maps.data)
    inside = np.zeros((64, 64), bool)
    inside[30:35, 30:35] = True
    assert np.abs(spec[:, ~inside]).max() < 1e-12 * np.abs(spec).max()


@pytest.mark.parametrize("kind", ["disk", "shepp"])
def test_phantom_sits_inside_the_field_of_view(kind):
    scene = make_scene(2, (64, 48), seed=0, phantom_kind=kind)
    x0, x1 = voxel_grid((64, 48))
    on = scene.support_mask_true
    assert on.any()
    assert np.abs(np.broadcast_to(x0, on.shape)[on]).max() <= 0.4
    assert np.abs(np.broadcast_to(x1, on.shape)[on]).max() <= 0.4
    assert np.all(scene.phantom[on] > 0)


def test_windowed_scene_is_flagged():
    assert not make_scene(2, (16, 16), window=True).bandlimited


def test_parseval_noiseless():
    scene = make_scene(3, (32, 32), seed=2)
    ksp = forward_kspace(scene)
    img = scene.true_maps.data * scene.phantom
    np.testing.assert_allclose(np.sum(np.abs(ksp.data) ** 2, axis=(1, 2)), np.sum(np.abs(img) ** 2, axis=(1, 2)))


def test_unit_map_gives_phantom_spectrum():
    scene = make_scene(1, (16, 16), tau_gen=0, seed=0)
    c = scene.true_maps.data[0, 0, 0]
    ksp = forward_kspace(scene).data[0]
    np.testing.assert_allclose(ksp / c, image_to_kspace(scene.phantom[None])[0], atol=1e-12)


def test_noise_level_and_reproducibility():
    scene = make_scene(2, (64, 64), seed=5)
    clean = forward_kspace(scene).data
    noisy = forward_kspace(scene, 0.1).data
    assert np.array_equal(noisy, forward_kspace(scene, 0.1).data)
    diff = noisy - clean
    assert np.std(diff.real) == pytest.approx(0.1, rel=0.05)
    assert np.std(diff.imag) == pytest.approx(0.1, rel=0.05)


def test_constant_map_cross_relation():
    scene = make_scene(2, (32, 32), tau_gen=0, seed=1)
    sup = make_support("rect", 0)
    h = cross_relation_filters(scene, sup, [(0, 1)])[0]
    c = scene.true_maps.data[:, 0, 0]
    np.testing.assert_allclose(h, [-c[1], c[0]], atol=1e-14)
    C = build_calib_matrix(extract_calibration(forward_kspace(scene), 16), sup).entries
    assert np.linalg.norm(C @ h) / (np.linalg.norm(C) * np.linalg.norm(h)) < 1e-10


def test_cross_relation_gram_residual(small_scene):
    scene, _, calib = small_scene
    sup = make_support("rect", 3)
    G = compute_gram(calib, sup).entries
    sigma1_sq = np.linalg.eigvalsh(G)[-1]
    for h in cross_relation_filters(scene, sup):
        h = h / np.linalg.norm(h)
        assert (h.conj() @ G @ h).real < 1e-16 * sigma1_sq


def test_cross_relation_needs_big_enough_support(small_scene):
    scene, _, _ = small_scene
    with pytest.raises(DimensionMismatchError):
        cross_relation_filters(scene, make_support("rect", 1))


def test_coil_compression_filter_in_nullspace(small_scene, rng):
    scene, ksp, _ = small_scene
    w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    extra = np.tensordot(w, ksp.data, axes=1)
    stacked = ComplexImageStack(np.concatenate([ksp.data, extra[None]]))
    sup = make_support("rect", 1)
    C = build_calib_matrix(extract_calibration(stacked, 20), sup).entries
    h = np.zeros(5 * sup.size, dtype=complex)
    centre = sup.index_of((0, 0))
    h[[q * sup.size + centre for q in range(4)]] = w
    h[4 * sup.size + centre] = -1.0
    assert np.linalg.norm(C @ h) < 1e-10 * np.linalg.norm(C) * np.linalg.norm(h)
