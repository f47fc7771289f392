import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from senskit.errors import DimensionMismatchError
from senskit.grid import ComplexImageStack, evaluate_fourier_series
from senskit.kernels import make_support
from senskit.maps import (
    apodized_calibration_image,
    default_apodization,
    dice,
    interpolate_maps,
    normalize_maps,
    reduced_grid_dims,
    support_mask,
)

from conftest import random_stack_data


@pytest.mark.parametrize("calib,pad,full,expected", [
    ((24, 24), 24, (256, 256), (48, 48)),
    ((240, 240), 24, (256, 256), (256, 256)),
    ((24, 30), 0, (256, 256), (24, 30)),
])
def test_reduced_grid_dims(calib, pad, full, expected):
    assert reduced_grid_dims(calib, pad, full) == expected


def test_default_apodization_is_quarter_extent():
    assert default_apodization((24, 32)) == (6.0, 8.0)


def test_normalization_fixed_point(small_scene):
    _, _, calib = small_scene
    rho = apodized_calibration_image(calib, (40, 40))
    raw = rho / np.sqrt(np.sum(np.abs(rho) ** 2, axis=0))
    out, record = normalize_maps(ComplexImageStack(raw, "image"), calib)
    np.testing.assert_allclose(out.data, raw, atol=1e-12)
    assert record["zero_magnitude_voxels"] == 0
    assert record["apodization_sigma"] == [6.0, 6.0]


def test_normalization_cancels_any_nonzero_scaling(small_scene, rng):
    _, _, calib = small_scene
    raw = random_stack_data(rng, (4, 30, 30))
    beta = random_stack_data(rng, (30, 30)) + 0.1
    a, _ = normalize_maps(ComplexImageStack(raw, "image"), calib)
    b, _ = normalize_maps(ComplexImageStack(raw * beta, "image"), calib)
    np.testing.assert_allclose(b.data, a.data, atol=1e-10)


def test_normalized_maps_have_unit_sos_and_real_combination(small_scene, rng):
    _, _, calib = small_scene
    out, _ = normalize_maps(ComplexImageStack(random_stack_data(rng, (4, 20, 20)), "image"), calib)
    np.testing.assert_allclose(np.sum(np.abs(out.data) ** 2, axis=0), 1.0, atol=1e-12)
    combined = np.sum(out.data.conj() * apodized_calibration_image(calib, (20, 20)), axis=0)
    assert np.abs(combined.imag).max() < 1e-10 * np.abs(combined).max()
    assert combined.real.min() >= 0


def test_zero_voxels_are_recorded(small_scene, rng):
    _, _, calib = small_scene
    raw = random_stack_data(rng, (4, 10, 10))
    raw[:, 3, 4] = 0
    out, record = normalize_maps(ComplexImageStack(raw, "image"), calib)
    assert record["zero_magnitude_voxels"] == 1
    assert not out.data[:, 3, 4].any()


def test_interpolating_a_constant():
    out = interpolate_maps(ComplexImageStack(np.full((2, 6, 7), 0.3 - 0.2j), "image"), (20, 17))
    np.testing.assert_allclose(out.data, 0.3 - 0.2j, atol=1e-13)


def test_interpolation_identity(rng):
    low = ComplexImageStack(random_stack_data(rng, (2, 8, 9)), "image")
    np.testing.assert_allclose(interpolate_maps(low, (8, 9)).data, low.data, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(10, 20), st.integers(10, 20), st.integers(0, 30), st.integers(0, 30), st.integers(0, 999))
def test_interpolation_reproduces_bandlimited_maps(n0, n1, g0, g1, seed):
    rng = np.random.default_rng(seed)
    gen = make_support("rect", 2)
    coeffs = random_stack_data(rng, (2, gen.size))
    low = evaluate_fourier_series(coeffs, gen.offsets, (n0, n1))
    high = evaluate_fourier_series(coeffs, gen.offsets, (n0 + g0, n1 + g1))
    out = interpolate_maps(ComplexImageStack(low, "image"), (n0 + g0, n1 + g1))
    assert np.abs(out.data - high).max() < 1e-6


def test_interpolation_handles_nyquist_on_even_grids():
    # a real cosine at the Nyquist rate of the low grid is split evenly when upsampled
    n = 8
    x = (np.arange(n) - n // 2) / n
    low = np.cos(2 * np.pi * (n // 2) * x)[None]
    out = interpolate_maps(ComplexImageStack(low, "image"), (32,))
    xf = (np.arange(32) - 16) / 32
    np.testing.assert_allclose(out.data[0], np.cos(2 * np.pi * (n // 2) * xf), atol=1e-12)


def test_interpolation_cannot_shrink(rng):
    with pytest.raises(DimensionMismatchError):
        interpolate_maps(ComplexImageStack(random_stack_data(rng, (1, 8, 8)), "image"), (4, 8))


def test_support_mask_thresholds():
    z = np.zeros((3, 3))
    assert support_mask(z, 0.1).all()
    assert not support_mask(z, 0.0).any()


def test_dice_values():
    a = np.array([1, 1, 0, 0], bool)
    assert dice(a, a) == 1.0
    assert dice(a, ~a) == 0.0
    assert dice(a, np.array([1, 0, 0, 0], bool)) == pytest.approx(2 / 3)
    assert dice(np.zeros(3, bool), np.zeros(3, bool)) == 1.0
