import numpy as np
import pytest

from senskit.grid import extract_calibration
from senskit.synthetic import forward_kspace, make_scene


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_scene():
    """Noiseless 4-channel 64x64 disk scene and its 24x24 calibration region."""
    scene = make_scene(4, (64, 64), tau_gen=2, seed=7)
    ksp = forward_kspace(scene)
    return scene, ksp, extract_calibration(ksp, 24)


def random_stack_data(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


# Settings tuned for exact (noiseless) data: only near-exact annihilators are kept,
# and the support mask is cut on the correspondingly smaller lambda scale.
NOISELESS_OVERRIDES = dict(tau=4, nullspace_threshold=1e-3, mask_threshold=1e-4)


_ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def acceptance():
    """``record(tag, passed, detail)`` stores a one-line verdict for the end-of-run summary."""

    def record(tag: str, passed: bool, detail: str) -> bool:
        _ACCEPTANCE_LINES[tag] = f"{tag} {'PASS' if passed else 'FAIL'}: {detail}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(_ACCEPTANCE_LINES, key=lambda t: int(t[1:])):
        terminalreporter.write_line(_ACCEPTANCE_LINES[tag])
