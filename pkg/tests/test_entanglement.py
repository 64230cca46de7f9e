import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spdc_walkoff.core import MomentumGrid, NumericalDiagnostic, reference_config
from spdc_walkoff.entanglement import (
    KernelMatrix,
    KernelTooLarge,
    build_kernel,
    joint_amplitude,
    kernel_grid,
    purity_from_amplitudes,
    purity_oracle,
    schmidt_number,
    schmidt_spectrum,
    schmidt_sweep,
    singular_values,
    sweep_csv,
)
from spdc_walkoff.modefunction import BOUNDARY_DECAY


@pytest.fixture
def grid17(filtered):
    return kernel_grid([filtered], 17)


def test_flattening_order(filtered):
    grid = MomentumGrid(0.05, 5)
    kernel = build_kernel(filtered, grid)
    x = grid.axis
    w = grid.weights
    from spdc_walkoff.modefunction import mode_amplitude

    ix, iy, jx, jy = 1, 4, 3, 0
    expected = mode_amplitude((x[ix], x[iy]), (x[jx], x[jy]), filtered) * math.sqrt(w[ix, iy] * w[jx, jy])
    assert kernel.matrix[ix * 5 + iy, jx * 5 + jy] == pytest.approx(expected, rel=1e-14)
    assert kernel.quad_weight == pytest.approx(grid.step**2)


def test_separable_limit_rank_one():
    cfg = reference_config(w0=1e-9, L=1e-9, ws=50.0)
    kernel = build_kernel(cfg, MomentumGrid(0.15, 13))
    s = singular_values(kernel)
    assert s[1] / s[0] < 1e-10
    assert schmidt_spectrum(kernel).schmidt_number_K == pytest.approx(1.0, abs=1e-6)


def test_kernel_boundary_decay(filtered):
    grid = kernel_grid([filtered], 17)
    raw = np.abs(joint_amplitude(filtered, grid))
    inner = raw[1:-1, 1:-1, 1:-1, 1:-1].max()
    boundary = np.where(np.pad(np.zeros((15, 15, 15, 15)), 1, constant_values=1) > 0, raw, 0).max()
    assert raw.max() == 1.0 and inner == 1.0
    assert boundary <= math.exp(-BOUNDARY_DECAY) * (1 + 1e-9)


def test_kernel_90_and_270_are_adjoint(filtered):
    # swapping p and q flips the sign of the y difference, which maps the
    # alpha = 90 mismatch onto minus the alpha = 270 one
    grid = kernel_grid([filtered], 13)
    k90 = build_kernel(filtered.with_alpha(90), grid).matrix
    k270 = build_kernel(filtered.with_alpha(270), grid).matrix
    np.testing.assert_allclose(k270, k90.conj().T, rtol=1e-12, atol=1e-300)


def test_cap_enforced(filtered):
    with pytest.raises(KernelTooLarge):
        build_kernel(filtered, MomentumGrid(0.1, 35))
    assert isinstance(KernelTooLarge("x"), NumericalDiagnostic)


def test_zero_filter_kernel_grid_refused(experiment):
    with pytest.raises(NumericalDiagnostic):
        kernel_grid([experiment], 17)


def test_spectrum_invariants(filtered, grid17):
    spec = schmidt_spectrum(build_kernel(filtered, grid17))
    lam = spec.lambdas
    assert np.all(lam >= 1e-12) and np.all(np.diff(lam) <= 0)
    assert lam.sum() == pytest.approx(1.0, abs=1e-9)
    assert 1.0 <= spec.schmidt_number_K <= len(lam)
    assert spec.schmidt_number_K == pytest.approx(1 / spec.purity)


def test_rescaling_invariance(filtered, grid17):
    kernel = build_kernel(filtered, grid17)
    scaled = KernelMatrix(kernel.matrix * (3.7e5 * np.exp(1.1j)), grid17)
    assert schmidt_spectrum(scaled).schmidt_number_K == pytest.approx(
        schmidt_spectrum(kernel).schmidt_number_K, rel=1e-10)


@settings(deadline=None, max_examples=20)
@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_oracle_matches_svd_on_random_kernels(n, seed):
    rng = np.random.default_rng(seed)
    F = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    w = rng.uniform(0.1, 2.0, n)
    kernel = KernelMatrix(F * np.sqrt(w)[:, None] * np.sqrt(w)[None, :], MomentumGrid(1.0, 1))
    svd_purity = schmidt_spectrum(kernel).purity
    assert purity_from_amplitudes(F, w) == pytest.approx(svd_purity, abs=1e-10)


def test_oracle_separable():
    cfg = reference_config(w0=1e-9, L=1e-9, ws=50.0)
    assert purity_oracle(cfg, MomentumGrid(0.15, 7)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("alpha", [0, 90, 200])
def test_oracle_matches_svd_filtered(filtered, alpha):
    cfg = filtered.with_alpha(alpha)
    grid = kernel_grid([cfg], 17)
    assert purity_oracle(cfg, grid) == pytest.approx(schmidt_spectrum(build_kernel(cfg, grid)).purity, abs=1e-6)


def test_oracle_refuses_large_grid(filtered):
    with pytest.raises(ValueError):
        purity_oracle(filtered, MomentumGrid(0.1, 19))


def test_K_alpha_ordering(filtered):
    grid = kernel_grid([filtered.with_alpha(0), filtered.with_alpha(90)], 25)
    assert schmidt_number(filtered.with_alpha(0), grid) > schmidt_number(filtered.with_alpha(90), grid)


def test_K_alpha_invariant_without_walkoff():
    cfg = reference_config(w0=100, ws=50, rho0=0)
    _, ks = schmidt_sweep(cfg, "alpha", [0, 60, 90, 250], samples=17)
    assert max(ks) - min(ks) <= 1e-6


def test_K_nonincreasing_in_filter(filtered):
    _, ks = schmidt_sweep(filtered, "ws", [0, 25, 50, 100], samples=25)
    assert all(a >= b for a, b in zip(ks, ks[1:]))
    assert min(ks) >= 1


def test_K_nondecreasing_in_pump(filtered):
    _, ks = schmidt_sweep(filtered, "w0", [100, 200, 300], samples=25)
    assert all(a <= b for a, b in zip(ks, ks[1:]))


def test_sweep_threads_identical(filtered):
    vals = [0, 45, 90, 135]
    _, a = schmidt_sweep(filtered, "alpha", vals, samples=17, threads=1)
    _, b = schmidt_sweep(filtered, "alpha", vals, samples=17, threads=4)
    assert sweep_csv(vals, a) == sweep_csv(vals, b)


def test_sweep_csv_layout():
    text = sweep_csv([0.0, 90.0], [3.5, 1.25])
    assert text == "param,K\n0,3.5\n90,1.25\n"


def test_modes_are_orthonormal(filtered, grid17):
    kernel = build_kernel(filtered, grid17)
    modes = kernel.modes(4)
    w = grid17.weights
    gram = np.array([[np.sum(a * np.conj(b) * w) for b in modes] for a in modes])
    np.testing.assert_allclose(gram, np.eye(4), atol=1e-10)
