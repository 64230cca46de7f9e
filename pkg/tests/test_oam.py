import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spdc_walkoff.core import reference_config
from spdc_walkoff.modefunction import mode_amplitude
from spdc_walkoff.oam import (
    PolarGrid,
    TruncationError,
    default_polar_grid,
    oam_alpha_sweep,
    oam_spectrum,
    oam_weights,
    radial_weights,
    spiral_coefficients,
    sweep_csv,
)


def reconstruct(coeffs):
    th = coeffs.grid.angle
    basis = np.exp(1j * np.outer(coeffs.m_values, th)) / math.sqrt(2 * math.pi)
    return coeffs.coefficients.T @ basis


def sampled_mode(cfg, grid):
    R, T = np.meshgrid(grid.radius, grid.angle, indexing="ij")
    return mode_amplitude((R * np.cos(T), R * np.sin(T)), (0, 0), cfg)


def test_radial_weights_exact_for_linear():
    r = np.linspace(0, 2, 7)
    w = radial_weights(r)
    # int_0^2 rho * (3 + 5 rho) d rho = 6 + 40/3
    assert w @ (3 + 5 * r) == pytest.approx(6 + 40 / 3, rel=1e-14)


def test_isotropic_only_m0():
    cfg = reference_config(rho0=0, phi=0)
    coeffs = spiral_coefficients(cfg, default_polar_grid(cfg, 10), 10)
    others = np.delete(np.abs(coeffs.coefficients), 10, axis=0)
    assert np.max(others) < 1e-14
    spec = oam_weights(coeffs)
    assert spec.weight(0) == pytest.approx(1.0, abs=1e-12)


def test_elliptic_real_mode_symmetric():
    # a vanishing crystal removes the phase; the pump keeps its cos^2(phi)
    # ellipticity, strong at large phi, so the mode is real and even
    cfg = reference_config(rho0=0, phi=60, L=1e-15)
    coeffs = spiral_coefficients(cfg, default_polar_grid(cfg, 8), 8)
    a = coeffs.coefficients
    np.testing.assert_allclose(a, a[::-1], rtol=1e-12, atol=1e-12)
    assert np.max(np.abs(a[8 + 2])) > 1e-3  # m = 2 present
    assert np.max(np.abs(a[8 + 1])) < 1e-12  # odd m absent


def test_reconstruction_converged(experiment):
    grid = default_polar_grid(experiment, 40)
    coeffs = spiral_coefficients(experiment, grid, 40)
    err = np.max(np.abs(reconstruct(coeffs) - sampled_mode(experiment, grid)))
    assert err < 1e-6


def test_reconstruction_error_is_truncation(experiment):
    # at M = 10 the L2 reconstruction error is exactly the discarded power
    grid = default_polar_grid(experiment, 10)
    coeffs = spiral_coefficients(experiment, grid, 10)
    spec = oam_weights(coeffs, strict=False)
    diff = np.abs(reconstruct(coeffs) - sampled_mode(experiment, grid)) ** 2
    err_power = radial_weights(grid.radius) @ diff.sum(axis=1) * (2 * math.pi / grid.angular_samples)
    assert err_power / coeffs.total_power == pytest.approx(spec.truncation_mass, rel=1e-9)
    assert spec.truncation_mass > 1e-4


@pytest.mark.parametrize("alpha", [0, 90, 270])
def test_parseval(experiment, alpha):
    cfg = experiment.with_alpha(alpha)
    coeffs = spiral_coefficients(cfg, default_polar_grid(cfg), 30)
    assert coeffs.harmonic_power == pytest.approx(coeffs.total_power, rel=1e-9)


@pytest.mark.parametrize("w0", [100, 136, 600])
@pytest.mark.parametrize("alpha", [0, 90, 180, 270])
def test_weights_sum_to_one(w0, alpha):
    spec = oam_spectrum(reference_config(w0=w0, alpha=alpha))
    assert np.all(spec.weights >= 0)
    assert spec.weights.sum() + spec.truncation_mass == pytest.approx(1.0, abs=1e-9)
    assert spec.valid


def test_truncation_error_when_M_too_small():
    cfg = reference_config(w0=100, alpha=270)
    with pytest.raises(TruncationError):
        oam_spectrum(cfg, M=10)
    spec = oam_spectrum(cfg, M=10, strict=False)
    assert not spec.valid


def test_angular_resolution_guard(experiment):
    grid = PolarGrid(50, 0.05, 64)
    with pytest.raises(ValueError, match="angular"):
        spiral_coefficients(experiment, grid, 10)


def test_global_phase_invariance(experiment, monkeypatch):
    import spdc_walkoff.oam as oam_mod

    base = oam_spectrum(experiment)
    phase = np.exp(0.7j)
    monkeypatch.setattr(oam_mod, "mode_amplitude", lambda p, q, cfg: phase * mode_amplitude(p, q, cfg))
    rotated = oam_spectrum(experiment)
    np.testing.assert_allclose(rotated.weights, base.weights, rtol=1e-12, atol=1e-16)


def test_no_walkoff_alpha_independent():
    base = reference_config(rho0=0)
    specs = oam_alpha_sweep(base, [0, 45, 90, 200, 270])
    for s in specs[1:]:
        assert np.array_equal(s.weights, specs[0].weights)


def test_selection_rule_violated(experiment):
    c0 = [oam_spectrum(experiment.with_alpha(a)).weight(0) for a in (0, 90, 180, 270)]
    assert min(c0) < 1 - 1e-3


def test_extremes_w0_100():
    cfg = reference_config(w0=100)
    alphas = np.arange(0, 360, 5)
    c0 = np.array([s.weight(0) for s in oam_alpha_sweep(cfg, alphas)])
    assert alphas[np.argmax(c0)] == 90
    assert alphas[np.argmin(c0)] == 270


def test_gaussian_like_at_90_beats_0(experiment):
    assert oam_spectrum(experiment.with_alpha(90)).weight(0) > oam_spectrum(experiment.with_alpha(0)).weight(0)


def test_larger_pump_flatter():
    alphas = np.arange(0, 360, 15)
    ptp = {}
    for w0 in (100, 600):
        c0 = [s.weight(0) for s in oam_alpha_sweep(reference_config(w0=w0), alphas)]
        ptp[w0] = max(c0) - min(c0)
    assert ptp[600] < ptp[100]


def test_sweep_rejects_out_of_range(experiment):
    with pytest.raises(ValueError):
        oam_alpha_sweep(experiment, [360.0])


def test_sweep_threads_identical(experiment):
    alphas = [0, 30, 60, 90, 120]
    a = oam_alpha_sweep(experiment, alphas, threads=1)
    b = oam_alpha_sweep(experiment, alphas, threads=4)
    assert sweep_csv(alphas, a) == sweep_csv(alphas, b)


def test_sweep_csv_layout(experiment):
    specs = oam_alpha_sweep(experiment, [0, 90], M=3, strict=False)
    lines = sweep_csv([0, 90], specs).splitlines()
    assert lines[0] == "alpha_deg,C_-3,C_-2,C_-1,C_0,C_1,C_2,C_3,truncation"
    assert len(lines) == 3
    row = [float(v) for v in lines[2].split(",")]
    assert row[0] == 90 and row[4] == specs[1].weight(0)


@settings(deadline=None, max_examples=15)
@given(st.floats(0, 359.9), st.floats(80, 700), st.floats(0, 80))
def test_weights_nonnegative_and_complete(alpha, w0, ws):
    spec = oam_spectrum(reference_config(alpha=alpha, w0=w0, ws=ws), strict=False)
    assert np.all(spec.weights >= 0)
    assert spec.weights.sum() + spec.truncation_mass == pytest.approx(1.0, abs=1e-9)
