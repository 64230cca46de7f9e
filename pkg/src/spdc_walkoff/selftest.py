"""Quick built-in checks of the closed-form special cases.

Each check returns True on success.  ``run`` prints one PASS/FAIL line per
check and returns the number of failures.
"""
from __future__ import annotations

import math
import sys

import numpy as np

from .core import MomentumGrid, momentum_axis, reference_config
from .entanglement import build_kernel, joint_amplitude, schmidt_spectrum
from .modefunction import (
    coincidence_image,
    default_detector_grid,
    delta_k,
    filter_factor,
    mode_amplitude,
)
from .oam import oam_spectrum
from .polarization import JointMode, TwoCrystalConfig, crystal_modes, overlap_xi, polarization_state


def _axis_examples():
    ok = np.array_equal(momentum_axis(MomentumGrid(1.0, 3)), [-1.0, 0.0, 1.0])
    ok &= np.array_equal(momentum_axis(MomentumGrid(2.0, 5)), [-2.0, -1.0, 0.0, 1.0, 2.0])
    try:
        MomentumGrid(1.0, 4)
    except ValueError:
        return ok
    return False


def _delta_k_origin():
    return delta_k((0.0, 0.0), (0.0, 0.0), reference_config().geom) == 0.0


def _delta_k_no_walkoff():
    p, q = (0.013, -0.021), (-0.004, 0.017)
    vals = {delta_k(p, q, reference_config(rho0=0.0, alpha=a).geom) for a in (0, 37, 90, 211)}
    return len(vals) == 1 and math.isclose(vals.pop(), -(p[1] - q[1]) * math.sin(math.radians(4)))


def _amplitude_origin():
    return mode_amplitude((0.0, 0.0), (0.0, 0.0), reference_config()) == 1.0


def _no_filter():
    x = np.linspace(-0.1, 0.1, 7)
    return bool(np.all(filter_factor((x, x), (-x, 2 * x), reference_config(ws=0.0)) == 1.0))


def _image_peak():
    cfg = reference_config()
    img = coincidence_image(cfg, default_detector_grid(cfg, 33))
    return bool(img.min() >= 0.0 and img.max() == 1.0)


def _image_alpha_invariance():
    imgs = []
    for a in (0, 90, 180, 270):
        cfg = reference_config(rho0=0.0, alpha=a)
        imgs.append(coincidence_image(cfg, default_detector_grid(cfg, 33)))
    return all(np.max(np.abs(i - imgs[0])) <= 1e-10 for i in imgs)


def _isotropic_oam():
    spec = oam_spectrum(reference_config(rho0=0.0, phi=0.0), M=5)
    others = np.delete(spec.weights, 5)
    return abs(spec.weight(0) - 1.0) < 1e-9 and np.max(others) < 1e-12


def _polarization_limits():
    pure, mixed = polarization_state(1.0), polarization_state(0.0)
    return (math.isclose(pure.purity_P, 1.0) and math.isclose(pure.concurrence_C, 1.0)
            and math.isclose(mixed.purity_P, 0.5) and mixed.concurrence_C == 0.0)


def _separable_kernel():
    # without pump waist and crystal length Phi factorizes into p and q parts
    cfg = reference_config(w0=1e-9, L=1e-9, ws=50.0)
    grid = MomentumGrid(0.15, 9)
    return abs(schmidt_spectrum(build_kernel(cfg, grid)).schmidt_number_K - 1.0) < 1e-6


def _untwisted_first_crystal():
    cfg = TwoCrystalConfig(reference_config(ws=50.0), rho_s_deg=0.0, rho_i_deg=0.0)
    grid = MomentumGrid(0.1, 9)
    m1, _ = crystal_modes(cfg, grid)
    ref = JointMode.normalized(grid, joint_amplitude(cfg.base.with_alpha(0.0), grid))
    return np.array_equal(m1.amplitudes, ref.amplitudes)


def _no_walkoff_overlap():
    cfg = TwoCrystalConfig(reference_config(ws=50.0, rho0=0.0), rho_s_deg=0.0, rho_i_deg=0.0)
    m1, m2 = crystal_modes(cfg, MomentumGrid(0.1, 9))
    return abs(overlap_xi(m1, m2) - 1.0) < 1e-12


CHECKS = [
    ("momentum axis examples and parity rule", _axis_examples),
    ("delta_k vanishes at the origin", _delta_k_origin),
    ("delta_k without walk-off ignores alpha", _delta_k_no_walkoff),
    ("mode amplitude is 1 at the origin", _amplitude_origin),
    ("ws = 0 filter factor is 1", _no_filter),
    ("coincidence image nonnegative with unit peak", _image_peak),
    ("images alpha-invariant without walk-off", _image_alpha_invariance),
    ("isotropic mode has only m = 0", _isotropic_oam),
    ("polarization state at xi = 1 and xi = 0", _polarization_limits),
    ("separable kernel has K = 1", _separable_kernel),
    ("zero crystal-2 walk-off leaves Phi_1 untouched", _untwisted_first_crystal),
    ("no walk-off gives xi = 1", _no_walkoff_overlap),
]


def run(stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    failures = 0
    for name, check in CHECKS:
        try:
            ok = bool(check())
        except Exception as exc:  # a crash is a failed check
            ok = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}", file=stream)
    return failures
