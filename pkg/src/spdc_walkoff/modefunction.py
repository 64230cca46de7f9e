"""Biphoton mode function with pump walk-off, and the images built from it.

Transverse wavevectors are passed as ``(x, y)`` pairs of scalars or
broadcastable arrays in rad/um.  Two-dimensional arrays over a grid are
indexed ``[ix, iy]``.

Orientation angles (``mode_orientation_beta`` and the major axis returned by
``ellipticity``) share one convention: they are measured from the y axis
towards the x axis, i.e. ``tan(beta) = dx/dy`` along the line.  In this
convention the perfect-phase-matching line has the closed form
``tan(beta) = (sin(phi) - tan(rho0) cos(phi) sin(alpha)) / (tan(rho0) cos(alpha))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (
    BiphotonConfig,
    CrystalGeometry,
    DetectorPlaneGrid,
    MomentumGrid,
    NumericalDiagnostic,
)

BOUNDARY_DECAY = 8.0  # |Phi| <= exp(-8) of its peak on the grid boundary


def delta_k(p, q, geom: CrystalGeometry):
    """Longitudinal phase mismatch, linear in the transverse wavevectors."""
    px, py = p
    qx, qy = q
    t = math.tan(geom.rho0)
    return (t * ((px + qx) * math.cos(geom.alpha) + (py + qy) * math.cos(geom.phi) * math.sin(geom.alpha))
            - (py - qy) * math.sin(geom.phi))


def _pump_exponent(p, q, cfg):
    w0 = cfg.pump.waist_um
    sx = p[0] + q[0]
    sy = p[1] + q[1]
    return -(sx**2 * w0**2 + sy**2 * w0**2 * math.cos(cfg.geom.phi) ** 2) / 4.0


def _filter_exponent(p, q, cfg):
    ws = cfg.optics.ws_um
    return -((p[0] ** 2 + p[1] ** 2) * ws**2 + (q[0] ** 2 + q[1] ** 2) * ws**2) / 4.0


def pump_factor(p, q, cfg: BiphotonConfig):
    return np.exp(_pump_exponent(p, q, cfg))


def phase_matching_factor(p, q, cfg: BiphotonConfig):
    """Gaussian stand-in for the sinc, including the i*dk*L/2 phase."""
    dk = delta_k(p, q, cfg.geom)
    gl = cfg.constants.gamma * cfg.geom.length_um
    return np.exp(-(gl**2) * dk**2 / 4.0 + 1j * dk * cfg.geom.length_um / 2.0)


def filter_factor(p, q, cfg: BiphotonConfig):
    return np.exp(_filter_exponent(p, q, cfg))


def mode_amplitude(p, q, cfg: BiphotonConfig):
    """Unnormalized mode function Phi(p, q); equals 1 at p = q = 0."""
    dk = delta_k(p, q, cfg.geom)
    L = cfg.geom.length_um
    gl = cfg.constants.gamma * L
    real = -(gl**2) * dk**2 / 4.0 + _pump_exponent(p, q, cfg) + _filter_exponent(p, q, cfg)
    return np.exp(real + 1j * (dk * L / 2.0))


# --- grid extents -----------------------------------------------------------

def decay_form(cfg: BiphotonConfig, joint: bool = False) -> np.ndarray:
    """Matrix Q with -log|Phi| = v^T Q v.

    ``v = (px, py)`` with q = 0 when ``joint`` is false, else
    ``v = (px, py, qx, qy)``.
    """
    g = cfg.geom
    t = math.tan(g.rho0)
    ca, sa = math.cos(g.alpha), math.sin(g.alpha)
    cp, sp = math.cos(g.phi), math.sin(g.phi)
    gl = cfg.constants.gamma * g.length_um
    w0, ws = cfg.pump.waist_um, cfg.optics.ws_um
    c = np.array([t * ca, t * cp * sa - sp, t * ca, t * cp * sa + sp])
    u = np.array([1.0, 0.0, 1.0, 0.0])
    v = np.array([0.0, 1.0, 0.0, 1.0])
    Q = (gl**2 / 4.0) * np.outer(c, c) + (w0**2 / 4.0) * (np.outer(u, u) + cp**2 * np.outer(v, v))
    Q += (ws**2 / 4.0) * np.eye(4)
    return Q if joint else Q[:2, :2]


def auto_half_width(cfg: BiphotonConfig, joint: bool = False, decay: float = BOUNDARY_DECAY) -> float:
    """Smallest square half-width with |Phi| <= exp(-decay) on the boundary.

    On the face where coordinate i equals h the minimum of v^T Q v is
    h^2 / (Q^-1)_ii, so the binding face is the one with largest (Q^-1)_ii.
    The joint kernel only decays in the p - q direction through the
    collection filter, so ``joint=True`` needs ``ws_um > 0``.
    """
    if joint and cfg.optics.ws_um == 0:
        raise NumericalDiagnostic(
            "the joint mode function does not decay along p = -q when ws = 0; "
            "set collection.ws_um > 0 or give grid.halfwidth_radperum")
    Q = decay_form(cfg, joint)
    return math.sqrt(decay * float(np.max(np.diag(np.linalg.inv(Q)))))


def auto_radius(cfg: BiphotonConfig, decay: float = BOUNDARY_DECAY) -> float:
    """Radius beyond which the signal mode is below exp(-decay) in every direction."""
    lam_min = float(np.linalg.eigvalsh(decay_form(cfg))[0])
    return math.sqrt(decay / lam_min)


def default_momentum_grid(cfg: BiphotonConfig, samples: int = 65, joint: bool = False,
                          half_width: float | None = None) -> MomentumGrid:
    h = auto_half_width(cfg, joint) if half_width is None else half_width
    return MomentumGrid(h, samples)


def momentum_per_mm(cfg: BiphotonConfig) -> float:
    """Transverse wavevector (rad/um) per mm of detector-plane position."""
    f_um = cfg.optics.focal_mm * 1e3
    return 2.0 * math.pi * 1e3 / (cfg.signal_wavelength_um * f_um)


def default_detector_grid(cfg: BiphotonConfig, samples: int = 65,
                          half_width: float | None = None) -> DetectorPlaneGrid:
    """Detector grid covering the auto momentum extent; ``half_width`` in rad/um."""
    h = auto_half_width(cfg) if half_width is None else half_width
    return DetectorPlaneGrid(h / momentum_per_mm(cfg), samples)


# --- discretized modes and images -------------------------------------------

@dataclass(frozen=True)
class DiscretizedMode:
    grid: MomentumGrid
    amplitudes: np.ndarray  # [ix, iy], unit power under trapezoid weights
    norm_constant: float  # multiplies the raw mode function

    def power(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2 * self.grid.weights))


def signal_mode(cfg: BiphotonConfig, grid: MomentumGrid) -> DiscretizedMode:
    """Heralded signal mode Phi(p, q=0) on ``grid``, normalized."""
    if not isinstance(grid, MomentumGrid):
        raise TypeError("signal_mode needs a MomentumGrid")
    x = grid.axis
    PX, PY = np.meshgrid(x, x, indexing="ij")
    raw = mode_amplitude((PX, PY), (0.0, 0.0), cfg)
    power = float(np.sum(np.abs(raw) ** 2 * grid.weights))
    norm = 1.0 / math.sqrt(power)
    return DiscretizedMode(grid, raw * norm, norm)


def coincidence_image(cfg: BiphotonConfig, det: DetectorPlaneGrid) -> np.ndarray:
    """Coincidence rate with the idler pinhole on axis, peak normalized to 1.

    Pixel ``[ix, iy]`` sits at detector position ``(x[ix], y[iy])`` mm, which
    maps to the signal wavevector ``2 pi x / (lambda_s f)``.
    """
    x = det.axis * momentum_per_mm(cfg)
    PX, PY = np.meshgrid(x, x, indexing="ij")
    rate = np.abs(mode_amplitude((PX, PY), (0.0, 0.0), cfg)) ** 2
    return rate / rate.max()


class Orientation(NamedTuple):
    beta: float  # rad, in (-pi/2, pi/2]
    degenerate: bool  # zero denominator: beta pinned to pi/2


def mode_orientation_beta(geom: CrystalGeometry, tol: float = 1e-12) -> Orientation:
    """Direction of the perfect-phase-matching line in the signal plane.

    Measured from the p_y axis towards p_x.  When tan(rho0) cos(alpha)
    vanishes the line runs along p_x; that branch is flagged.
    """
    t = math.tan(geom.rho0)
    num = math.sin(geom.phi) - t * math.cos(geom.phi) * math.sin(geom.alpha)
    den = t * math.cos(geom.alpha)
    if abs(den) <= tol:
        return Orientation(math.pi / 2, True)
    return Orientation(math.atan(num / den), False)


class Ellipticity(NamedTuple):
    ratio: float
    major_axis_angle: float  # rad from the y axis towards x, in (-pi/2, pi/2]


def ellipticity(image, x=None, y=None) -> Ellipticity:
    """Aspect ratio and orientation from the intensity second moments.

    ``image`` is indexed ``[ix, iy]``; coordinates default to pixel indices.
    The ratio is sqrt(largest / smallest eigenvalue) of the covariance.
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("image must be 2-D")
    if np.any(img < 0):
        raise ValueError("image must be nonnegative")
    mass = img.sum()
    if not mass > 0:
        raise ValueError("image has zero total mass")
    x = np.arange(img.shape[0], dtype=float) if x is None else np.asarray(x, float)
    y = np.arange(img.shape[1], dtype=float) if y is None else np.asarray(y, float)
    X, Y = np.meshgrid(x, y, indexing="ij")
    mx = (img * X).sum() / mass
    my = (img * Y).sum() / mass
    dx, dy = X - mx, Y - my
    cov = np.array([[(img * dx * dx).sum(), (img * dx * dy).sum()],
                    [(img * dx * dy).sum(), (img * dy * dy).sum()]]) / mass
    vals, vecs = np.linalg.eigh(cov)
    lo, hi = vals
    ratio = math.sqrt(hi / lo) if lo > 0 else math.inf
    vx, vy = vecs[:, 1]
    angle = math.atan2(vx, vy)
    # fold the undirected axis into (-pi/2, pi/2]
    if angle <= -math.pi / 2:
        angle += math.pi
    elif angle > math.pi / 2:
        angle -= math.pi
    return Ellipticity(ratio, angle)
