"""Spiral-harmonic (OAM) content of the heralded signal mode."""
from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import BiphotonConfig, NumericalDiagnostic
from .modefunction import auto_radius, mode_amplitude

DEFAULT_M = 30
TRUNCATION_LIMIT = 1e-3


class TruncationError(NumericalDiagnostic):
    pass


@dataclass(frozen=True)
class PolarGrid:
    radial_samples: int
    radial_max: float  # rad/um
    angular_samples: int

    def __post_init__(self):
        if self.radial_samples < 2:
            raise ValueError("need at least two radial samples")
        if not self.radial_max > 0:
            raise ValueError("radial_max must be positive")
        if self.angular_samples < 1:
            raise ValueError("angular_samples must be positive")

    @property
    def radius(self) -> np.ndarray:
        return np.linspace(0.0, self.radial_max, self.radial_samples)

    @property
    def angle(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.angular_samples) / self.angular_samples

    def supports(self, M: int) -> bool:
        return self.angular_samples >= 8 * (M + 1)


def default_polar_grid(cfg: BiphotonConfig, M: int = DEFAULT_M, radial_samples: int = 400) -> PolarGrid:
    angular = 256
    while angular < 8 * (M + 1):
        angular *= 2
    return PolarGrid(radial_samples, auto_radius(cfg), angular)


def radial_weights(r: np.ndarray) -> np.ndarray:
    """Weights for int rho g(rho) drho with g linear on each interval.

    The rho factor is integrated exactly per interval.
    """
    r = np.asarray(r, dtype=float)
    a, b = r[:-1], r[1:]
    h = b - a
    w = np.zeros_like(r)
    w[:-1] += h * (2 * a + b) / 6.0
    w[1:] += h * (a + 2 * b) / 6.0
    return w


@dataclass(frozen=True)
class SpiralCoefficients:
    m_values: np.ndarray  # -M..M
    coefficients: np.ndarray  # [m, radius], a_m(rho)
    grid: PolarGrid
    total_power: float  # radial-angular quadrature of |Phi_s|^2
    harmonic_power: float  # same power summed over every resolved harmonic


def spiral_coefficients(cfg: BiphotonConfig, grid: PolarGrid, M: int = DEFAULT_M) -> SpiralCoefficients:
    """a_m(rho) = (2 pi)^-1/2 int dphi Phi_s(rho, phi) exp(-i m phi), |m| <= M.

    Phi_s is sampled analytically on the polar grid; the periodic trapezoid
    rule in angle is evaluated with an FFT.
    """
    if M < 0:
        raise ValueError("M must be nonnegative")
    if not grid.supports(M):
        raise ValueError(f"angular_samples={grid.angular_samples} cannot resolve |m| <= {M}; "
                         f"need at least {8 * (M + 1)}")
    r, th = grid.radius, grid.angle
    R, T = np.meshgrid(r, th, indexing="ij")
    field = mode_amplitude((R * np.cos(T), R * np.sin(T)), (0.0, 0.0), cfg)
    n = grid.angular_samples
    spectrum = np.fft.fft(field, axis=1) * (2.0 * math.pi / n / math.sqrt(2.0 * math.pi))

    w = radial_weights(r)
    total = float(w @ (np.abs(field) ** 2).sum(axis=1)) * (2.0 * math.pi / n)
    harmonic = float(w @ (np.abs(spectrum) ** 2).sum(axis=1))

    m_values = np.arange(-M, M + 1)
    cols = np.mod(m_values, n)
    return SpiralCoefficients(m_values, spectrum[:, cols].T.copy(), grid, total, harmonic)


@dataclass(frozen=True)
class SpiralSpectrum:
    m_values: np.ndarray
    weights: np.ndarray  # C_m as fractions of the total signal power
    truncation_mass: float  # power outside |m| <= M

    @property
    def valid(self) -> bool:
        return self.truncation_mass < TRUNCATION_LIMIT

    def weight(self, m: int) -> float:
        return float(self.weights[m - self.m_values[0]])


def oam_weights(coeffs: SpiralCoefficients, strict: bool = True) -> SpiralSpectrum:
    """C_m = int rho drho |a_m(rho)|^2, normalized by the total signal power.

    With ``strict`` a truncation mass of 1e-3 or more raises
    ``TruncationError``.
    """
    w = radial_weights(coeffs.grid.radius)
    cm = (np.abs(coeffs.coefficients) ** 2) @ w
    weights = cm / coeffs.total_power
    truncation = max(coeffs.harmonic_power - float(cm.sum()), 0.0) / coeffs.total_power
    spec = SpiralSpectrum(coeffs.m_values, weights, truncation)
    if strict and not spec.valid:
        M = int(coeffs.m_values[-1])
        raise TruncationError(f"truncation mass {truncation:.3g} outside |m| <= {M}; increase M")
    return spec


def oam_spectrum(cfg: BiphotonConfig, M: int = DEFAULT_M, grid: PolarGrid | None = None,
                 strict: bool = True) -> SpiralSpectrum:
    grid = default_polar_grid(cfg, M) if grid is None else grid
    return oam_weights(spiral_coefficients(cfg, grid, M), strict=strict)


def oam_alpha_sweep(cfg: BiphotonConfig, alphas_deg, M: int = DEFAULT_M, radial_samples: int = 400,
                    threads: int = 1, strict: bool = True) -> list[SpiralSpectrum]:
    """One spectrum per azimuth, in input order."""
    alphas = [float(a) for a in alphas_deg]
    for a in alphas:
        if not 0.0 <= a < 360.0:
            raise ValueError(f"alpha {a} outside [0, 360)")

    def one(a):
        c = cfg.with_alpha(a)
        return oam_spectrum(c, M, default_polar_grid(c, M, radial_samples), strict=strict)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, alphas))
    return [one(a) for a in alphas]


def sweep_csv(alphas_deg, spectra: list[SpiralSpectrum]) -> str:
    """CSV table ``alpha_deg, C_-M..C_M, truncation``."""
    out = io.StringIO()
    ms = spectra[0].m_values
    out.write(",".join(["alpha_deg", *(f"C_{m}" for m in ms), "truncation"]) + "\n")
    for a, s in zip(alphas_deg, spectra):
        row = [float(a), *s.weights.tolist(), s.truncation_mass]
        out.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return out.getvalue()
