"""Two-crystal polarization source: spatial overlap, purity and concurrence.

Crystal 1 emits HH pairs with the crystal axis at alpha = 0; those photons
then walk off inside crystal 2.  Crystal 2 emits VV pairs with its axis at
alpha = 90 deg.  Tracing out the spatial variables leaves an X-shaped
polarization state fixed by the overlap xi of the two spatial kernels.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import BiphotonConfig, MomentumGrid
from .entanglement import (
    DEFAULT_CAP,
    DEFAULT_SAMPLES,
    joint_amplitude,
    kernel_grid,
    schmidt_spectrum,
    transverse_phase,
    weighted_kernel,
)

XI_TOLERANCE = 1e-9


@dataclass(frozen=True)
class TwoCrystalConfig:
    base: BiphotonConfig = field(default_factory=BiphotonConfig)
    rho_s_deg: float | None = None  # signal walk-off in crystal 2; None follows rho0
    rho_i_deg: float | None = None

    def __post_init__(self):
        for v in (self.rho_s_deg, self.rho_i_deg):
            if v is not None and not 0.0 <= v < 90.0:
                raise ValueError(f"walk-off angle must lie in [0, 90) deg, got {v!r}")

    @property
    def rho_s(self) -> float:
        return self.base.geom.rho0 if self.rho_s_deg is None else math.radians(self.rho_s_deg)

    @property
    def rho_i(self) -> float:
        return self.base.geom.rho0 if self.rho_i_deg is None else math.radians(self.rho_i_deg)

    @property
    def first(self) -> BiphotonConfig:
        return self.base.with_alpha(0.0)

    @property
    def second(self) -> BiphotonConfig:
        return self.base.with_alpha(90.0)

    def with_param(self, name: str, value: float) -> TwoCrystalConfig:
        return replace(self, base=self.base.with_param(name, value))

    def phase_coefficients(self) -> tuple[float, float]:
        """(tan(rho_s) L, tan(rho_i) L) in um, the walk-off phase slopes."""
        L = self.base.geom.length_um
        return math.tan(self.rho_s) * L, math.tan(self.rho_i) * L


@dataclass(frozen=True)
class JointMode:
    """Joint amplitude on a grid, unit power under the trapezoid weights."""

    grid: MomentumGrid
    amplitudes: np.ndarray  # [px, py, qx, qy]

    @property
    def weights(self) -> np.ndarray:
        w = self.grid.weights
        return np.multiply.outer(w, w)

    @classmethod
    def normalized(cls, grid: MomentumGrid, raw: np.ndarray) -> JointMode:
        w = grid.weights
        power = float(np.sum(np.abs(raw) ** 2 * np.multiply.outer(w, w)))
        return cls(grid, raw / math.sqrt(power))


def two_crystal_grid(cfg: TwoCrystalConfig, samples: int = DEFAULT_SAMPLES,
                     half_width: float | None = None) -> MomentumGrid:
    return kernel_grid([cfg.first, cfg.second], samples, half_width)


def crystal_modes(cfg: TwoCrystalConfig, grid: MomentumGrid,
                  max_samples: int | None = DEFAULT_CAP) -> tuple[JointMode, JointMode]:
    """(Phi_1, Phi_2): crystal-1 kernel with its walk-off phase, crystal-2 kernel."""
    a, b = cfg.phase_coefficients()
    raw1 = joint_amplitude(cfg.first, grid, max_samples)
    if a or b:
        raw1 = raw1 * transverse_phase(grid, a, b)
    raw2 = joint_amplitude(cfg.second, grid, max_samples)
    return JointMode.normalized(grid, raw1), JointMode.normalized(grid, raw2)


def overlap_xi(mode1: JointMode, mode2: JointMode) -> complex:
    """xi = int dp dq Phi_1 Phi_2^*."""
    if mode1.grid != mode2.grid or mode1.amplitudes.shape != mode2.amplitudes.shape:
        raise ValueError("kernels live on different grids")
    return complex(np.sum(mode1.amplitudes * np.conj(mode2.amplitudes) * mode1.weights))


@dataclass(frozen=True)
class PolarizationState:
    xi: complex
    purity_P: float
    concurrence_C: float
    rho_p: np.ndarray  # 4x4, basis HH, HV, VH, VV


def polarization_state(xi: complex) -> PolarizationState:
    """Reduced polarization state (1/2)[HH + VV + xi |HH><VV| + xi^* |VV><HH|]."""
    xi = complex(xi)
    mag = abs(xi)
    if mag > 1.0 + XI_TOLERANCE:
        raise ValueError(f"|xi| = {mag!r} exceeds 1")
    if mag > 1.0:
        xi /= mag
        mag = 1.0
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = 0.5
    rho[0, 3] = 0.5 * xi
    rho[3, 0] = 0.5 * xi.conjugate()
    return PolarizationState(xi, 0.5 * (1.0 + mag**2), mag, rho)


def two_crystal_state(cfg: TwoCrystalConfig, samples: int = DEFAULT_SAMPLES,
                      half_width: float | None = None,
                      max_samples: int | None = DEFAULT_CAP) -> PolarizationState:
    grid = two_crystal_grid(cfg, samples, half_width)
    m1, m2 = crystal_modes(cfg, grid, max_samples)
    return polarization_state(overlap_xi(m1, m2))


CONCURRENCE_PARAMS = ("w0", "L")


def concurrence_sweep(cfg: TwoCrystalConfig, param: str, values, samples: int = DEFAULT_SAMPLES,
                      threads: int = 1, max_samples: int | None = DEFAULT_CAP) -> list[PolarizationState]:
    """Polarization state at each sweep value; each point gets its own grid."""
    cfgs = [cfg.with_param(param, v) for v in values]

    def one(c):
        return two_crystal_state(c, samples, max_samples=max_samples)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, cfgs))
    return [one(c) for c in cfgs]


def sweep_csv(values, states: list[PolarizationState]) -> str:
    out = io.StringIO()
    out.write("param,xi_abs,purity,concurrence\n")
    for v, s in zip(values, states):
        row = (float(v), abs(s.xi), s.purity_P, s.concurrence_C)
        out.write(",".join(f"{x:.17g}" for x in row) + "\n")
    return out.getvalue()


def rho_text(state: PolarizationState) -> str:
    """rho_p as two 4x4 blocks (real, then imaginary), 17 significant digits."""
    lines = ["# real"]
    lines += [" ".join(f"{v:.17g}" for v in row) for row in state.rho_p.real]
    lines.append("# imag")
    lines += [" ".join(f"{v:.17g}" for v in row) for row in state.rho_p.imag]
    return "\n".join(lines) + "\n"


def marginal_schmidt_check(cfg: TwoCrystalConfig, grid: MomentumGrid | None = None,
                           samples: int = DEFAULT_SAMPLES,
                           max_samples: int | None = DEFAULT_CAP) -> tuple[float, float]:
    """K of the crystal-1 kernel without and with the crystal-2 walk-off phase."""
    grid = two_crystal_grid(cfg, samples) if grid is None else grid
    raw = joint_amplitude(cfg.first, grid, max_samples)
    a, b = cfg.phase_coefficients()
    k1 = schmidt_spectrum(weighted_kernel(raw, grid)).schmidt_number_K
    k2 = schmidt_spectrum(weighted_kernel(raw * transverse_phase(grid, a, b), grid)).schmidt_number_K
    return k1, k2
