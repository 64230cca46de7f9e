"""Schmidt decomposition of the discretized two-photon spatial state."""
from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import BiphotonConfig, MomentumGrid, NumericalDiagnostic
from .modefunction import auto_half_width, mode_amplitude

DEFAULT_SAMPLES = 33
DEFAULT_CAP = 33
LAMBDA_FLOOR = 1e-12
ORACLE_MAX_SAMPLES = 17


class KernelTooLarge(NumericalDiagnostic):
    pass


class SchmidtError(NumericalDiagnostic):
    pass


def joint_axes(grid: MomentumGrid):
    """Broadcast-ready (px, py, qx, qy), each of shape (N, N, N, N)."""
    x = grid.axis
    return np.meshgrid(x, x, x, x, indexing="ij", sparse=True)


def joint_amplitude(cfg: BiphotonConfig, grid: MomentumGrid, max_samples: int | None = DEFAULT_CAP) -> np.ndarray:
    """Raw Phi(p, q) sampled as an array indexed [px, py, qx, qy]."""
    n = grid.samples_per_axis
    if max_samples is not None and n > max_samples:
        raise KernelTooLarge(f"{n} samples per axis exceeds the cap of {max_samples} "
                             f"({n * n}x{n * n} kernel)")
    px, py, qx, qy = joint_axes(grid)
    return mode_amplitude((px, py), (qx, qy), cfg)


def transverse_phase(grid: MomentumGrid, a: float, b: float) -> np.ndarray:
    """exp(i (a p_y + b q_y)) on the joint grid, indexed [px, py, qx, qy]."""
    _, py, _, qy = joint_axes(grid)
    return np.exp(1j * (a * py + b * qy))


@dataclass(frozen=True)
class KernelMatrix:
    """Phi(p, q) as an (N^2, N^2) matrix with sqrt weights on both sides.

    Row index ``ix * N + iy`` runs over the signal wavevector p, column index
    ``jx * N + jy`` over the idler wavevector q (row-major flattening).
    """

    matrix: np.ndarray
    grid: MomentumGrid

    @property
    def quad_weight(self) -> float:
        """Interior cell area; boundary cells carry half or a quarter of it."""
        return self.grid.step ** 2

    def modes(self, count: int):
        """Leading signal Schmidt modes as [ix, iy] arrays of function values."""
        u, s, _ = scipy.linalg.svd(self.matrix, full_matrices=False)
        n = self.grid.samples_per_axis
        root_w = np.sqrt(self.grid.weights.ravel())
        out = []
        for k in range(min(count, len(s))):
            with np.errstate(divide="ignore", invalid="ignore"):
                f = np.where(root_w > 0, u[:, k] / root_w, 0.0)
            out.append(f.reshape(n, n))
        return out


def weighted_kernel(amplitudes: np.ndarray, grid: MomentumGrid) -> KernelMatrix:
    n = grid.samples_per_axis
    root_w = np.sqrt(grid.weights.ravel())
    mat = amplitudes.reshape(n * n, n * n) * root_w[:, None] * root_w[None, :]
    return KernelMatrix(mat, grid)


def build_kernel(cfg: BiphotonConfig, grid: MomentumGrid, max_samples: int | None = DEFAULT_CAP) -> KernelMatrix:
    return weighted_kernel(joint_amplitude(cfg, grid, max_samples), grid)


def kernel_grid(cfgs, samples: int = DEFAULT_SAMPLES, half_width: float | None = None) -> MomentumGrid:
    """One grid wide enough for every config in ``cfgs``.

    Configs with ws = 0 have no decaying kernel; they are skipped when at
    least one other config sets the extent.
    """
    if half_width is not None:
        return MomentumGrid(half_width, samples)
    cfgs = list(cfgs)
    usable = [c for c in cfgs if c.optics.ws_um > 0]
    if not usable:
        auto_half_width(cfgs[0], joint=True)  # raises the explanatory diagnostic
    return MomentumGrid(max(auto_half_width(c, joint=True) for c in usable), samples)


def singular_values(kernel: KernelMatrix) -> np.ndarray:
    try:
        return scipy.linalg.svd(kernel.matrix, compute_uv=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        pass
    try:
        return scipy.linalg.svd(kernel.matrix, compute_uv=False, lapack_driver="gesvd")
    except np.linalg.LinAlgError as exc:
        raise SchmidtError(f"SVD did not converge for a {kernel.matrix.shape} kernel: {exc}") from exc


@dataclass(frozen=True)
class SchmidtSpectrum:
    lambdas: np.ndarray  # descending, sum to 1
    schmidt_number_K: float

    @property
    def purity(self) -> float:
        return float(np.sum(self.lambdas**2))


def schmidt_spectrum(kernel: KernelMatrix) -> SchmidtSpectrum:
    """lambda_n = sigma_n^2 / sum sigma^2 and K = 1 / sum lambda_n^2."""
    s = singular_values(kernel)
    if not np.all(np.isfinite(s)):
        raise SchmidtError("non-finite singular values")
    s2 = s**2
    total = s2.sum()
    if not total > 0:
        raise SchmidtError("kernel is identically zero")
    lam = s2 / total
    lam = lam[lam >= LAMBDA_FLOOR]
    return SchmidtSpectrum(lam, float(1.0 / np.sum(lam**2)))


def schmidt_number(cfg: BiphotonConfig, grid: MomentumGrid, max_samples: int | None = DEFAULT_CAP) -> float:
    return schmidt_spectrum(build_kernel(cfg, grid, max_samples)).schmidt_number_K


def purity_from_amplitudes(amplitudes: np.ndarray, weights: np.ndarray) -> float:
    """Tr rho_s^2 / (Tr rho_s)^2 by direct quadrature.

    ``amplitudes[a, b]`` is the raw mode function at signal sample a and idler
    sample b; ``weights`` are the quadrature weights of one side.  The reduced
    density matrix is accumulated explicitly, one signal row at a time.
    """
    F = np.asarray(amplitudes, dtype=complex)
    w = np.asarray(weights, dtype=float)
    n = F.shape[0]
    rho = np.empty((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            rho[a, b] = np.sum(F[a] * np.conj(F[b]) * w)
    trace = float(np.sum(np.real(np.diag(rho)) * w))
    trace_sq = float(np.sum(np.abs(rho) ** 2 * np.multiply.outer(w, w)))
    return trace_sq / trace**2


def purity_oracle(cfg: BiphotonConfig, grid: MomentumGrid) -> float:
    """Brute-force Tr rho_s^2 for small grids, independent of the SVD path."""
    n = grid.samples_per_axis
    if n > ORACLE_MAX_SAMPLES:
        raise ValueError(f"purity_oracle is brute force; use at most {ORACLE_MAX_SAMPLES} samples")
    x = grid.axis
    pts = [(a, b) for a in x for b in x]
    F = np.array([[complex(mode_amplitude(p, q, cfg)) for q in pts] for p in pts])
    return purity_from_amplitudes(F, grid.weights.ravel())


SWEEP_PARAMS = ("alpha", "ws", "w0", "L")


def schmidt_sweep(cfg: BiphotonConfig, param: str, values, samples: int = DEFAULT_SAMPLES,
                  half_width: float | None = None, threads: int = 1,
                  max_samples: int | None = DEFAULT_CAP):
    """K at each sweep value on one shared grid; returns (grid, [K, ...])."""
    cfgs = [cfg.with_param(param, v) for v in values]
    grid = kernel_grid(cfgs, samples, half_width)

    def one(c):
        return schmidt_number(c, grid, max_samples)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            ks = list(pool.map(one, cfgs))
    else:
        ks = [one(c) for c in cfgs]
    return grid, ks


def sweep_csv(values, ks) -> str:
    out = io.StringIO()
    out.write("param,K\n")
    for v, k in zip(values, ks):
        out.write(f"{float(v):.17g},{k:.17g}\n")
    return out.getvalue()
