"""Physical configuration, grids and config-file handling.

Values are stored in the units of the config file (nm, um, mm, degrees) so
that a config survives a dump/load cycle bit-exactly.  Numerical code reads
the derived properties, which use the internal unit system: lengths in um,
angles in radians and transverse wavevectors in rad/um.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

GAMMA = 0.455


class ConfigError(ValueError):
    """Bad, missing or unknown configuration entry."""


class NumericalDiagnostic(RuntimeError):
    """A computation ran but its own diagnostics say the result is unusable."""


def _positive(name, value):
    if not value > 0:
        raise ConfigError(f"{name} must be positive, got {value!r}")


@dataclass(frozen=True)
class PumpBeam:
    wavelength_nm: float = 405.0
    waist_um: float = 136.0

    def __post_init__(self):
        _positive("pump.wavelength_nm", self.wavelength_nm)
        _positive("pump.waist_um", self.waist_um)

    @property
    def wavelength_um(self) -> float:
        return self.wavelength_nm * 1e-3


@dataclass(frozen=True)
class CrystalGeometry:
    length_mm: float = 5.0
    walkoff_deg: float = 4.9
    noncollinear_deg: float = 4.0
    alpha_deg: float = 0.0

    def __post_init__(self):
        _positive("crystal.length_mm", self.length_mm)
        for name, v in (("crystal.walkoff_deg", self.walkoff_deg),
                        ("crystal.noncollinear_deg", self.noncollinear_deg)):
            if not 0.0 <= v < 90.0:
                raise ConfigError(f"{name} must lie in [0, 90), got {v!r}")
        if not math.isfinite(self.alpha_deg):
            raise ConfigError(f"crystal.alpha_deg must be finite, got {self.alpha_deg!r}")
        a = self.alpha_deg % 360.0
        if a == 360.0:  # tiny negative inputs round up
            a = 0.0
        object.__setattr__(self, "alpha_deg", a + 0.0)

    @property
    def length_um(self) -> float:
        return self.length_mm * 1e3

    @property
    def rho0(self) -> float:
        return math.radians(self.walkoff_deg)

    @property
    def phi(self) -> float:
        return math.radians(self.noncollinear_deg)

    @property
    def alpha(self) -> float:
        return math.radians(self.alpha_deg)


@dataclass(frozen=True)
class CollectionOptics:
    ws_um: float = 0.0
    focal_mm: float = 500.0
    signal_nm: float | None = None  # None: degenerate, twice the pump wavelength

    def __post_init__(self):
        if not self.ws_um >= 0:
            raise ConfigError(f"collection.ws_um must be >= 0, got {self.ws_um!r}")
        _positive("collection.focal_mm", self.focal_mm)
        if self.signal_nm is not None:
            _positive("collection.signal_nm", self.signal_nm)


@dataclass(frozen=True)
class ModelConstants:
    gamma: float = GAMMA

    def __post_init__(self):
        _positive("model.gamma", self.gamma)


@dataclass(frozen=True)
class BiphotonConfig:
    """Everything the biphoton mode function depends on."""

    pump: PumpBeam = field(default_factory=PumpBeam)
    geom: CrystalGeometry = field(default_factory=CrystalGeometry)
    optics: CollectionOptics = field(default_factory=CollectionOptics)
    constants: ModelConstants = field(default_factory=ModelConstants)

    @property
    def signal_wavelength_um(self) -> float:
        if self.optics.signal_nm is None:
            return 2.0 * self.pump.wavelength_um
        return self.optics.signal_nm * 1e-3

    def with_alpha(self, alpha_deg: float) -> BiphotonConfig:
        return replace(self, geom=replace(self.geom, alpha_deg=alpha_deg))

    def with_param(self, name: str, value: float) -> BiphotonConfig:
        """Copy with one sweep parameter changed.

        ``name`` is one of ``alpha`` (deg), ``ws`` (um), ``w0`` (um),
        ``L`` (mm), ``rho0`` (deg) or ``phi`` (deg).
        """
        value = float(value)
        if name == "alpha":
            return self.with_alpha(value)
        if name == "ws":
            return replace(self, optics=replace(self.optics, ws_um=value))
        if name == "w0":
            return replace(self, pump=replace(self.pump, waist_um=value))
        if name == "L":
            return replace(self, geom=replace(self.geom, length_mm=value))
        if name == "rho0":
            return replace(self, geom=replace(self.geom, walkoff_deg=value))
        if name == "phi":
            return replace(self, geom=replace(self.geom, noncollinear_deg=value))
        raise ValueError(f"unknown sweep parameter {name!r}")


def _check_odd(samples):
    if int(samples) != samples or samples < 1 or samples % 2 == 0:
        raise ValueError(f"samples_per_axis must be a positive odd integer, got {samples!r}")


@dataclass(frozen=True)
class MomentumGrid:
    """Square grid of transverse wavevectors, half-width in rad/um."""

    half_width: float
    samples_per_axis: int

    def __post_init__(self):
        _check_odd(self.samples_per_axis)
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width!r}")

    @property
    def axis(self) -> np.ndarray:
        return momentum_axis(self)

    @property
    def step(self) -> float:
        return self.half_width / (self.samples_per_axis // 2) if self.samples_per_axis > 1 else 0.0

    @property
    def weights(self) -> np.ndarray:
        """2-D trapezoid weights, indexed [x, y]."""
        w = trapezoid_weights(self.samples_per_axis, self.step)
        return np.multiply.outer(w, w)


@dataclass(frozen=True)
class DetectorPlaneGrid:
    """Square grid on the detection plane, half-width in mm."""

    half_width: float
    samples_per_axis: int

    def __post_init__(self):
        _check_odd(self.samples_per_axis)
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width!r}")

    @property
    def axis(self) -> np.ndarray:
        return momentum_axis(self)


def momentum_axis(grid) -> np.ndarray:
    """Uniform axis on [-half_width, half_width] containing 0 exactly.

    Works for either grid type.  Built from integer offsets so that
    ``axis[i] == -axis[n-1-i]`` holds bit for bit.
    """
    n = grid.samples_per_axis
    _check_odd(n)
    half = n // 2
    if half == 0:
        return np.zeros(1)
    return grid.half_width * (np.arange(-half, half + 1) / half)


def trapezoid_weights(n: int, step: float) -> np.ndarray:
    w = np.full(n, float(step))
    if n > 1:
        w[0] *= 0.5
        w[-1] *= 0.5
    return w


class CharacteristicLengths(NamedTuple):
    noncollinear_um: float
    walkoff_um: float
    in_regime: bool  # crystal longer than both lengths


def characteristic_lengths(pump: PumpBeam, geom: CrystalGeometry) -> CharacteristicLengths:
    """Non-collinear length w0/sin(phi) and walk-off length w0/tan(rho0).

    A zero angle yields an infinite length.
    """
    w0 = pump.waist_um
    l_nc = w0 / math.sin(geom.phi) if geom.phi > 0 else math.inf
    l_w = w0 / math.tan(geom.rho0) if geom.rho0 > 0 else math.inf
    L = geom.length_um
    return CharacteristicLengths(l_nc, l_w, L > l_nc and L > l_w)


# --- config files ---------------------------------------------------------

@dataclass(frozen=True)
class GridSettings:
    samples: int = 65
    halfwidth_radperum: float | None = None

    def __post_init__(self):
        try:
            _check_odd(self.samples)
        except ValueError as exc:
            raise ConfigError(f"grid.samples: {exc}") from None
        if self.halfwidth_radperum is not None:
            _positive("grid.halfwidth_radperum", self.halfwidth_radperum)


@dataclass(frozen=True)
class RunConfig:
    biphoton: BiphotonConfig = field(default_factory=BiphotonConfig)
    grid: GridSettings = field(default_factory=GridSettings)
    rho_s_deg: float | None = None
    rho_i_deg: float | None = None


# key -> (required, type)
_KEYS = {
    "pump.wavelength_nm": (True, float),
    "pump.waist_um": (True, float),
    "crystal.length_mm": (True, float),
    "crystal.walkoff_deg": (True, float),
    "crystal.noncollinear_deg": (True, float),
    "crystal.alpha_deg": (True, float),
    "collection.ws_um": (True, float),
    "collection.focal_mm": (True, float),
    "collection.signal_nm": (False, float),
    "grid.samples": (True, int),
    "grid.halfwidth_radperum": (False, float),
    "model.gamma": (False, float),
    "twocrystal.rho_s_deg": (False, float),
    "twocrystal.rho_i_deg": (False, float),
}


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        kind = _KEYS[key][1]
        try:
            values[key] = kind(val)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {val!r}") from None
    missing = [k for k, (req, _) in _KEYS.items() if req and k not in values]
    if missing:
        raise ConfigError(f"{source}: missing required key {missing[0]!r}"
                          + (f" (and {len(missing) - 1} more)" if len(missing) > 1 else ""))

    g = values.get
    bip = BiphotonConfig(
        pump=PumpBeam(g("pump.wavelength_nm"), g("pump.waist_um")),
        geom=CrystalGeometry(g("crystal.length_mm"), g("crystal.walkoff_deg"),
                             g("crystal.noncollinear_deg"), g("crystal.alpha_deg")),
        optics=CollectionOptics(g("collection.ws_um"), g("collection.focal_mm"),
                                g("collection.signal_nm")),
        constants=ModelConstants(g("model.gamma", GAMMA)),
    )
    for k in ("twocrystal.rho_s_deg", "twocrystal.rho_i_deg"):
        if k in values and not 0.0 <= values[k] < 90.0:
            raise ConfigError(f"{k} must lie in [0, 90), got {values[k]!r}")
    return RunConfig(
        biphoton=bip,
        grid=GridSettings(g("grid.samples"), g("grid.halfwidth_radperum")),
        rho_s_deg=g("twocrystal.rho_s_deg"),
        rho_i_deg=g("twocrystal.rho_i_deg"),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
    return parse_config(text, str(path))


def dump_config(cfg: RunConfig) -> str:
    b = cfg.biphoton
    items = [
        ("pump.wavelength_nm", b.pump.wavelength_nm),
        ("pump.waist_um", b.pump.waist_um),
        ("crystal.length_mm", b.geom.length_mm),
        ("crystal.walkoff_deg", b.geom.walkoff_deg),
        ("crystal.noncollinear_deg", b.geom.noncollinear_deg),
        ("crystal.alpha_deg", b.geom.alpha_deg),
        ("collection.ws_um", b.optics.ws_um),
        ("collection.focal_mm", b.optics.focal_mm),
        ("collection.signal_nm", b.optics.signal_nm),
        ("grid.samples", cfg.grid.samples),
        ("grid.halfwidth_radperum", cfg.grid.halfwidth_radperum),
        ("model.gamma", b.constants.gamma),
        ("twocrystal.rho_s_deg", cfg.rho_s_deg),
        ("twocrystal.rho_i_deg", cfg.rho_i_deg),
    ]
    # repr() of a float is the shortest string that parses back to the same bits
    return "".join(f"{k} = {v!r}\n" for k, v in items if v is not None)


def reference_config(**overrides) -> BiphotonConfig:
    """The experimental configuration (405 nm pump, 136 um waist, 5 mm crystal).

    Keyword overrides use the ``with_param`` names.
    """
    cfg = BiphotonConfig()
    for k, v in overrides.items():
        cfg = cfg.with_param(k, v)
    return cfg
