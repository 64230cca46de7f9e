"""Spatial two-photon state of walk-off SPDC: images, OAM spectra, Schmidt
numbers and two-crystal polarization concurrence."""

__version__ = "0.1.0"

from .core import (
    BiphotonConfig,
    CollectionOptics,
    ConfigError,
    CrystalGeometry,
    DetectorPlaneGrid,
    ModelConstants,
    MomentumGrid,
    NumericalDiagnostic,
    PumpBeam,
    RunConfig,
    characteristic_lengths,
    dump_config,
    load_config,
    momentum_axis,
    parse_config,
    reference_config,
)

__all__ = [
    "BiphotonConfig",
    "CollectionOptics",
    "ConfigError",
    "CrystalGeometry",
    "DetectorPlaneGrid",
    "ModelConstants",
    "MomentumGrid",
    "NumericalDiagnostic",
    "PumpBeam",
    "RunConfig",
    "characteristic_lengths",
    "dump_config",
    "load_config",
    "momentum_axis",
    "parse_config",
    "reference_config",
]
