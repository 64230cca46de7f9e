"""Command-line front end.

    spdc-walkoff image --config run.cfg --alpha 90 --out out/alpha90

Exit codes: 0 success, 2 configuration error, 3 numerical diagnostic.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__, output, selftest
from .core import ConfigError, NumericalDiagnostic, RunConfig, dump_config, load_config
from .entanglement import DEFAULT_CAP, DEFAULT_SAMPLES, KernelMatrix, build_kernel
from .entanglement import sweep_csv as schmidt_csv
from .entanglement import schmidt_sweep
from .modefunction import (
    auto_half_width,
    coincidence_image,
    default_detector_grid,
    ellipticity,
    mode_orientation_beta,
)
from .oam import DEFAULT_M, oam_alpha_sweep
from .oam import sweep_csv as oam_csv
from .polarization import TwoCrystalConfig, concurrence_sweep, rho_text
from .polarization import sweep_csv as concurrence_csv

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

DEFAULT_RANGES = {
    "oam": {"alpha": "0:355:5"},
    "schmidt": {"alpha": "0:330:30", "ws": "0:100:25", "w0": "100:600:100", "L": "1:5:1"},
    "concurrence": {"w0": "100:600:100", "L": "0.5:5:4.5"},
}
SWEEPS = {"oam": ("alpha",), "schmidt": ("alpha", "ws", "w0", "L"), "concurrence": ("w0", "L")}


def parse_range(text: str) -> np.ndarray:
    """START:STOP:STEP, stop included when it lands on the step lattice."""
    try:
        start, stop, step = (float(s) for s in text.split(":"))
    except ValueError:
        raise ConfigError(f"--range expects START:STOP:STEP, got {text!r}") from None
    if not step > 0 or stop < start:
        raise ConfigError(f"--range needs STEP > 0 and STOP >= START, got {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def _load(args) -> RunConfig:
    if args.config is None:
        raise ConfigError("--config is required")
    cfg = load_config(args.config)
    b = cfg.biphoton
    for name, val in (("w0", args.w0), ("ws", args.ws), ("L", args.length)):
        if val is not None:
            b = b.with_param(name, val)
    if getattr(args, "alpha", None) is not None:
        b = b.with_alpha(args.alpha)
    return replace(cfg, biphoton=b)


def _run_pool(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _prefix(args) -> Path:
    p = Path(args.out)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _with_suffix(prefix: Path, suffix: str) -> Path:
    return prefix.with_name(prefix.name + suffix)


def cmd_image(args, cfg: RunConfig, record):
    b = cfg.biphoton
    samples = args.grid_samples or cfg.grid.samples
    det = default_detector_grid(b, samples, cfg.grid.halfwidth_radperum)
    img = coincidence_image(b, det)
    prefix = _prefix(args)
    record["outputs"] += [str(output.write_pgm(_with_suffix(prefix, ".pgm"), img)),
                          str(output.write_text(_with_suffix(prefix, ".csv"), output.image_csv(img, det.axis)))]
    ell = ellipticity(img)
    beta = mode_orientation_beta(b.geom)
    record["grids"] = {"detector_half_width_mm": det.half_width, "detector_samples": samples}
    record["diagnostics"] = {"ellipticity": ell.ratio, "major_axis_deg": math.degrees(ell.major_axis_angle),
                             "beta_deg": math.degrees(beta.beta), "beta_degenerate": beta.degenerate}
    print(f"alpha={b.geom.alpha_deg:g} deg  ellipticity={ell.ratio:.4f}  "
          f"major axis={math.degrees(ell.major_axis_angle):.2f} deg  beta={math.degrees(beta.beta):.2f} deg"
          + (" (degenerate)" if beta.degenerate else ""))


def cmd_movie(args, cfg: RunConfig, record):
    alphas = parse_range(f"{args.alpha_start}:{args.alpha_stop}:{args.alpha_step}")
    cfgs = [cfg.biphoton.with_alpha(a) for a in alphas]
    samples = args.grid_samples or cfg.grid.samples
    h = cfg.grid.halfwidth_radperum
    if h is None:
        h = max(auto_half_width(c) for c in cfgs)
    # one detector window for every frame
    det = default_detector_grid(cfgs[0], samples, h)
    frames = _run_pool(lambda c: coincidence_image(c, det), cfgs, args.threads)
    prefix = _prefix(args)
    for k, img in enumerate(frames):
        record["outputs"].append(str(output.write_pgm(_with_suffix(prefix, f"_{k:03d}.pgm"), img)))
    record["grids"] = {"detector_half_width_mm": det.half_width, "detector_samples": samples}
    record["alphas_deg"] = [float(a) for a in alphas]
    print(f"wrote {len(frames)} frames")


def _sweep_values(args, sub):
    param = args.sweep or {"oam": "alpha", "schmidt": "alpha", "concurrence": "L"}[sub]
    if param not in SWEEPS[sub]:
        raise ConfigError(f"{sub} cannot sweep {param!r}; choose from {', '.join(SWEEPS[sub])}")
    if args.range is not None:
        values = parse_range(args.range)
    elif args.sweep is None:
        values = None
    else:
        values = parse_range(DEFAULT_RANGES[sub][param])
    return param, values


def cmd_oam(args, cfg: RunConfig, record):
    param, values = _sweep_values(args, "oam")
    if values is None:
        if args.alpha is not None:
            values = np.array([cfg.biphoton.geom.alpha_deg])
        else:
            values = parse_range(DEFAULT_RANGES["oam"]["alpha"])
    alphas = [float(a) % 360.0 for a in values]
    radial = args.grid_samples or 400
    spectra = oam_alpha_sweep(cfg.biphoton, alphas, M=args.modes, radial_samples=radial, threads=args.threads)
    prefix = _prefix(args)
    record["outputs"].append(str(output.write_text(_with_suffix(prefix, ".csv"), oam_csv(alphas, spectra))))
    record["grids"] = {"radial_samples": radial, "max_m": args.modes}
    c0 = [s.weight(0) for s in spectra]
    print(f"C_0 range over alpha: {min(c0):.6f} .. {max(c0):.6f}")


def cmd_schmidt(args, cfg: RunConfig, record):
    param, values = _sweep_values(args, "schmidt")
    b = cfg.biphoton
    if values is None:
        values = np.array([b.geom.alpha_deg])
    samples = args.grid_samples or DEFAULT_SAMPLES
    cap = max(DEFAULT_CAP, samples)
    grid, ks = schmidt_sweep(b, param, values, samples, cfg.grid.halfwidth_radperum, args.threads, cap)
    prefix = _prefix(args)
    record["outputs"].append(str(output.write_text(_with_suffix(prefix, ".csv"), schmidt_csv(values, ks))))
    record["grids"] = {"kernel_half_width_radperum": grid.half_width, "kernel_samples": samples}
    record["sweep"] = param
    if args.dump_modes:
        if len(values) != 1:
            raise ConfigError("--dump-modes needs a single point (no --sweep)")
        kernel: KernelMatrix = build_kernel(b.with_param(param, values[0]), grid, cap)
        for k, mode in enumerate(kernel.modes(16)):
            inten = np.abs(mode) ** 2
            path = _with_suffix(prefix, f"_mode_{k:02d}.pgm")
            record["outputs"].append(str(output.write_pgm(path, inten / inten.max())))
    for v, k in zip(values, ks):
        print(f"{param}={v:g}  K={k:.6f}")


def cmd_concurrence(args, cfg: RunConfig, record):
    param, values = _sweep_values(args, "concurrence")
    two = TwoCrystalConfig(cfg.biphoton, cfg.rho_s_deg, cfg.rho_i_deg)
    if values is None:
        values = np.array([cfg.biphoton.geom.length_mm])
    samples = args.grid_samples or DEFAULT_SAMPLES
    states = concurrence_sweep(two, param, values, samples, args.threads, max(DEFAULT_CAP, samples))
    prefix = _prefix(args)
    record["outputs"].append(str(output.write_text(_with_suffix(prefix, ".csv"),
                                                   concurrence_csv(values, states))))
    record["grids"] = {"kernel_samples": samples}
    record["sweep"] = param
    if args.dump_rho:
        text = "".join(f"# {param} = {float(v):.17g}\n" + rho_text(s) for v, s in zip(values, states))
        record["outputs"].append(str(output.write_text(_with_suffix(prefix, "_rho.txt"), text)))
    for v, s in zip(values, states):
        print(f"{param}={v:g}  |xi|={abs(s.xi):.6f}  P={s.purity_P:.6f}  C={s.concurrence_C:.6f}")


COMMANDS = {"image": cmd_image, "movie": cmd_movie, "oam": cmd_oam,
            "schmidt": cmd_schmidt, "concurrence": cmd_concurrence}

# options replayed from a manifest, in argv order
_REPLAY_OPTIONS = ["grid_samples", "alpha", "sweep", "range", "w0", "ws", "length", "modes",
                   "alpha_start", "alpha_stop", "alpha_step", "dump_modes", "dump_rho"]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value configuration file")
    common.add_argument("--out", metavar="PREFIX", default="out/run", help="output path prefix")
    common.add_argument("--grid-samples", type=int, metavar="N",
                        help="detector samples (image, movie), kernel samples (schmidt, "
                             "concurrence) or radial samples (oam)")
    common.add_argument("--threads", type=int, default=1, metavar="N")
    common.add_argument("--w0", type=float, metavar="UM", help="override the pump waist")
    common.add_argument("--ws", type=float, metavar="UM", help="override the collection filter width")
    common.add_argument("--length", type=float, metavar="MM", help="override the crystal length")

    parser = argparse.ArgumentParser(prog="spdc-walkoff", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("image", parents=[common], help="coincidence image at one azimuth")
    p.add_argument("--alpha", type=float, metavar="DEG")

    p = sub.add_parser("movie", parents=[common], help="coincidence images over a range of azimuths")
    p.add_argument("--alpha-start", type=float, default=0.0)
    p.add_argument("--alpha-stop", type=float, default=360.0)
    p.add_argument("--alpha-step", type=float, default=15.0)

    p = sub.add_parser("oam", parents=[common], help="OAM weights versus azimuth")
    p.add_argument("--alpha", type=float, metavar="DEG")
    p.add_argument("--sweep", choices=SWEEPS["oam"])
    p.add_argument("--range", metavar="START:STOP:STEP")
    p.add_argument("--modes", type=int, default=DEFAULT_M, metavar="M", help="largest |m| reported")

    p = sub.add_parser("schmidt", parents=[common], help="Schmidt number, optionally swept")
    p.add_argument("--alpha", type=float, metavar="DEG")
    p.add_argument("--sweep", choices=SWEEPS["schmidt"])
    p.add_argument("--range", metavar="START:STOP:STEP")
    p.add_argument("--dump-modes", action="store_true", help="write the 16 leading Schmidt modes")

    p = sub.add_parser("concurrence", parents=[common], help="two-crystal polarization concurrence")
    p.add_argument("--sweep", choices=SWEEPS["concurrence"])
    p.add_argument("--range", metavar="START:STOP:STEP")
    p.add_argument("--dump-rho", action="store_true", help="write the polarization density matrices")

    sub.add_parser("selftest", help="run the built-in closed-form checks")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "selftest":
        return EXIT_NUMERIC if selftest.run() else 0
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    t0 = time.perf_counter()
    try:
        cfg = _load(args)
        record = {
            "subcommand": args.command,
            "config_text": dump_config(cfg),
            "options": {k: getattr(args, k) for k in _REPLAY_OPTIONS if hasattr(args, k)},
            "out": args.out,
            "threads": args.threads,
            "version": __version__,
            "outputs": [],
        }
        # single-threaded BLAS keeps every output bit-identical across --threads
        with threadpool_limits(limits=1):
            COMMANDS[args.command](args, cfg, record)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalDiagnostic, np.linalg.LinAlgError) as exc:
        print(f"numerical diagnostic: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    record["duration_s"] = time.perf_counter() - t0
    output.write_manifest(_with_suffix(Path(args.out), ".manifest.json"), record)
    return 0


def replay_argv(manifest: dict, config_path, out=None) -> list[str]:
    """Command line that regenerates a manifest's outputs.

    The config snapshot must already be written to ``config_path``; overrides
    were folded into it, so only non-override options are replayed.
    """
    argv = [manifest["subcommand"], "--config", str(config_path), "--out", out or manifest["out"]]
    for key in _REPLAY_OPTIONS:
        val = manifest["options"].get(key)
        if val is None or val is False or key in ("w0", "ws", "length", "alpha"):
            continue
        flag = "--" + key.replace("_", "-")
        argv += [flag] if val is True else [flag, repr(val) if isinstance(val, float) else str(val)]
    return argv


def replay(manifest_path, out=None, threads: int | None = None) -> int:
    manifest = json.loads(Path(manifest_path).read_text())
    with tempfile.TemporaryDirectory() as tmp:
        cfg_path = Path(tmp) / "snapshot.cfg"
        cfg_path.write_text(manifest["config_text"])
        argv = replay_argv(manifest, cfg_path, out)
        argv += ["--threads", str(threads or manifest["threads"])]
        return main(argv)


if __name__ == "__main__":
    sys.exit(main())
