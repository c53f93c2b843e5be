"""Command-line front end.

Every subcommand takes the default medium unless overridden.  Settings resolve in
the order: built-in defaults < ``--config`` file (flat ``key = value`` lines,
keys are long option names with dashes or underscores) < command-line flags.
Relative output paths land in ``--output-dir``, which defaults to
``$OAMROT_OUTPUT_DIR`` or the current directory.

Exit status: 0 on success, 2 for bad input, 3 for numeric-domain failures
(outside the monotone branch, degenerate correlation mask, ...).
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import magnetometer as mag
from .errors import DomainError
from .nmor_model import MediumParams, monotone_limit, rotation_angle, sweep, weak_field_slope
from .oam_state import ScalarPattern
from .pattern_image import ImageGeometry, NoiseSpec, add_noise, read_image, render, write_image
from .rotation_estimator import EstimatorConfig, estimate_rotation

EXIT_INPUT = 2
EXIT_DOMAIN = 3
OUTPUT_DIR_ENV = "OAMROT_OUTPUT_DIR"


def read_config(path) -> dict:
    out = {}
    with open(path) as f:
        for n, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected 'key = value'")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


# -- run configuration ------------------------------------------------------

def params_from_args(a) -> MediumParams:
    return MediumParams(Gamma=a.Gamma_mhz, gamma=a.gamma_ratio * a.Gamma_mhz, kappa2=a.kappa2,
                        Delta=a.detuning_mhz, d=a.cell_cm, d0=a.d0_cm, l=a.l,
                        larmor_coeff=a.larmor_mhz_per_gauss)


def geometry_from_args(a) -> ImageGeometry:
    cx = a.center_x if a.center_x is not None else (a.width - 1) / 2
    cy = a.center_y if a.center_y is not None else (a.height - 1) / 2
    return ImageGeometry(a.width, a.height, cx, cy, a.pixels_per_waist)


def noise_from_args(a, seed_offset: int = 0) -> NoiseSpec:
    return NoiseSpec(a.noise, a.sigma, a.peak_counts, a.seed + seed_offset)


def estimator_from_args(a) -> EstimatorConfig:
    ladder = tuple(float(x) for x in str(a.ladder).split(","))
    return EstimatorConfig(ladder, a.window_halfwidth, a.mask_r_min, a.mask_r_max, a.refine)


def _out_path(a, name) -> Path:
    p = Path(name)
    if not p.is_absolute():
        p = Path(a.output_dir) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


# -- library-level pipeline ---------------------------------------------------

def pipeline(B_true: float, params: MediumParams = MediumParams(), geometry: ImageGeometry = ImageGeometry(),
             noise: NoiseSpec = NoiseSpec(), estimator: EstimatorConfig = EstimatorConfig(),
             supersample: bool = False) -> dict:
    """Synthetic end-to-end measurement of one field value.

    Renders the zero-field reference and the target at ``theta(B_true)``,
    applies noise (target seed = reference seed + 1), estimates the rotation
    and inverts it on the monotone branch.
    """
    theta_true = rotation_angle(B_true, params)
    ref = render(ScalarPattern(params.l, rotation_angle(0.0, params)), geometry, supersample)
    tgt = render(ScalarPattern(params.l, theta_true), geometry, supersample)
    ref = add_noise(ref, noise)
    tgt = add_noise(tgt, NoiseSpec(noise.kind, noise.sigma, noise.peak_counts, noise.seed + 1))
    est = estimate_rotation(ref, tgt, estimator, params.l)
    b_mono = monotone_limit(params)
    B_est = mag.invert_theta(math.radians(est.angle), params, b_mono)
    return {
        "B_true": B_true,
        "theta_true_deg": math.degrees(theta_true),
        "theta_est_deg": est.angle,
        "peak_score": est.peak_score,
        "B_est": B_est,
        "error": B_est - B_true,
        "precision": mag.precision(mag.DEFAULT_ANGLE_ACCURACY, params, B_est, b_mono),
        "reference": ref,
        "target": tgt,
        "estimate": est,
    }


# -- subcommands ----------------------------------------------------------------

def _need(a, name, flag):
    if getattr(a, name) is None:
        raise ValueError(f"{flag} is required (flag or config key {name})")
    return getattr(a, name)


def cmd_theta(a):
    _need(a, "b_gauss", "--b-gauss")
    p = params_from_args(a)
    th = rotation_angle(a.b_gauss, p)
    if a.flip_sign:
        th = -th
    print(f"theta_deg = {math.degrees(th)!r}")
    print(f"theta_rad = {th!r}")


def cmd_sweep(a):
    p = params_from_args(a)
    if a.steps < 1:
        raise ValueError("steps must be >= 1")
    Bs = np.linspace(a.b_start, a.b_end, a.steps) if a.steps > 1 else np.array([a.b_start])
    path = _out_path(a, a.out)
    sign = -1.0 if a.flip_sign else 1.0
    with open(path, "w") as f:
        f.write("b_gauss,theta_deg\n")
        for s in sweep(p, Bs):
            f.write(f"{s.B!r},{sign * s.theta_deg!r}\n")
    print(f"wrote {len(Bs)} rows to {path}")


def cmd_render(a):
    _need(a, "b_gauss", "--b-gauss")
    p = params_from_args(a)
    th = rotation_angle(a.b_gauss, p)
    img = render(ScalarPattern(p.l, th), geometry_from_args(a), a.supersample, a.bit_depth)
    img = add_noise(img, noise_from_args(a))
    path = _out_path(a, a.out)
    write_image(img, path)
    print(f"theta_deg = {math.degrees(th)!r}")
    print(f"wrote {path}")


def cmd_estimate(a):
    g = geometry_from_args(a)
    ref = read_image(a.reference, pixels_per_waist=a.pixels_per_waist)
    tgt = read_image(a.target, pixels_per_waist=a.pixels_per_waist)
    if ref.geometry.width != g.width or ref.geometry.height != g.height:
        g = ImageGeometry.centered(ref.geometry.width, ref.geometry.height, a.pixels_per_waist)
    ref, tgt = replace(ref, geometry=g), replace(tgt, geometry=g)
    est = estimate_rotation(ref, tgt, estimator_from_args(a), a.l)
    print(f"angle_deg = {est.angle!r}")
    print(f"peak_score = {est.peak_score!r}")
    if a.curve_csv:
        path = _out_path(a, a.curve_csv)
        est.curve_finest.to_csv(path)
        print(f"wrote {path}")


def cmd_invert(a):
    _need(a, "theta_deg", "--theta-deg")
    p = params_from_args(a)
    th = -a.theta_deg if a.flip_sign else a.theta_deg
    B = mag.invert_theta(math.radians(th), p)
    print(f"b_gauss = {B!r}")
    print(f"b_mgauss = {B * 1e3!r}")


def cmd_pipeline(a):
    _need(a, "b_gauss", "--b-gauss")
    r = pipeline(a.b_gauss, params_from_args(a), geometry_from_args(a), noise_from_args(a),
                 estimator_from_args(a), a.supersample)
    if a.save_images:
        write_image(r["reference"], _out_path(a, "reference.pgm"))
        write_image(r["target"], _out_path(a, "target.pgm"))
    for k in ("B_true", "B_est", "error", "theta_true_deg", "theta_est_deg", "peak_score", "precision"):
        print(f"{k} = {r[k]!r}")


def cmd_calibrate(a):
    _need(a, "theta_deg", "--theta-deg")
    p = params_from_args(a)
    res = mag.calibrate_offset(a.theta_deg, p, a.method, a.slope_override, a.angle_accuracy)
    text = res.to_text()
    sys.stdout.write(text)
    if a.report:
        _out_path(a, a.report).write_text(text)


def cmd_fit(a):
    p = params_from_args(a)
    res = mag.fit_symmetry_center(mag.FieldSweepRecord.from_csv(a.data), p)
    text = res.to_text()
    sys.stdout.write(text)
    if a.report:
        _out_path(a, a.report).write_text(text)


def cmd_slope(a):
    p = params_from_args(a)
    print(f"slope_deg_per_gauss = {weak_field_slope(p)!r}")
    print(f"monotone_limit_gauss = {monotone_limit(p)!r}")


# -- parser -----------------------------------------------------------------

def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("medium")
    g.add_argument("--l", type=int, default=2, help="OAM number")
    g.add_argument("--Gamma-mhz", dest="Gamma_mhz", type=float, default=266.0)
    g.add_argument("--gamma-ratio", type=float, default=0.004, help="transit rate as a fraction of Gamma")
    g.add_argument("--kappa2", type=float, default=3.3)
    g.add_argument("--detuning-mhz", type=float, default=0.0)
    g.add_argument("--cell-cm", type=float, default=5.0)
    g.add_argument("--d0-cm", type=float, default=0.5)
    g.add_argument("--larmor-mhz-per-gauss", type=float, default=0.7)
    g.add_argument("--flip-sign", type=_bool, nargs="?", const=True, default=False,
                   help="report angles with the opposite orientation")

    g = parser.add_argument_group("image")
    g.add_argument("--width", type=int, default=512)
    g.add_argument("--height", type=int, default=512)
    g.add_argument("--center-x", type=float, default=None)
    g.add_argument("--center-y", type=float, default=None)
    g.add_argument("--pixels-per-waist", type=float, default=64.0)
    g.add_argument("--supersample", type=_bool, nargs="?", const=True, default=False)
    g.add_argument("--bit-depth", type=int, choices=(8, 16), default=16)
    g.add_argument("--noise", choices=("none", "gaussian", "poisson"), default="none")
    g.add_argument("--sigma", type=float, default=0.0)
    g.add_argument("--peak-counts", type=float, default=1000.0)
    g.add_argument("--seed", type=int, default=0)

    g = parser.add_argument_group("estimator")
    g.add_argument("--ladder", default="4.5,0.45,0.045,0.0045", help="comma-separated step sizes (deg)")
    g.add_argument("--window-halfwidth", type=float, default=2.0)
    g.add_argument("--mask-r-min", type=float, default=0.25)
    g.add_argument("--mask-r-max", type=float, default=2.5)
    g.add_argument("--refine", type=_bool, nargs="?", const=True, default=False)

    parser.add_argument("--config", help="key = value settings file")
    parser.add_argument("--output-dir", default=os.environ.get(OUTPUT_DIR_ENV, "."))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oamrot", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        _common(p)
        p.set_defaults(func=func)
        return p

    p = add("theta", cmd_theta, "rotation angle at one field")
    p.add_argument("--b-gauss", "--b", dest="b_gauss", type=float, default=None)

    p = add("sweep", cmd_sweep, "dispersion curve to CSV")
    p.add_argument("--b-start", type=float, default=-138.0)
    p.add_argument("--b-end", type=float, default=138.0)
    p.add_argument("--steps", type=int, default=277)
    p.add_argument("--out", default="sweep.csv")

    p = add("render", cmd_render, "render the pattern at theta(B) to PGM")
    p.add_argument("--b-gauss", "--b", dest="b_gauss", type=float, default=None)
    p.add_argument("--out", default="pattern.pgm")

    p = add("estimate", cmd_estimate, "rotation between two PGM images")
    p.add_argument("reference")
    p.add_argument("target")
    p.add_argument("--curve-csv", default=None)

    p = add("invert", cmd_invert, "field from a rotation angle")
    p.add_argument("--theta-deg", type=float, default=None)

    p = add("pipeline", cmd_pipeline, "render, estimate and invert one field value")
    p.add_argument("--b-gauss", "--b", dest="b_gauss", type=float, default=None)
    p.add_argument("--save-images", type=_bool, nargs="?", const=True, default=False)

    p = add("calibrate", cmd_calibrate, "background field from the zero-current offset angle")
    p.add_argument("--theta-deg", type=float, default=None)
    p.add_argument("--method", choices=("offset_slope", "full_inversion"), default="offset_slope")
    p.add_argument("--slope-override", type=float, default=None, help="deg/G; replaces the model slope")
    p.add_argument("--angle-accuracy", type=float, default=mag.DEFAULT_ANGLE_ACCURACY)
    p.add_argument("--report", default=None)

    p = add("fit", cmd_fit, "symmetry-center fit of a coil_gauss,theta_deg CSV")
    p.add_argument("data")
    p.add_argument("--report", default=None)

    add("slope", cmd_slope, "weak-field slope and monotone-branch limit")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = read_config(known.config)
    seen = set()
    # subparsers hold the real defaults
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            dests = {a.dest: a for a in sp._actions}
            mine = {k: v for k, v in cfg.items() if k in dests}
            seen.update(mine)
            sp.set_defaults(**{k: (dests[k].type(v) if dests[k].type else v) for k, v in mine.items()})
    unknown = set(cfg) - seen
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        args.func(args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_INPUT
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
