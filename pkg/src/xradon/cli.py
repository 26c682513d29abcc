"""Command-line front end: phantom generation, forward data, inversion, checks.

All randomness flows from the single config seed; identical configs
produce byte-identical outputs.  A JSON config file may supply any
field of RunConfig; command-line flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import inversion, phantom as ph_mod, xform
from .geometry import VolumeGrid, fibonacci_sphere
from .hilbert import derivative


@dataclass(frozen=True)
class RunConfig:
    phantom: str = ""
    branch: str = inversion.BRANCH_XRAY
    nodes: int = 2000
    s_min: float = -8.0
    s_max: float = 8.0
    s_count: int = 801
    vol_min: float = -3.0
    vol_max: float = 3.0
    vol_dims: int = 33
    diff_step: float = 1e-4
    normalization: float = inversion.XRAY_BRANCH_CONSTANT
    band: float = 0.05
    points: int = 100
    outdir: str = "out"
    seed: int = 0

    def validate(self):
        if self.branch not in inversion.BRANCHES:
            raise CliError(f"unknown branch {self.branch!r}")
        for name in ("nodes", "s_count", "vol_dims", "points"):
            if getattr(self, name) <= 0:
                raise CliError(f"config field {name} must be positive")
        for name in ("diff_step", "band"):
            if getattr(self, name) <= 0:
                raise CliError(f"config field {name} must be positive")
        if self.s_max <= self.s_min or self.vol_max <= self.vol_min:
            raise CliError("empty s-grid or volume extent")


class CliError(Exception):
    """User-facing failure; message names the violated precondition."""


def load_config(args):
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"unreadable config file {args.config}: {exc}") from exc
        known = {f.name for f in fields(RunConfig)}
        unknown = set(raw) - known
        if unknown:
            raise CliError(f"unknown config keys: {sorted(unknown)}")
        cfg = replace(cfg, **raw)
    overrides = {
        f.name: getattr(args, f.name)
        for f in fields(RunConfig)
        if getattr(args, f.name, None) is not None
    }
    cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def _load_phantom(cfg):
    if not cfg.phantom:
        raise CliError("no phantom file given (set --phantom or the config field)")
    try:
        return ph_mod.load_phantom(cfg.phantom)
    except (OSError, ValueError) as exc:
        raise CliError(f"unreadable phantom file {cfg.phantom}: {exc}") from exc


def _volume_grid(cfg):
    d = cfg.vol_dims
    spacing = (cfg.vol_max - cfg.vol_min) / (d - 1) if d > 1 else 1.0
    return VolumeGrid(
        origin=(cfg.vol_min,) * 3, spacing=(spacing,) * 3, dims=(d, d, d)
    )


class _OutputSet:
    """Tracks written files so a failed command leaves no partial outputs."""

    def __init__(self, outdir):
        self.outdir = outdir
        self.written = []
        os.makedirs(outdir, exist_ok=True)

    def path(self, name):
        p = os.path.join(self.outdir, name)
        self.written.append(p)
        return p

    def discard(self):
        for p in self.written:
            try:
                os.remove(p)
            except OSError:
                pass


def _write_manifest(out, cfg, files):
    manifest = {
        "config": {
            f.name: getattr(cfg, f.name)
            for f in fields(RunConfig)
            if f.name != "outdir"
        },
        "files": files,
    }
    with open(out.path("manifest.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def cmd_phantom_gen(args):
    presets = {
        "unit-gaussian": ph_mod.gaussian_phantom(),
        "two-gaussians": ph_mod.Phantom(
            (
                ph_mod.Primitive(ph_mod.GAUSSIAN, (1.0, 0.0, 0.0), 1.0, 1.0),
                ph_mod.Primitive(ph_mod.GAUSSIAN, (-1.0, 0.0, 0.0), 1.0, 1.0),
            ),
            7.0,
        ),
        "gaussian-ball": ph_mod.Phantom(
            (
                ph_mod.Primitive(ph_mod.GAUSSIAN, (0.0, 0.0, 0.0), 1.0, 1.0),
                ph_mod.Primitive(ph_mod.BALL, (2.0, 0.0, 0.0), 0.5, 1.0),
            ),
            6.0,
        ),
    }
    if args.preset not in presets:
        raise CliError(f"unknown preset {args.preset!r} (choose from {sorted(presets)})")
    ph_mod.save_phantom(presets[args.preset], args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_forward(args):
    cfg = load_config(args)
    ph = _load_phantom(cfg)
    quad = fibonacci_sphere(cfg.nodes)
    out = _OutputSet(cfg.outdir)
    try:
        files = []
        if cfg.branch == inversion.BRANCH_XRAY:
            rng = np.random.default_rng(cfg.seed)
            pts = inversion.sample_ball_points(rng, cfg.points, ph.support_radius / 4.0)
            xs = np.repeat(pts, quad.count, axis=0)
            ns = np.tile(quad.nodes, (cfg.points, 1))
            values = ph_mod.halfline_integral(ph, xs, ns)
            name = "xray.csv"
            xform.write_xray_csv(out.path(name), xs, ns, values)
            files.append(name)
        else:
            width = len(str(quad.count - 1))
            for k, node in enumerate(quad.nodes):
                rp = xform.radon_profile(ph, node, cfg.s_min, cfg.s_max, cfg.s_count)
                name = f"profile_{k:0{width}d}.csv"
                xform.write_profile_csv(out.path(name), rp)
                files.append(name)
        _write_manifest(out, cfg, files)
    except Exception:
        out.discard()
        raise
    print(f"wrote {len(out.written)} files to {cfg.outdir}")
    return 0


def _reconstruct(ph, cfg):
    quad = fibonacci_sphere(cfg.nodes)
    grid = _volume_grid(cfg)
    if cfg.branch == inversion.BRANCH_XRAY:
        rcfg = inversion.ReconstructionConfig(
            quad, cfg.diff_step, cfg.normalization, inversion.BRANCH_XRAY
        )
        vol = inversion.reconstruct_volume_xray(
            inversion.make_phantom_xray_data(ph), grid, rcfg
        )
        return vol, rcfg
    data = inversion.build_radon_dataset(ph, quad, cfg.s_min, cfg.s_max, cfg.s_count)
    if cfg.branch == inversion.BRANCH_RADON:
        rcfg = inversion.ReconstructionConfig(
            quad, cfg.diff_step, cfg.normalization, inversion.BRANCH_RADON
        )
        return inversion.reconstruct_volume_radon(data, grid, rcfg), rcfg
    rcfg = inversion.ReconstructionConfig(
        quad, cfg.diff_step, 1.0, inversion.BRANCH_CLASSICAL
    )
    return inversion.reconstruct_volume_classical(data, grid, quad), rcfg


def _metrics(ph, vol):
    """Relative L2 / max error against the analytic density, support interior only."""
    pts = vol.points()
    inside = np.linalg.norm(pts, axis=1) <= ph.support_radius
    truth = ph_mod.evaluate(ph, pts[inside])
    rec = vol.samples[inside]
    truth_norm = float(np.linalg.norm(truth))
    if truth_norm == 0.0:
        return float("nan"), float(np.max(np.abs(rec), initial=0.0))
    rel_l2 = float(np.linalg.norm(rec - truth)) / truth_norm
    max_err = float(np.max(np.abs(rec - truth)))
    return rel_l2, max_err


def cmd_invert(args):
    cfg = load_config(args)
    ph = _load_phantom(cfg)
    out = _OutputSet(cfg.outdir)
    try:
        vol, rcfg = _reconstruct(ph, cfg)
        inversion.write_volume(
            out.path("volume.raw"),
            out.path("volume.json"),
            vol,
            branch=cfg.branch,
            normalization=rcfg.normalization,
            quadrature_count=cfg.nodes,
            diff_step=cfg.diff_step,
        )
        rel_l2, max_err = _metrics(ph, vol)
        try:
            cal = inversion.calibrate_normalization(ph, rcfg, seed=cfg.seed + 1)
            fitted = cal.scale
        except ValueError:
            fitted = float("nan")
        with open(out.path("metrics.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("rel_l2,max_err,fitted_scale\n")
            fh.write(f"{rel_l2:.17g},{max_err:.17g},{fitted:.17g}\n")
    except Exception:
        out.discard()
        raise
    print(f"branch={cfg.branch} rel_l2={rel_l2:.6g} max_err={max_err:.6g}")
    return 0


def cmd_check(args):
    cfg = load_config(args)
    ph = _load_phantom(cfg)
    if not ph.is_smooth:
        raise CliError("check requires a smooth (gaussian-only) phantom")
    quad = fibonacci_sphere(cfg.nodes)
    out = _OutputSet(cfg.outdir)
    try:
        xdata = inversion.make_phantom_xray_data(ph)
        n = np.array([1.0, 0.0, 0.0])
        sweep = np.linspace(-2.0, 2.0, 41)
        eps = 1e-5
        with open(out.path("grangeat.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("s,lhs,rhs,abs_error\n")
            for s in sweep:
                x = s * n
                lhs = inversion.grangeat_convert(xdata, x, n, quad, cfg.band)
                rhs = -(
                    ph_mod.plane_integral(ph, n, s + eps)
                    - ph_mod.plane_integral(ph, n, s - eps)
                ) / (2.0 * eps)
                fh.write(f"{s:.17g},{lhs:.17g},{rhs:.17g},{abs(lhs - rhs):.17g}\n")
        rng = np.random.default_rng(cfg.seed)
        pts = inversion.sample_ball_points(rng, 20, ph.support_radius / 4.0)
        with open(out.path("lemma9.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("x1,x2,x3,left,right,ratio,difference\n")
            for p in pts:
                rep = inversion.lemma9_diagnostic(ph, p, quad)
                fh.write(
                    f"{p[0]:.17g},{p[1]:.17g},{p[2]:.17g},"
                    f"{rep.left:.17g},{rep.right:.17g},{rep.ratio:.17g},{rep.difference:.17g}\n"
                )
    except Exception:
        out.discard()
        raise
    print(f"wrote checks to {cfg.outdir}")
    return 0


def cmd_calibrate(args):
    cfg = load_config(args)
    ph = _load_phantom(cfg)
    quad = fibonacci_sphere(cfg.nodes)
    rcfg = inversion.ReconstructionConfig(
        quad, cfg.diff_step, cfg.normalization, cfg.branch
    )
    cal = inversion.calibrate_normalization(ph, rcfg, seed=cfg.seed + 1)
    out = _OutputSet(cfg.outdir)
    try:
        result = {
            "branch": cfg.branch,
            "scale": cal.scale,
            "residual": cal.residual,
            "derived_xray_constant": inversion.XRAY_BRANCH_CONSTANT,
        }
        with open(out.path("calibration.json"), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(result, fh, sort_keys=True, indent=2)
            fh.write("\n")
    except Exception:
        out.discard()
        raise
    print(f"branch={cfg.branch} scale={cal.scale:.8g} residual={cal.residual:.4g}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="xradon",
        description="Analytic X-ray / Radon transform toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("phantom-gen", help="write a preset phantom file")
    gen.add_argument("--out", required=True)
    gen.add_argument("--preset", default="unit-gaussian")
    gen.set_defaults(func=cmd_phantom_gen)

    def add_run_flags(p):
        p.add_argument("--config", help="JSON config file (flags win)")
        p.add_argument("--phantom")
        p.add_argument("--branch", choices=inversion.BRANCHES)
        p.add_argument("--nodes", type=int)
        p.add_argument("--s-min", dest="s_min", type=float)
        p.add_argument("--s-max", dest="s_max", type=float)
        p.add_argument("--s-count", dest="s_count", type=int)
        p.add_argument("--vol-min", dest="vol_min", type=float)
        p.add_argument("--vol-max", dest="vol_max", type=float)
        p.add_argument("--vol-dims", dest="vol_dims", type=int)
        p.add_argument("--diff-step", dest="diff_step", type=float)
        p.add_argument("--normalization", type=float)
        p.add_argument("--band", type=float)
        p.add_argument("--points", type=int)
        p.add_argument("--outdir")
        p.add_argument("--seed", type=int)

    for name, func, help_text in (
        ("forward", cmd_forward, "write forward data (x-ray CSV or Radon profiles)"),
        ("invert", cmd_invert, "reconstruct a volume and report metrics"),
        ("check", cmd_check, "Grangeat sweep and spherical-average diagnostic"),
        ("calibrate", cmd_calibrate, "fit the normalization constant"),
    ):
        p = sub.add_parser(name, help=help_text)
        add_run_flags(p)
        p.set_defaults(func=func)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
