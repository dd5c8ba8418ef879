"""Command-line entry point: ``mocha-stereo <subcommand> ...``."""

import argparse
import os
import sys

import numpy as np

from .config import RunConfig, load_config
from .io import FormatError, read_pfm, read_pgm, read_ppm, write_pfm, write_pgm, write_ppm
from .metrics import evaluate, format_report
from .motif import MotifBank, matrix_profile_1d
from .pipeline import PipelineWeights, VolumeObjective, match
from .refine import parse_rig
from .scene import synth_scene, two_plane_spec
from .train import fit_motif_bank, grad_check

SEED_KEYS = ("feature_seed", "motif_seed", "embed_seed", "agg_seed", "updater_seed", "remp_seed")


def scene_disparities(cfg):
    """Full-resolution disparities used for generated scenes: multiples of 4
    (whole quarter-resolution steps) up to 3/8 of the width."""
    hi = min(4 * (cfg.max_disp - 1), (3 * cfg.width) // 8)
    return list(range(4, hi + 1, 4))


def make_scenes(cfg, seeds):
    return [synth_scene(two_plane_spec(s, cfg.height, cfg.width, scene_disparities(cfg))) for s in seeds]


def _config(args):
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "iters", None) is not None:
        cfg = cfg.with_(iters=args.iters)
    if getattr(args, "weight_seed", None) is not None:
        cfg = cfg.with_(**{k: args.weight_seed for k in SEED_KEYS})
    return cfg


def cmd_synth(args):
    cfg = _config(args)
    I_l, I_r, d_gt, valid = make_scenes(cfg, [args.seed])[0]
    os.makedirs(args.out, exist_ok=True)
    write_ppm(os.path.join(args.out, "left.ppm"), I_l * 255)
    write_ppm(os.path.join(args.out, "right.ppm"), I_r * 255)
    write_pfm(os.path.join(args.out, "gt.pfm"), d_gt.astype(np.float32))
    write_pgm(os.path.join(args.out, "mask.pgm"), valid * 255)
    print(f"wrote scene {args.seed} ({cfg.height}x{cfg.width}) to {args.out}")


def cmd_match(args):
    cfg = _config(args)
    I_l = read_ppm(args.left).astype(np.float64) / 255.0
    I_r = read_ppm(args.right).astype(np.float64) / 255.0
    if I_l.shape != I_r.shape:
        raise ValueError(f"left {I_l.shape} and right {I_r.shape} differ in shape")
    _, H, W = I_l.shape
    cfg = cfg.with_(height=H, width=W)
    rig = None
    if args.rig:
        with open(args.rig) as fh:
            rig = parse_rig(fh.read())
    res = match(I_l, I_r, cfg, PipelineWeights.from_config(cfg), rig)
    write_pfm(args.out, res.disparity.astype(np.float32))
    print(f"wrote disparity {args.out}")
    if args.gt:
        d_gt, _ = read_pfm(args.gt)
        mask = read_pgm(args.mask) > 0 if args.mask else None
        report = evaluate(res.disparity, d_gt, cfg.tau, mask)
        metrics_path = args.metrics or os.path.splitext(args.out)[0] + ".metrics.txt"
        with open(metrics_path, "w") as fh:
            fh.write(format_report(report.lines()))
        print(format_report(report.lines()), end="")


def cmd_eval(args):
    d, _ = read_pfm(args.estimate)
    d_gt, _ = read_pfm(args.reference)
    if d.shape != d_gt.shape:
        raise ValueError(f"disparity shapes differ: {d.shape} vs {d_gt.shape}")
    mask = read_pgm(args.mask) > 0 if args.mask else None
    print(format_report(evaluate(d, d_gt, args.tau, mask).lines()), end="")


def cmd_gradcheck(args):
    cfg = _config(args).with_(max_disp=args.max_disp, dtype="float64")
    objective = VolumeObjective(make_scenes(cfg, [args.seed]), cfg)
    theta = objective.weights.bank.flat()
    rng = np.random.default_rng(args.seed)
    coords = rng.choice(theta.size, size=min(args.coords, theta.size), replace=False)
    res = grad_check(objective, theta, eps=args.eps, coords=coords)
    print(f"max_discrepancy {res.max_discrepancy!r}")


def cmd_fit(args):
    cfg = _config(args).with_(dtype="float64")
    objective = VolumeObjective(make_scenes(cfg, range(args.seed, args.seed + args.scenes)), cfg)
    bank, trace = fit_motif_bank(objective, steps=args.steps, lr=args.lr)
    for k, loss in enumerate(trace):
        print(f"step {k} loss {loss!r}")
    if args.out:
        bank.save(args.out)
        print(f"wrote motif bank {args.out}")


def cmd_motif_profile(args):
    with open(args.series) as fh:
        values = [float(v) for v in fh.read().replace(",", " ").split()]
    a, b, dist = matrix_profile_1d(values, args.L).motif
    print(f"motif {a} {b} distance {dist!r}")


def build_parser():
    p = argparse.ArgumentParser(prog="mocha-stereo", description="Motif-channel stereo matching toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic two-plane scene")
    s.add_argument("--config")
    s.add_argument("--seed", type=int, default=0, help="scene seed")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("match", help="run the full matching pipeline")
    s.add_argument("--config")
    s.add_argument("--left", required=True)
    s.add_argument("--right", required=True)
    s.add_argument("--gt", help="ground-truth PFM; enables the metrics file")
    s.add_argument("--mask", help="PGM of valid pixels (nonzero = valid)")
    s.add_argument("--rig", help="rig description file")
    s.add_argument("--out", required=True, help="output disparity PFM")
    s.add_argument("--metrics", help="metrics file (default: <out>.metrics.txt)")
    s.add_argument("--iters", type=int)
    s.add_argument("--seed", dest="weight_seed", type=int, help="seed for every weight generator")
    s.set_defaults(func=cmd_match)

    s = sub.add_parser("eval", help="compare two disparity PFMs")
    s.add_argument("estimate")
    s.add_argument("reference")
    s.add_argument("--mask")
    s.add_argument("--tau", type=float, default=3.0)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("gradcheck", help="finite-difference check of the motif-window gradient")
    s.add_argument("--config")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--coords", type=int, default=10)
    s.add_argument("--eps", type=float, default=1e-4)
    s.add_argument("--max-disp", type=int, default=8)
    s.set_defaults(func=cmd_gradcheck, weight_seed=None)

    s = sub.add_parser("fit", help="fit the motif windows by finite-difference descent")
    s.add_argument("--config")
    s.add_argument("--seed", type=int, default=0, help="first scene seed")
    s.add_argument("--scenes", type=int, default=4)
    s.add_argument("--steps", type=int, default=50)
    s.add_argument("--lr", type=float, default=0.5)
    s.add_argument("--out", help="write the fitted bank here")
    s.set_defaults(func=cmd_fit, weight_seed=None)

    s = sub.add_parser("motif-profile", help="matrix-profile motif of a text series")
    s.add_argument("series", help="file of whitespace- or comma-separated numbers")
    s.add_argument("--L", type=int, default=3)
    s.set_defaults(func=cmd_motif_profile)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError, FormatError) as exc:
        msg = " ".join(str(exc).split())
        print(f"mocha-stereo {args.command}: error: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
