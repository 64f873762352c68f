"""Batch command-line front end.

Subcommands compose only through the documented file layout: synthesize
writes scene directories (gt.btf, frame_XX.btf, meta.json), align adds
warps.json, reconstruct writes an SR tensor plus a per-iteration CSV,
evaluate writes metrics.json.  Every command is deterministic given its
flags and seed.
"""

import argparse
import csv
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .align import AlignConfig, align_burst
from .image_io import read_srgb_png, read_tensor, save_png, write_tensor
from .metrics import psnr, ssim
from .operators import AffineWarp
from .solver import load_solver_config, reconstruct
from .synthesis import (CameraParams, SynthConfig, load_scene, save_scene,
                        synthesize)

WARPS_SCHEMA_VERSION = 1
METRICS_SCHEMA_VERSION = 1


def _parse_range(text):
    lo, hi = (float(p) for p in text.split(","))
    return lo, hi


def _scene_seed(seed, index):
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def cmd_synthesize(args):
    in_dir = Path(args.input)
    out_dir = Path(args.out)
    pngs = sorted(in_dir.glob("*.png"))
    if not pngs:
        print(f"no PNG inputs in {in_dir}", file=sys.stderr)
        return 1

    def one_scene(index_path):
        index, path = index_path
        srgb = read_srgb_png(path)
        h, w = srgb.shape[:2]
        if h % (2 * args.scale) or w % (2 * args.scale):
            print(f"[{path.stem}] skipped: {h}x{w} not divisible by "
                  f"{2 * args.scale}", file=sys.stderr)
            return False
        seed = _scene_seed(args.seed, index)
        cfg = SynthConfig(
            burst_size=args.burst, scale=args.scale,
            max_translation=args.max_trans, max_rotation=args.max_rot,
            shot_range=args.noise_shot, read_range=args.noise_read,
            seed=seed)
        rng = np.random.default_rng(seed)
        cam = (CameraParams.random_gains(rng) if args.randomize_gains
               else CameraParams())
        burst, gt, warps, noise = synthesize(srgb, cfg, cam, rng)
        save_scene(out_dir / path.stem, burst, gt, warps, noise, cfg, cam)
        print(f"[{path.stem}] wrote {len(burst)} frames "
              f"{burst.frame_shape[1]}x{burst.frame_shape[0]}x4")
        return True

    jobs = max(1, args.jobs)
    if jobs == 1:
        results = [one_scene(ip) for ip in enumerate(pngs)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one_scene, enumerate(pngs)))
    return 0 if any(results) else 1


def cmd_align(args):
    burst, _, _, _, meta = load_scene(args.scene)
    cfg = AlignConfig(model=args.model, max_iters=args.max_iters,
                      eps=args.eps, pyramid_levels=args.levels,
                      scale=meta["scale"])
    result = align_burst(burst, cfg)
    doc = {
        "version": WARPS_SCHEMA_VERSION,
        "frames": [
            {"matrix": w.matrix.ravel().tolist(), "rho": rho,
             "converged": conv}
            for w, rho, conv in zip(result.warps, result.final_rho,
                                    result.converged)],
    }
    out = Path(args.scene) / "warps.json"
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    n_ok = sum(result.converged)
    print(f"aligned {n_ok}/{len(burst)} frames -> {out}")
    return 0


def _load_estimated_warps(scene_dir):
    path = Path(scene_dir) / "warps.json"
    if not path.exists():
        raise OSError(f"{path} not found; run the align command first")
    with open(path) as fh:
        doc = json.load(fh)
    return [AffineWarp(np.asarray(f["matrix"], dtype=np.float64).reshape(2, 3))
            for f in doc["frames"]]


def cmd_reconstruct(args):
    burst, _, gt_warps, _, meta = load_scene(args.scene)
    cfg, prior = load_solver_config(args.config)
    cfg = dataclasses.replace(cfg, scale=meta["scale"])
    warps = (gt_warps if args.use_gt_warps
             else _load_estimated_warps(args.scene))
    report = reconstruct(burst, warps, prior, cfg)
    out = Path(args.out)
    write_tensor(report.x_final, out)

    sidecar = out.with_suffix(".csv")
    with open(sidecar, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "data_fidelity", "objective",
                         "residual_norm", "step_norm"])
        for k in range(cfg.iterations):
            obj = report.objective[k]
            writer.writerow([k + 1, f"{report.data_fidelity[k]:.10e}",
                             "" if obj is None else f"{obj:.10e}",
                             f"{report.residual_norm[k]:.10e}",
                             f"{report.step_norm[k]:.10e}"])

    if args.png:
        from .synthesis import linear_raw_to_srgb
        cam_doc = meta.get("camera", {})
        cam = CameraParams(
            rgb_gains=tuple(cam_doc.get("rgb_gains", (1.0, 1.0, 1.0))),
            ccm=np.asarray(cam_doc.get("ccm", np.eye(3).tolist())))
        save_png(linear_raw_to_srgb(report.x_final, cam), args.png)
    h, w = report.x_final.shape[:2]
    print(f"wrote {w}x{h}x3 SR tensor -> {out} (report: {sidecar})")
    return 0


def cmd_evaluate(args):
    if len(args.sr) != len(args.scene):
        print("need one --sr per --scene", file=sys.stderr)
        return 1
    per_scene = []
    for scene, sr_path in zip(args.scene, args.sr):
        _, gt, _, _, _ = load_scene(scene)
        sr = np.clip(read_tensor(sr_path).astype(np.float64), 0.0, 1.0)
        if sr.shape != gt.shape:
            print(f"[{scene}] shape mismatch: sr {sr.shape} vs gt {gt.shape}",
                  file=sys.stderr)
            return 1
        doc = {"version": METRICS_SCHEMA_VERSION,
               "psnr": psnr(sr, np.clip(gt, 0.0, 1.0)),
               "ssim": ssim(sr, np.clip(gt, 0.0, 1.0))}
        with open(Path(scene) / "metrics.json", "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        per_scene.append(doc)
        print(f"[{Path(scene).name}] psnr={doc['psnr']:.4f} dB "
              f"ssim={doc['ssim']:.6f}")
    agg = {"version": METRICS_SCHEMA_VERSION,
           "scenes": len(per_scene),
           "psnr": float(np.mean([d["psnr"] for d in per_scene])),
           "ssim": float(np.mean([d["ssim"] for d in per_scene]))}
    print(json.dumps(agg))
    return 0


def cmd_selftest(args):
    from . import operators as ops
    from .diagnostics import run_all

    warp_adjoint_fn = None
    if args.break_adjoint:
        def warp_adjoint_fn(img, w):
            return ops.warp_adjoint(img, w) + 0.01
    rows = run_all(size=args.size, trials=args.trials, seed=args.seed,
                   warp_adjoint_fn=warp_adjoint_fn)
    width = max(len(r.name) for r in rows)
    failures = []
    for r in rows:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {r.value:12.4e}  <= {r.tolerance:.4e}  "
              f"{status}")
        if not r.passed:
            failures.append(r.name)
    if failures:
        print("failed properties: " + ", ".join(failures), file=sys.stderr)
        return 1
    print("all properties passed")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rawburst",
        description="Raw-burst super-resolution: synthesize, align, "
                    "reconstruct, evaluate, selftest.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize",
                       help="generate scene directories from sRGB PNGs")
    p.add_argument("--input", required=True, help="directory of sRGB PNGs")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--burst", type=int, default=14)
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-trans", type=float, default=4.0,
                   help="max |translation| in HR pixels")
    p.add_argument("--max-rot", type=float, default=1.0,
                   help="max |rotation| in degrees")
    p.add_argument("--noise-shot", type=_parse_range, default=(1e-4, 1e-2),
                   metavar="LO,HI")
    p.add_argument("--noise-read", type=_parse_range, default=(1e-6, 1e-4),
                   metavar="LO,HI")
    p.add_argument("--randomize-gains", action="store_true",
                   help="randomize red/blue white-balance gains")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("align", help="estimate per-frame warps via ECC")
    p.add_argument("--scene", required=True)
    p.add_argument("--model", choices=["translation", "euclidean"],
                   default="euclidean")
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--levels", type=int, default=2)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("reconstruct", help="run the iterative solver")
    p.add_argument("--scene", required=True)
    p.add_argument("--config", required=True, help="solver JSON config")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--use-gt-warps", action="store_true")
    src.add_argument("--use-estimated-warps", action="store_true")
    p.add_argument("--out", required=True, help="output .btf path")
    p.add_argument("--png", default=None, help="optional sRGB preview path")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="PSNR/SSIM against ground truth")
    p.add_argument("--scene", action="append", required=True)
    p.add_argument("--sr", action="append", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("selftest", help="operator and solver property checks")
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--break-adjoint", action="store_true",
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
