"""Acceptance suite: one test per release criterion, each printing a
single PASS/FAIL line with the measured values.

Run with `pytest tests/test_acceptance.py -v -s` to see the criterion
lines as they complete.
"""

import json
import math
import time

import numpy as np
import pytest

from rawburst.align import AlignConfig, align_burst
from rawburst.cli import main as cli_main
from rawburst.image_io import Burst, save_png
from rawburst.metrics import psnr, ssim
from rawburst.operators import (AffineWarp, DegradationConfig, degrade,
                                degrade_adjoint, downsample,
                                downsample_adjoint, mosaick, mosaick_adjoint,
                                operator_norm_estimate, warp, warp_adjoint)
from rawburst.priors import IdentityPrior, TotalVariationPrior
from rawburst.solver import (SolverConfig, initialize, objective, reconstruct,
                             _residual_frames)
from rawburst.synthesis import SynthConfig, synthesize
from conftest import mean_endpoint_error, textured_srgb


def report(index, name, passed, detail):
    line = f"ACCEPTANCE {index} [{name}]: {'PASS' if passed else 'FAIL'} ({detail})"
    print("\n" + line)
    assert passed, line


def residual_norm_at(x, burst, warps, scale):
    frames = _residual_frames(x, burst, warps, DegradationConfig(scale))
    return float(np.sqrt(sum(np.sum(r ** 2) for r in frames)))


def test_criterion_1_adjoint_suite():
    t0 = time.time()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        x = rng.random((32, 32, 3))
        y = rng.random((32, 32, 3))
        w = AffineWarp.rotation_about(rng.uniform(-1.5, 1.5), 16, 16,
                                      tx=rng.uniform(-3, 3),
                                      ty=rng.uniform(-3, 3))
        worst = max(worst, abs(
            np.vdot(warp(x, w), y) - np.vdot(x, warp_adjoint(y, w)))
            / (np.linalg.norm(x) * np.linalg.norm(y)))

        y_lo = rng.random((16, 16, 3))
        worst = max(worst, abs(
            np.vdot(downsample(x, 2), y_lo)
            - np.vdot(x, downsample_adjoint(y_lo, 2)))
            / (np.linalg.norm(x) * np.linalg.norm(y_lo)))

        y_raw = rng.random((16, 16, 4))
        worst = max(worst, abs(
            np.vdot(mosaick(x), y_raw) - np.vdot(x, mosaick_adjoint(y_raw)))
            / (np.linalg.norm(x) * np.linalg.norm(y_raw)))

        batch = int(rng.integers(1, 5))
        warps = [AffineWarp.rotation_about(rng.uniform(-1, 1), 16, 16,
                                           tx=rng.uniform(-2, 2),
                                           ty=rng.uniform(-2, 2))
                 for _ in range(batch)]
        cfg = DegradationConfig(scale=2)
        frames = [rng.random((8, 8, 4)) for _ in range(batch)]
        fx = degrade(x, warps, cfg)
        fty = degrade_adjoint(Burst(frames=frames), warps, cfg)
        num = sum(float(np.vdot(a, b)) for a, b in zip(fx.frames, frames))
        ynorm = math.sqrt(sum(float(np.sum(f ** 2)) for f in frames))
        worst = max(worst,
                    abs(num - float(np.vdot(x, fty)))
                    / (np.linalg.norm(x) * ynorm))
    elapsed = time.time() - t0
    report(1, "adjoint suite", worst <= 1e-5 and elapsed < 10,
           f"max gap {worst:.2e} <= 1e-5, {elapsed:.1f}s < 10s")


def test_criterion_2_spectral_bound():
    t0 = time.time()
    rng = np.random.default_rng(1)
    cfg = DegradationConfig(scale=4)
    results = []
    ok = True
    for batch in (1, 4, 14):
        warps = [AffineWarp.identity()] + [
            AffineWarp.rotation_about(rng.uniform(-1, 1), 32, 32,
                                      tx=rng.uniform(-4, 4),
                                      ty=rng.uniform(-4, 4))
            for _ in range(batch - 1)]
        est = operator_norm_estimate(warps, cfg, (64, 64), iters=30, seed=0)
        ok = ok and est <= batch * (1 + 1e-3)
        results.append(f"B={batch}: {est:.3f}<={batch * 1.001:.3f}")
    elapsed = time.time() - t0
    report(2, "spectral bound", ok and elapsed < 30,
           "; ".join(results) + f", {elapsed:.1f}s < 30s")


def test_criterion_3_mm_monotone_descent():
    t0 = time.time()
    worst = -math.inf
    for seed in range(5):
        srgb = textured_srgb(np.random.default_rng(200 + seed), 64)
        scfg = SynthConfig(burst_size=8, scale=4, max_translation=4.0,
                           max_rotation=1.0, shot_range=(1e-3, 1e-3),
                           read_range=(1e-5, 1e-5), seed=seed)
        burst, _, warps, _ = synthesize(srgb, scfg)
        prior = TotalVariationPrior()
        cfg = SolverConfig(iterations=10, scale=4, lam=0.5,
                           extrapolation="none")  # alpha defaults to B
        x0 = initialize(burst, warps, cfg)
        objs = [objective(x0, burst, warps, prior, cfg)]
        rep = reconstruct(burst, warps, prior, cfg, x0=x0)
        objs += rep.objective
        worst = max(worst, max(b - a for a, b in zip(objs, objs[1:])))
    elapsed = time.time() - t0
    report(3, "MM monotone descent", worst <= 1e-8 and elapsed < 120,
           f"worst objective increase {worst:.2e} <= 1e-8, "
           f"{elapsed:.0f}s < 120s")


def test_criterion_4_noise_free_consistency():
    # The 1/alpha step at alpha=B contracts the residual too slowly for a
    # tenfold drop in ten stages when downsampling shrinks the normal
    # operator's spectrum; alpha=1.5 still dominates the measured spectral
    # bound (checked below), so the surrogate stays a majorizer, and
    # momentum does the rest.
    t0 = time.time()
    srgb = textured_srgb(np.random.default_rng(4), 64)
    scfg = SynthConfig(burst_size=14, scale=4, max_translation=4.0,
                       max_rotation=1.0, shot_range=(1e-300, 1e-300),
                       read_range=(1e-300, 1e-300), seed=4)
    burst, gt, warps, _ = synthesize(srgb, scfg)
    alpha = 1.5
    nrm = operator_norm_estimate(warps, DegradationConfig(4), (64, 64),
                                 iters=30, seed=0)
    cfg = SolverConfig(iterations=10, scale=4, lam=0.0, sigma=0.02,
                       alpha=alpha, extrapolation="fista",
                       monotone_guard=False)
    x0 = initialize(burst, warps, cfg)
    r_init = residual_norm_at(x0, burst, warps, 4)
    rep = reconstruct(burst, warps, IdentityPrior(), cfg, x0=x0)
    ratio = rep.residual_norm[-1] / r_init
    elapsed = time.time() - t0
    report(4, "noise-free consistency",
           ratio <= 0.10 and nrm < alpha and elapsed < 60,
           f"final/initial residual {ratio:.3f} <= 0.10 in K=10 "
           f"(|A'A|~{nrm:.2f} < alpha={alpha}), {elapsed:.0f}s < 60s")


def test_criterion_5_ecc_recovery():
    errors = []
    converged_all = []
    for seed in range(20):
        srgb = textured_srgb(np.random.default_rng(300 + seed), 768)
        scfg = SynthConfig(burst_size=5, scale=4, max_translation=2.0,
                           max_rotation=1.0, shot_range=(1e-3, 1e-3),
                           read_range=(1e-5, 1e-5), seed=seed)
        burst, _, warps_gt, _ = synthesize(srgb, scfg)
        result = align_burst(burst, AlignConfig(scale=4))
        for wg, we, conv in zip(warps_gt[1:], result.warps[1:],
                                result.converged[1:]):
            errors.append(mean_endpoint_error(wg, we, (768, 768)))
            converged_all.append(conv)
    mean_epe = float(np.mean(errors))

    # Fallback contract: a frame of pure noise ends as identity with
    # converged False, leaving the other frames untouched.
    srgb = textured_srgb(np.random.default_rng(300), 384)
    scfg = SynthConfig(burst_size=4, scale=4, max_translation=2.0,
                       max_rotation=0.5, shot_range=(1e-4, 1e-4),
                       read_range=(1e-6, 1e-6), seed=77)
    burst, _, _, _ = synthesize(srgb, scfg)
    frames = [f.copy() for f in burst.frames]
    frames[2] = np.random.default_rng(1234).random(frames[2].shape)
    result = align_burst(Burst(frames=frames), AlignConfig(scale=4))
    fallback_ok = (result.converged[2] is False
                   and result.warps[2].is_identity())

    report(5, "ECC recovery", mean_epe < 0.1 and fallback_ok,
           f"mean endpoint error {mean_epe:.4f} < 0.1 HR px over "
           f"{len(errors)} frames ({sum(converged_all)} converged); "
           f"noise-frame fallback={'ok' if fallback_ok else 'BROKEN'}")


def test_criterion_6_burst_size_trend():
    t0 = time.time()
    sizes = (2, 4, 8, 14)
    mses = {b: [] for b in sizes}
    for seed in range(5):
        srgb = textured_srgb(np.random.default_rng(100 + seed), 64)
        scfg = SynthConfig(burst_size=14, scale=4, max_translation=4.0,
                           max_rotation=1.0, shot_range=(4e-3, 4e-3),
                           read_range=(1e-5, 1e-5), seed=seed)
        burst, gt, warps, _ = synthesize(srgb, scfg)
        gtc = np.clip(gt, 0, 1)
        for b in sizes:
            sub = Burst(frames=burst.frames[:b])
            cfg = SolverConfig(iterations=10, scale=4, lam=0.5,
                               extrapolation="none")
            rep = reconstruct(sub, warps[:b], TotalVariationPrior(), cfg)
            mses[b].append(float(np.mean((rep.x_final - gtc) ** 2)))
    means = {b: float(np.mean(mses[b])) for b in sizes}
    monotone = all(means[b2] <= means[b1] * 1.05
                   for b1, b2 in zip(sizes, sizes[1:]))
    gap = 10 * math.log10(means[2] / means[14])
    elapsed = time.time() - t0
    trail = " ".join(f"B{b}={10 * math.log10(1 / means[b]):.2f}dB"
                     for b in sizes)
    report(6, "burst-size trend",
           monotone and gap >= 0.5 and elapsed < 300,
           f"{trail}; gap {gap:.2f}dB >= 0.5dB, monotone(5% slack)="
           f"{monotone}, {elapsed:.0f}s < 300s")


def test_criterion_7_paper_geometry(tmp_path):
    srgb = textured_srgb(np.random.default_rng(7), 384)
    burst, gt, warps, _ = synthesize(srgb, SynthConfig(seed=0))
    structural = (len(burst) == 14 and burst.frame_shape == (48, 48, 4)
                  and gt.shape == (384, 384, 3) and len(warps) == 14)
    report(7, "paper geometry",
           structural,
           f"B={len(burst)}, frames {burst.frame_shape}, gt {gt.shape} "
           f"at x4 from defaults")


def test_criterion_8_metrics_oracle():
    a = np.full((32, 32, 3), 0.4)
    p = psnr(a, a + 0.1)
    rng = np.random.default_rng(8)
    b = rng.random((32, 32, 3))
    s = ssim(b, b.copy())
    report(8, "metrics oracle",
           p == pytest.approx(20.0, abs=1e-12) and abs(s - 1.0) < 1e-9,
           f"psnr(uniform 0.1)={p:.12f}dB ~ 20.0, ssim(identical)-1="
           f"{s - 1.0:.1e}")


def test_criterion_9_determinism(tmp_path):
    src = tmp_path / "in"
    src.mkdir()
    save_png(textured_srgb(np.random.default_rng(9), 128),
             src / "scene.png", bit_depth=16)
    cfg = tmp_path / "solver.json"
    cfg.write_text(json.dumps({"K": 3, "lambda": 0.3,
                               "prior": {"name": "tv"}}))
    digests = []
    for run in ("a", "b"):
        out = tmp_path / run
        rc = cli_main(["synthesize", "--input", str(src), "--out", str(out),
                       "--burst", "4", "--scale", "2", "--seed", "11"])
        assert rc == 0
        rc = cli_main(["reconstruct", "--scene", str(out / "scene"),
                       "--config", str(cfg), "--use-gt-warps",
                       "--out", str(out / "sr.btf")])
        assert rc == 0
        tree = {p.relative_to(out).as_posix(): p.read_bytes()
                for p in sorted(out.rglob("*")) if p.is_file()}
        digests.append(tree)
    identical = digests[0] == digests[1]
    report(9, "determinism", identical,
           f"{len(digests[0])} files byte-identical across two runs: "
           f"{identical}")
