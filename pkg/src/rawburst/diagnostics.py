"""Self-check suites: adjoint identities, the spectral bound, and
objective descent on a tiny synthetic scene.

Each suite returns rows of (name, measured value, tolerance, passed) so
callers can render a table and derive an exit code.
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from . import operators as ops
from .image_io import Burst
from .operators import AffineWarp, DegradationConfig
from .priors import TotalVariationPrior
from .solver import SolverConfig, initialize, objective, reconstruct
from .synthesis import CameraParams, SynthConfig, synthesize


@dataclass(frozen=True)
class CheckRow:
    name: str
    value: float
    tolerance: float
    passed: bool


def _random_warp(rng, max_shift=3.0, max_deg=1.0, size=32):
    return AffineWarp.rotation_about(
        rng.uniform(-max_deg, max_deg), size / 2.0, size / 2.0,
        tx=rng.uniform(-max_shift, max_shift),
        ty=rng.uniform(-max_shift, max_shift))


def _dot_gap(fx, y, x, fty):
    gap = abs(float(np.vdot(fx, y)) - float(np.vdot(x, fty)))
    return gap / (np.linalg.norm(x) * np.linalg.norm(y) + 1e-300)


def adjoint_suite(size=32, trials=100, seed=0, tol=1e-5,
                  warp_adjoint_fn=None):
    """Dot-product adjoint identity for each operator pair and for the
    composite model, maximized over random trials.

    ``warp_adjoint_fn`` lets callers substitute a deliberately broken
    adjoint as a negative control.
    """
    wa = warp_adjoint_fn or ops.warp_adjoint
    rng = np.random.default_rng(seed)
    worst = {"warp": 0.0, "downsample": 0.0, "mosaick": 0.0, "composite": 0.0}
    r = 2
    for _ in range(trials):
        x = rng.random((size, size, 3))
        y = rng.random((size, size, 3))
        w = _random_warp(rng, size=size)
        worst["warp"] = max(worst["warp"], _dot_gap(
            ops.warp(x, w), y, x, wa(y, w)))

        y_lo = rng.random((size // r, size // r, 3))
        worst["downsample"] = max(worst["downsample"], _dot_gap(
            ops.downsample(x, r), y_lo, x, ops.downsample_adjoint(y_lo, r)))

        y_raw = rng.random((size // 2, size // 2, 4))
        worst["mosaick"] = max(worst["mosaick"], _dot_gap(
            ops.mosaick(x), y_raw, x, ops.mosaick_adjoint(y_raw)))

        cfg = DegradationConfig(scale=r)
        batch = int(rng.integers(1, 5))
        warps = [_random_warp(rng, size=size) for _ in range(batch)]
        yb = Burst(frames=[rng.random((size // (2 * r), size // (2 * r), 4))
                           for _ in range(batch)])
        fx = ops.degrade(x, warps, cfg)
        fty = ops.degrade_adjoint(yb, warps, cfg)
        num = sum(float(np.vdot(a, b))
                  for a, b in zip(fx.frames, yb.frames))
        ynorm = np.sqrt(sum(float(np.sum(f ** 2)) for f in yb.frames))
        gap = abs(num - float(np.vdot(x, fty)))
        worst["composite"] = max(
            worst["composite"], gap / (np.linalg.norm(x) * ynorm + 1e-300))
    return [CheckRow(f"adjoint/{k}", v, tol, v <= tol)
            for k, v in worst.items()]


def spectral_suite(size=64, seed=0, burst_sizes=(1, 4, 14), iters=50):
    """Power-iteration bound: the normal operator's largest eigenvalue
    must not exceed the burst size (up to 1e-3 relative)."""
    rng = np.random.default_rng(seed)
    cfg = DegradationConfig(scale=4)
    rows = []
    for batch in burst_sizes:
        warps = [AffineWarp.identity()] + [
            _random_warp(rng, size=size) for _ in range(batch - 1)]
        est = ops.operator_norm_estimate(warps, cfg, (size, size),
                                         iters=iters, seed=seed)
        bound = batch * (1.0 + 1e-3)
        rows.append(CheckRow(f"spectral/B={batch}", est, bound, est <= bound))
    return rows


def descent_suite(seed=0, size=32, burst_size=4, iterations=5):
    """Objective descent of the plain iteration (no extrapolation) with
    the TV prior on one synthesized scene, starting from the standard
    initial estimate."""
    rng = np.random.default_rng(seed)
    srgb = np.clip(
        gaussian_filter(rng.random((size, size, 3)), sigma=(2, 2, 0),
                        mode="nearest") * 0.8 + 0.1, 0, 1)
    cfg = SynthConfig(burst_size=burst_size, scale=2, max_translation=2.0,
                      max_rotation=0.5, shot_range=(1e-3, 1e-3),
                      read_range=(1e-5, 1e-5), seed=seed)
    burst, _, warps, _ = synthesize(srgb, cfg, CameraParams())
    scfg = SolverConfig(iterations=iterations, scale=2, lam=0.01,
                        extrapolation="none")
    prior = TotalVariationPrior(inner_iters=100, tol=1e-7)
    x0 = initialize(burst, warps, scfg)
    objs = [objective(x0, burst, warps, prior, scfg)]
    report = reconstruct(burst, warps, prior, scfg, x0=x0)
    objs += list(report.objective)
    worst = max(objs[k + 1] - objs[k] for k in range(len(objs) - 1))
    return [CheckRow("mm/objective-descent", worst, 1e-8, worst <= 1e-8)]


def run_all(size=32, trials=100, seed=0, warp_adjoint_fn=None):
    rows = []
    rows += adjoint_suite(size=size, trials=trials, seed=seed,
                          warp_adjoint_fn=warp_adjoint_fn)
    rows += spectral_suite(size=max(size, 32), seed=seed)
    rows += descent_suite(seed=seed)
    return rows
