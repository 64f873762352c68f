"""Synthetic (burst, ground truth) pair generation from sRGB images.

An sRGB input is first pushed back into the linear raw sensor space by an
inverse camera pipeline (inverse tone curve, sRGB decode, inverse color
correction, inverse white balance).  The burst is then produced by the
same degradation code path the solver inverts: a random rigid warp per
frame, bilinear downsampling, RGGB mosaicking, and heteroskedastic
shot/read noise added to the packed measurements.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .image_io import (Burst, as_packed_raw, as_tensor3, read_tensor,
                       srgb_decode, srgb_encode, write_tensor)
from .operators import AffineWarp, DegradationConfig, degrade

SCENE_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CameraParams:
    """White-balance gains and color-correction matrix of the simulated
    camera.  The ccm maps linear raw to linear sRGB and must be
    white-preserving (rows sum to 1)."""

    rgb_gains: tuple = (1.0, 1.0, 1.0)
    ccm: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        gains = tuple(float(g) for g in self.rgb_gains)
        if len(gains) != 3 or any(g <= 0 for g in gains):
            raise ValueError("rgb_gains must be three positive numbers")
        ccm = np.asarray(self.ccm, dtype=np.float64)
        if ccm.shape != (3, 3):
            raise ValueError("ccm must be 3x3")
        if np.max(np.abs(ccm.sum(axis=1) - 1.0)) > 1e-6:
            raise ValueError("ccm rows must sum to 1 (white-preserving)")
        if abs(np.linalg.det(ccm)) < 1e-12:
            raise ValueError("ccm is singular")
        ccm.flags.writeable = False
        object.__setattr__(self, "rgb_gains", gains)
        object.__setattr__(self, "ccm", ccm)

    @classmethod
    def random_gains(cls, rng, lo=1.6, hi=2.4):
        """Unit-ccm camera with red/blue gains drawn uniformly from
        [lo, hi]; green gain stays 1."""
        return cls(rgb_gains=(rng.uniform(lo, hi), 1.0, rng.uniform(lo, hi)))


@dataclass(frozen=True)
class NoiseParams:
    """Heteroskedastic Gaussian noise: variance = read + shot * signal."""

    shot: float = 0.0
    read: float = 0.0

    def __post_init__(self):
        if self.shot < 0 or self.read < 0:
            raise ValueError("noise variances must be non-negative")


@dataclass(frozen=True)
class SynthConfig:
    """Burst geometry, motion ranges, noise ranges, and the RNG seed."""

    burst_size: int = 14
    scale: int = 4
    max_translation: float = 4.0      # HR pixels
    max_rotation: float = 1.0         # degrees
    shot_range: tuple = (1e-4, 1e-2)  # log-uniform sampling range
    read_range: tuple = (1e-6, 1e-4)
    seed: int = 0

    def __post_init__(self):
        if self.burst_size < 1:
            raise ValueError("burst_size must be >= 1")
        if self.max_translation < 0 or self.max_rotation < 0:
            raise ValueError("motion ranges must be non-negative")
        for lo, hi in (self.shot_range, self.read_range):
            if not (0 < lo <= hi):
                raise ValueError("noise ranges must satisfy 0 < lo <= hi")


def inverse_tone_curve(x):
    """Invert the smoothstep tone curve s(y) = 3y^2 - 2y^3 on [0, 1]."""
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    return 0.5 - np.sin(np.arcsin(1.0 - 2.0 * x) / 3.0)


def tone_curve(y):
    """Smoothstep tone curve applied by the simulated camera."""
    y = np.clip(np.asarray(y, dtype=np.float64), 0.0, 1.0)
    return 3.0 * y ** 2 - 2.0 * y ** 3


def srgb_to_linear_raw(srgb, cam):
    """Run the inverse camera pipeline on an sRGB image in [0, 1].

    Stages, in order: inverse tone curve, sRGB decode, inverse color
    correction, inverse white balance.  The result is clamped to be
    non-negative.
    """
    img = as_tensor3(srgb, channels=3)
    img = inverse_tone_curve(img)
    img = srgb_decode(img)
    img = img @ np.linalg.inv(cam.ccm).T
    img = img / np.asarray(cam.rgb_gains)
    return np.maximum(img, 0.0)


def linear_raw_to_srgb(raw_rgb, cam):
    """Forward camera pipeline: white balance, color correction, sRGB
    encode, tone curve.  Inverse of :func:`srgb_to_linear_raw`."""
    img = as_tensor3(raw_rgb, channels=3)
    img = img * np.asarray(cam.rgb_gains)
    img = img @ cam.ccm.T
    img = srgb_encode(np.clip(img, 0.0, 1.0))
    return tone_curve(img)


def sample_warps(cfg, rng, hr_shape):
    """Draw one rigid warp per frame; frame 0 is always the identity.

    Rotations are uniform in [-max_rotation, +max_rotation] degrees about
    the image center, translations uniform in [-max_translation,
    +max_translation]^2 HR pixels.
    """
    h, w = hr_shape
    warps = [AffineWarp.identity()]
    for _ in range(cfg.burst_size - 1):
        angle = rng.uniform(-cfg.max_rotation, cfg.max_rotation)
        tx = rng.uniform(-cfg.max_translation, cfg.max_translation)
        ty = rng.uniform(-cfg.max_translation, cfg.max_translation)
        warps.append(AffineWarp.rotation_about(
            angle, w / 2.0, h / 2.0, tx=tx, ty=ty))
    return warps


def sample_noise_params(cfg, rng):
    """Sample shot and read variances log-uniformly from the configured
    ranges."""
    def log_uniform(lo, hi):
        return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))

    return NoiseParams(shot=log_uniform(*cfg.shot_range),
                       read=log_uniform(*cfg.read_range))


def add_noise(frame, noise, rng):
    """Add per-pixel Gaussian noise with variance read + shot * signal,
    then clamp to [0, 1] (sensor black level / saturation)."""
    frame = as_packed_raw(frame)
    if noise.shot == 0.0 and noise.read == 0.0:
        return frame
    sigma = np.sqrt(noise.read + noise.shot * np.maximum(frame, 0.0))
    return np.clip(frame + sigma * rng.standard_normal(frame.shape), 0.0, 1.0)


def synthesize(hr_srgb, cfg, cam=None, rng=None):
    """Generate one synthetic scene from an sRGB image.

    Returns (burst, ground_truth, warps, noise_params) where ground_truth
    is the linear raw HR image the burst was degraded from.  With ``rng``
    omitted, a generator seeded from ``cfg.seed`` is used, so identical
    inputs give bit-identical scenes.
    """
    cam = cam or CameraParams()
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    hr_srgb = as_tensor3(hr_srgb, channels=3)
    h, w = hr_srgb.shape[:2]
    if h % (2 * cfg.scale) or w % (2 * cfg.scale):
        raise ValueError(
            f"HR dims {h}x{w} must be divisible by 2*scale={2 * cfg.scale}")
    gt = srgb_to_linear_raw(hr_srgb, cam)
    warps = sample_warps(cfg, rng, (h, w))
    noise = sample_noise_params(cfg, rng)
    clean = degrade(gt, warps, DegradationConfig(scale=cfg.scale))
    frames = [add_noise(f, noise, rng) for f in clean.frames]
    return Burst(frames=frames), gt, warps, noise


def save_scene(scene_dir, burst, gt, warps, noise, cfg, cam=None):
    """Write a scene directory: gt.btf, frame_XX.btf, and meta.json."""
    cam = cam or CameraParams()
    scene_dir = Path(scene_dir)
    scene_dir.mkdir(parents=True, exist_ok=True)
    write_tensor(gt, scene_dir / "gt.btf")
    frame_names = []
    for i, frame in enumerate(burst.frames):
        name = f"frame_{i:02d}.btf"
        write_tensor(frame, scene_dir / name)
        frame_names.append(name)
    meta = {
        "version": SCENE_SCHEMA_VERSION,
        "seed": int(cfg.seed),
        "burst_size": len(burst),
        "scale": int(cfg.scale),
        "warps": [w.matrix.ravel().tolist() for w in warps],
        "noise": {"shot": noise.shot, "read": noise.read},
        "camera": {"rgb_gains": list(cam.rgb_gains),
                   "ccm": cam.ccm.tolist()},
        "gt": "gt.btf",
        "frames": frame_names,
    }
    with open(scene_dir / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def load_scene(scene_dir):
    """Read a scene directory back into (burst, gt, warps, noise, meta).

    Validates the manifest: the warp list must match the burst size and
    every referenced tensor file must exist.
    """
    scene_dir = Path(scene_dir)
    with open(scene_dir / "meta.json") as fh:
        meta = json.load(fh)
    if not (len(meta["warps"]) == meta["burst_size"] == len(meta["frames"])):
        raise ValueError(
            f"{scene_dir}: manifest lists {len(meta['warps'])} warps and "
            f"{len(meta['frames'])} frames for burst_size "
            f"{meta['burst_size']}")
    for name in [meta["gt"], *meta["frames"]]:
        if not (scene_dir / name).exists():
            raise OSError(f"{scene_dir}: manifest references missing {name}")
    gt = as_tensor3(read_tensor(scene_dir / meta["gt"]))
    frames = [as_packed_raw(read_tensor(scene_dir / name))
              for name in meta["frames"]]
    warps = [AffineWarp(np.asarray(m, dtype=np.float64).reshape(2, 3))
             for m in meta["warps"]]
    noise = NoiseParams(shot=meta["noise"]["shot"], read=meta["noise"]["read"])
    return Burst(frames=frames), gt, warps, noise, meta
