"""Synthetic raw burst generation.

Builds a textured sRGB test scene, pushes it through the inverse camera
pipeline into the linear sensor space, and degrades it into a burst of
noisy packed raw frames.  Saves preview images of the scene, the ground
truth, and a few frames under demos/output/.
"""

from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from rawburst import (CameraParams, SynthConfig, linear_raw_to_srgb,
                      save_scene, synthesize)
from rawburst.image_io import save_png

out_dir = Path(__file__).parent / "output" / "synthesize"
out_dir.mkdir(parents=True, exist_ok=True)
rng = np.random.default_rng(7)

# ---------------------------------------------------------------------------
# A procedural "photo": multi-scale smoothed noise, mostly shared across
# channels so it behaves like natural luminance-dominated content.
size = 384
luma = sum(a * gaussian_filter(rng.standard_normal((size, size)), s, mode="wrap")
           for s, a in ((24, 0.5), (10, 0.35), (6, 0.15)))
chroma = sum(0.35 * a * gaussian_filter(
    rng.standard_normal((size, size, 3)), (s, s, 0), mode="wrap")
    for s, a in ((24, 0.5), (10, 0.35)))
srgb = luma[..., None] + chroma
srgb = (srgb - srgb.min()) / (srgb.max() - srgb.min()) * 0.8 + 0.1
save_png(srgb, out_dir / "scene_srgb.png")

# ---------------------------------------------------------------------------
# Synthesize with the default geometry: 14 frames, x4 scale, sub-4-pixel
# shifts and sub-degree rotations, heteroskedastic shot/read noise.
cfg = SynthConfig(burst_size=14, scale=4, max_translation=4.0,
                  max_rotation=1.0, shot_range=(1e-3, 1e-3),
                  read_range=(1e-5, 1e-5), seed=42)
cam = CameraParams()
burst, gt, warps, noise = synthesize(srgb, cfg, cam)
print(f"ground truth: {gt.shape}, burst: {len(burst)} frames of "
      f"{burst.frame_shape}")
print(f"noise params: shot={noise.shot:.2e} read={noise.read:.2e}")
for i, w in enumerate(warps[:4]):
    print(f"warp {i}: offset=({w.matrix[0, 2]:+.2f}, {w.matrix[1, 2]:+.2f}) "
          f"HR px{' (reference)' if i == 0 else ''}")

# The ground truth lives in the linear sensor space; map it back through
# the forward camera pipeline for an sRGB preview.
save_png(linear_raw_to_srgb(np.clip(gt, 0, 1), cam), out_dir / "gt_srgb.png")

# Packed raw frames are half the mosaicked plane per side with 4 channels;
# average the two greens for a quick RGB look at one frame.
frame = burst.frames[1]
frame_rgb = np.stack([frame[..., 0], 0.5 * (frame[..., 1] + frame[..., 2]),
                      frame[..., 3]], axis=-1)
save_png(linear_raw_to_srgb(frame_rgb, cam), out_dir / "frame_01_srgb.png")

# ---------------------------------------------------------------------------
# Persist the scene in the on-disk layout the CLI commands consume.
save_scene(out_dir / "scene", burst, gt, warps, noise, cfg, cam)
print(f"scene directory written to {out_dir / 'scene'}")
