import numpy as np
import pytest
from scipy.ndimage import gaussian_filter


def textured_srgb(rng, size, chroma=0.35):
    """Natural-image-like sRGB test scene: multi-scale smoothed noise with
    a dominant shared-luminance component, values in [0.1, 0.9]."""
    scales = ((max(6, size // 16), 0.5), (max(5, size // 38), 0.35), (4, 0.15))
    luma = np.zeros((size, size))
    for sig, amp in scales:
        luma += amp * gaussian_filter(
            rng.standard_normal((size, size)), sig, mode="wrap")
    img = np.repeat(luma[..., None], 3, axis=2)
    for sig, amp in scales:
        img = img + chroma * amp * gaussian_filter(
            rng.standard_normal((size, size, 3)), (sig, sig, 0), mode="wrap")
    img -= img.min()
    img /= img.max()
    return 0.1 + 0.8 * img


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def mean_endpoint_error(warp_a, warp_b, shape):
    """Mean distance between the two warps' images of the pixel-center
    grid, in the grid's pixel units."""
    h, w = shape
    ys, xs = np.meshgrid(np.arange(h) + 0.5, np.arange(w) + 0.5,
                         indexing="ij")
    ax, ay = warp_a.apply_points(xs, ys)
    bx, by = warp_b.apply_points(xs, ys)
    return float(np.mean(np.hypot(ax - bx, ay - by)))
