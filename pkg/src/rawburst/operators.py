"""Linear degradation operators and their exact adjoints.

A burst observation is modeled frame by frame as

    frame_i = mosaick(downsample(warp(x, warps[i]), scale)) + noise

where every stage is a sparse linear map.  Each operator here comes with
its literal matrix transpose (scatter-add of the same bilinear weights,
not an inverse warp), so the pairs satisfy the adjoint identity
<f(x), y> == <x, f_adjoint(y)> to floating-point accuracy.  Out-of-image
samples contribute zero (zero-padding boundary), which keeps every map
strictly linear.

Warps use the pull convention: the 2x3 matrix maps output pixel centers
(continuous coordinates, centers at integer + 0.5) to input coordinates.
"""

from dataclasses import dataclass, field

import numpy as np

from .image_io import Burst, as_packed_raw, as_tensor3


@dataclass(frozen=True)
class AffineWarp:
    """2x3 affine map [a, b, tx; c, d, ty] from output to input coordinates.

    Coordinates are (x, y) = (column, row) in continuous units where pixel
    (i, j) has center (j + 0.5, i + 0.5).
    """

    matrix: np.ndarray = field(
        default_factory=lambda: np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (2, 3):
            raise ValueError(f"warp matrix must be 2x3, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("warp matrix contains non-finite values")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def translation(cls, tx, ty):
        return cls(np.array([[1.0, 0.0, tx], [0.0, 1.0, ty]]))

    @classmethod
    def rotation_about(cls, degrees, center_x, center_y, tx=0.0, ty=0.0):
        """Rotation by ``degrees`` about (center_x, center_y), then shift."""
        th = np.deg2rad(degrees)
        c, s = np.cos(th), np.sin(th)
        # x' = R (x - center) + center + t
        ox = center_x - c * center_x + s * center_y + tx
        oy = center_y - s * center_x - c * center_y + ty
        return cls(np.array([[c, -s, ox], [s, c, oy]]))

    def is_identity(self, tol=1e-12):
        ident = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        return bool(np.max(np.abs(self.matrix - ident)) <= tol)

    def inverse(self):
        lin = self.matrix[:, :2]
        inv = np.linalg.inv(lin)
        t = -inv @ self.matrix[:, 2]
        return AffineWarp(np.hstack([inv, t[:, None]]))

    def scale_translation(self, factor):
        """Rescale to a grid ``factor`` times finer: translation scales,
        the linear part is unchanged."""
        m = self.matrix.copy()
        m[:, 2] *= factor
        return AffineWarp(m)

    def apply_points(self, xs, ys):
        """Map continuous (x, y) coordinate arrays through the warp."""
        m = self.matrix
        return (m[0, 0] * xs + m[0, 1] * ys + m[0, 2],
                m[1, 0] * xs + m[1, 1] * ys + m[1, 2])


@dataclass(frozen=True)
class DegradationConfig:
    """Scale factor and fixed conventions of the burst degradation model.

    The Bayer pattern is fixed to RGGB and out-of-image samples are
    zero-padded; only the integer downsampling factor varies.
    """

    scale: int = 4

    def __post_init__(self):
        if int(self.scale) != self.scale or self.scale < 1:
            raise ValueError("scale must be an integer >= 1")
        object.__setattr__(self, "scale", int(self.scale))


def _bilinear_terms(rows, cols, height, width):
    """Corner indices and weights for bilinear sampling at fractional
    pixel indices, with out-of-range corners given zero weight.

    Returns a list of four (row_idx, col_idx, weight) triples; indices are
    clipped into range so they are always safe to use for indexing.
    """
    r0 = np.floor(rows).astype(np.int64)
    c0 = np.floor(cols).astype(np.int64)
    fr = rows - r0
    fc = cols - c0
    terms = []
    for dr, wr in ((0, 1.0 - fr), (1, fr)):
        for dc, wc in ((0, 1.0 - fc), (1, fc)):
            rr = r0 + dr
            cc = c0 + dc
            w = wr * wc
            inside = (rr >= 0) & (rr < height) & (cc >= 0) & (cc < width)
            w = np.where(inside, w, 0.0)
            terms.append((np.clip(rr, 0, height - 1),
                          np.clip(cc, 0, width - 1), w))
    return terms


def _gather(img, rows, cols):
    """Bilinear sampling of (H, W, C) ``img`` at fractional indices."""
    h, w = img.shape[:2]
    out = np.zeros(rows.shape + (img.shape[2],), dtype=np.float64)
    for rr, cc, wt in _bilinear_terms(rows, cols, h, w):
        out += wt[..., None] * img[rr, cc, :]
    return out


def _scatter(values, rows, cols, height, width):
    """Transpose of :func:`_gather`: accumulate ``values`` back through
    the same bilinear weights into an (height, width, C) array."""
    channels = values.shape[-1]
    out = np.zeros((height * width, channels), dtype=np.float64)
    for rr, cc, wt in _bilinear_terms(rows, cols, height, width):
        flat = (rr * width + cc).ravel()
        contrib = (wt[..., None] * values).reshape(-1, channels)
        for ch in range(channels):
            out[:, ch] += np.bincount(
                flat, weights=contrib[:, ch], minlength=height * width)
    return out.reshape(height, width, channels)


def _warp_sample_indices(height, width, w):
    """Fractional source indices for each output pixel of a warp."""
    ys, xs = np.meshgrid(np.arange(height) + 0.5, np.arange(width) + 0.5,
                         indexing="ij")
    sx, sy = w.apply_points(xs, ys)
    return sy - 0.5, sx - 0.5


def warp(img, w):
    """Resample ``img`` through an affine warp (pull convention).

    output(p) is the bilinear sample of ``img`` at w applied to the center
    of p; samples falling outside the image contribute zero.  Output dims
    equal input dims.
    """
    img = as_tensor3(img)
    rows, cols = _warp_sample_indices(img.shape[0], img.shape[1], w)
    return _gather(img, rows, cols)


def warp_adjoint(img, w):
    """Exact transpose of :func:`warp`: scatter-add of the bilinear
    weights, not the inverse warp."""
    img = as_tensor3(img)
    rows, cols = _warp_sample_indices(img.shape[0], img.shape[1], w)
    return _scatter(img, rows, cols, img.shape[0], img.shape[1])


def _downsample_indices(height, width, r):
    rows = (np.arange(height // r) + 0.5) * r - 0.5
    cols = (np.arange(width // r) + 0.5) * r - 0.5
    return np.meshgrid(rows, cols, indexing="ij")


def downsample(img, r):
    """Bilinear point-sampling at stride ``r``: output(i, j) samples the
    input at fractional index ((i + 0.5) r - 0.5, (j + 0.5) r - 0.5)."""
    img = as_tensor3(img)
    h, w = img.shape[:2]
    if h % r or w % r:
        raise ValueError(f"dims {h}x{w} not divisible by scale {r}")
    rows, cols = _downsample_indices(h, w, r)
    return _gather(img, rows, cols)


def downsample_adjoint(img, r):
    """Transpose of :func:`downsample`; output dims are input dims x r."""
    img = as_tensor3(img)
    h, w = img.shape[:2]
    rows, cols = _downsample_indices(h * r, w * r, r)
    return _scatter(img, rows, cols, h * r, w * r)


def mosaick(rgb):
    """Sample an RGB image onto the RGGB Bayer pattern, packed 4-channel.

    For each 2x2 block with top-left pixel (2i, 2j) the output holds
    [R(2i, 2j), G(2i, 2j+1), G(2i+1, 2j), B(2i+1, 2j+1)].
    """
    rgb = as_tensor3(rgb, channels=3)
    h, w = rgb.shape[:2]
    if h % 2 or w % 2:
        raise ValueError(f"dims {h}x{w} must be even to mosaick")
    return np.stack([rgb[0::2, 0::2, 0], rgb[0::2, 1::2, 1],
                     rgb[1::2, 0::2, 1], rgb[1::2, 1::2, 2]], axis=-1)


def mosaick_adjoint(raw):
    """Transpose of :func:`mosaick`: place each packed value back at its
    Bayer site in the matching color plane, zeros elsewhere."""
    raw = as_packed_raw(raw)
    h, w = raw.shape[:2]
    rgb = np.zeros((2 * h, 2 * w, 3), dtype=np.float64)
    rgb[0::2, 0::2, 0] = raw[..., 0]
    rgb[0::2, 1::2, 1] = raw[..., 1]
    rgb[1::2, 0::2, 1] = raw[..., 2]
    rgb[1::2, 1::2, 2] = raw[..., 3]
    return rgb


def degrade(x, warps, cfg):
    """Apply the full degradation to an HR image: one packed raw frame per
    warp, frame_i = mosaick(downsample(warp(x, warps[i]), scale)).

    No noise is added here.
    """
    x = as_tensor3(x, channels=3)
    if len(warps) < 1:
        raise ValueError("need at least one warp")
    h, w = x.shape[:2]
    if h % (2 * cfg.scale) or w % (2 * cfg.scale):
        raise ValueError(
            f"HR dims {h}x{w} must be divisible by 2*scale={2 * cfg.scale}")
    frames = [mosaick(downsample(warp(x, wi), cfg.scale)) for wi in warps]
    return Burst(frames=frames)


def degrade_adjoint(b, warps, cfg):
    """Transpose of :func:`degrade`: the unnormalized sum over frames of
    warp_adjoint(downsample_adjoint(mosaick_adjoint(frame), scale))."""
    if len(warps) != len(b):
        raise ValueError(
            f"{len(warps)} warps for {len(b)} frames")
    h, w = b.frame_shape[:2]
    out = np.zeros((2 * h * cfg.scale, 2 * w * cfg.scale, 3),
                   dtype=np.float64)
    for frame, wi in zip(b.frames, warps):
        out += warp_adjoint(
            downsample_adjoint(mosaick_adjoint(frame), cfg.scale), wi)
    return out


def operator_norm_estimate(warps, cfg, hr_shape, iters=50, seed=0):
    """Power-iteration estimate of the squared spectral norm of the
    composite degradation (largest eigenvalue of its normal operator).

    Deterministic given ``seed``; returns the largest Rayleigh quotient
    seen, which is a monotone non-decreasing lower bound in ``iters``.
    """
    if iters < 20:
        raise ValueError("iters must be >= 20 for a usable estimate")
    h, w = hr_shape
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((h, w, 3))
    v /= np.linalg.norm(v)
    best = 0.0
    for _ in range(iters):
        av = degrade_adjoint(degrade(v, warps, cfg), warps, cfg)
        rayleigh = float(np.vdot(v, av))
        best = max(best, rayleigh)
        nrm = np.linalg.norm(av)
        if nrm == 0.0:
            break
        v = av / nrm
    return best
