"""Burst registration via enhanced-correlation-coefficient maximization.

Each frame's luma (mean of the four packed channels) is aligned to the
reference frame's luma by Gauss-Newton ascent on the normalized
correlation between the zero-mean warped target and the reference,
coarse-to-fine over a small image pyramid.  The iteration applies every
increment but only iterates that set a new correlation record are
accepted as the running estimate, so the accepted correlation sequence is
non-decreasing.  Frames that fail to converge keep the identity warp,
flagged converged=False, instead of failing the burst.

Statistics are taken over a fixed interior region a few pixels in from
the border: with zero-padded warping the border otherwise mixes missing
data into the correlation.
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .image_io import as_packed_raw
from .operators import AffineWarp, warp


class AlignmentError(RuntimeError):
    """The inputs cannot be aligned (e.g. a constant reference)."""


@dataclass(frozen=True)
class AlignConfig:
    """Motion model and iteration limits for burst alignment.

    ``scale`` converts estimated frame-grid warps to HR coordinates for
    the solver; a packed frame is 2*scale times coarser than the HR grid.
    """

    model: str = "euclidean"
    max_iters: int = 50
    eps: float = 1e-4
    pyramid_levels: int = 2
    scale: int = 4
    smooth_sigma: float = 1.0

    def __post_init__(self):
        if self.model not in ("translation", "euclidean"):
            raise ValueError("model must be 'translation' or 'euclidean'")
        if self.pyramid_levels < 1:
            raise ValueError("pyramid_levels must be >= 1")


@dataclass
class AlignmentResult:
    """Per-frame HR warps with convergence flags and final correlations."""

    warps: list
    converged: list
    final_rho: list


def raw_to_luma(frame):
    """Single-channel luma: per-pixel mean of the four packed channels."""
    frame = as_packed_raw(frame)
    return frame.mean(axis=2, keepdims=True)


def _interior_margin(shape):
    return int(np.clip((min(shape) - 4) // 4, 0, 3))


def _warp_from_params(params, model, center):
    """Rigid warp from parameters; rotation is taken about ``center`` so
    the angle and translation stay well conditioned on image-sized data."""
    if model == "translation":
        return AffineWarp.translation(params[0], params[1])
    theta, tx, ty = params
    cx, cy = center
    c, s = np.cos(theta), np.sin(theta)
    ox = cx - c * cx + s * cy + tx
    oy = cy - s * cx - c * cy + ty
    return AffineWarp(np.array([[c, -s, ox], [s, c, oy]]))


def _params_from_warp(w, model, center):
    m = w.matrix
    if model == "translation":
        return np.array([m[0, 2], m[1, 2]])
    theta = np.arctan2(m[1, 0], m[0, 0])
    cx, cy = center
    rc = m[:, :2] @ np.array([cx, cy])
    t = m[:, 2] - np.array([cx, cy]) + rc
    return np.array([theta, t[0], t[1]])


def _correlation(ref_zm, ref_norm, warped_region):
    iw = warped_region - warped_region.mean()
    nrm = np.linalg.norm(iw)
    if nrm < 1e-12:
        return -1.0, None
    return float(ref_zm.ravel() @ iw.ravel() / (ref_norm * nrm)), iw


def ecc_align(reference, target, model="euclidean", max_iters=50, eps=1e-4,
              init=None, smooth_sigma=1.0, rho_history=None):
    """Estimate the warp that resamples ``target`` onto ``reference``.

    Returns (warp, rho, converged).  The warp maps reference coordinates
    into target coordinates (pull convention), so warping the target by
    it reproduces the reference; rho is that iterate's normalized
    correlation between the zero-mean warped target and reference.
    Converged is True iff the Gauss-Newton increment fell below ``eps``
    within ``max_iters`` and the correlation did not decrease overall.

    Both images are pre-smoothed with a small Gaussian (``smooth_sigma``):
    mosaicked inputs carry sampling artifacts that otherwise bias the
    sub-pixel optimum.  The iteration always applies the full increment
    but remembers the best-correlation iterate seen, which is what gets
    returned; if ``rho_history`` is a list, the accepted (record-setting)
    correlations are appended to it.
    """
    ref = np.asarray(reference, dtype=np.float64)
    tar = np.asarray(target, dtype=np.float64)
    if ref.ndim == 3:
        ref = ref[..., 0]
    if tar.ndim == 3:
        tar = tar[..., 0]
    if ref.shape != tar.shape:
        raise ValueError(f"shape mismatch {ref.shape} vs {tar.shape}")
    if float(np.std(ref)) < 1e-12:
        raise AlignmentError("reference image has no structure to align to")
    if smooth_sigma > 0:
        ref = gaussian_filter(ref, smooth_sigma, mode="nearest")
        tar = gaussian_filter(tar, smooth_sigma, mode="nearest")

    h, w = ref.shape
    m = _interior_margin(ref.shape)
    region = np.s_[m:h - m, m:w - m]
    ref_zm = ref[region] - ref[region].mean()
    ref_norm = np.linalg.norm(ref_zm)
    if ref_norm < 1e-12:
        raise AlignmentError("reference interior is constant")

    # Image-space gradients of the target, warped along with it each
    # iteration so the chain rule is evaluated at the sampled positions.
    gy, gx = np.gradient(tar)
    tar3 = np.stack([tar, gx, gy], axis=-1)

    ys, xs = np.meshgrid(np.arange(h) + 0.5, np.arange(w) + 0.5,
                         indexing="ij")
    center = (w / 2.0, h / 2.0)
    xs_c = (xs - center[0])[region]
    ys_c = (ys - center[1])[region]

    params = _params_from_warp(init or AffineWarp.identity(), model, center)
    warped = warp(tar3, _warp_from_params(params, model, center))
    rho, iw = _correlation(ref_zm, ref_norm, warped[region][..., 0])
    rho_initial = rho
    best_params, best_rho = params.copy(), rho
    if rho_history is not None:
        rho_history.append(rho)
    converged = False

    for _ in range(max_iters):
        if iw is None:
            break  # warped target left the frame or went flat
        gxw = warped[region][..., 1]
        gyw = warped[region][..., 2]
        if model == "translation":
            jac = [gxw, gyw]
        else:
            theta = params[0]
            c, s = np.cos(theta), np.sin(theta)
            dxdt = -s * xs_c - c * ys_c
            dydt = c * xs_c - s * ys_c
            jac = [gxw * dxdt + gyw * dydt, gxw, gyw]
        g = np.stack([j.ravel() - j.mean() for j in jac], axis=1)
        try:
            hess_inv = np.linalg.inv(g.T @ g)
        except np.linalg.LinAlgError:
            break
        gi = g.T @ iw.ravel()
        gt = g.T @ ref_zm.ravel()
        proj = hess_inv @ gi
        num = float(iw.ravel() @ iw.ravel() - gi @ proj)
        den = float(ref_zm.ravel() @ iw.ravel() - gt @ proj)
        if den <= 0:
            break  # images effectively uncorrelated from here
        error = (num / den) * ref_zm.ravel() - iw.ravel()
        delta = hess_inv @ (g.T @ error)
        if not np.all(np.isfinite(delta)):
            break
        params = params + delta
        warped = warp(tar3, _warp_from_params(params, model, center))
        rho, iw = _correlation(ref_zm, ref_norm, warped[region][..., 0])
        if iw is not None and rho > best_rho:
            best_params, best_rho = params.copy(), rho
            if rho_history is not None:
                rho_history.append(rho)
        if float(np.linalg.norm(delta)) < eps:
            converged = True
            break

    converged = converged and best_rho >= rho_initial - 1e-12
    return (_warp_from_params(best_params, model, center), best_rho,
            converged)


def _decimate2(img):
    h, w = img.shape
    img = img[:h - h % 2, :w - w % 2]
    return 0.25 * (img[0::2, 0::2] + img[0::2, 1::2]
                   + img[1::2, 0::2] + img[1::2, 1::2])


def _pyramid(img, levels):
    pyr = [img]
    for _ in range(levels - 1):
        if min(pyr[-1].shape) < 16:
            break
        pyr.append(_decimate2(pyr[-1]))
    return pyr


def align_burst(b, cfg=None):
    """Align every frame's luma to the reference frame, coarse to fine.

    Non-converged frames fall back to the identity warp with
    converged=False.  Returned warps are in HR coordinates, ready for the
    solver: the estimated frame-grid warp is inverted (ECC maps reference
    onto target, the solver warps the HR image into each frame) and its
    translation scaled by 2*scale, the frame-to-HR grid ratio.
    """
    cfg = cfg or AlignConfig()
    ref_luma = raw_to_luma(b.reference)[..., 0]
    ref_pyr = _pyramid(ref_luma, cfg.pyramid_levels)

    warps, converged, rhos = [], [], []
    for i, frame in enumerate(b.frames):
        if i == b.reference_index:
            warps.append(AffineWarp.identity())
            converged.append(True)
            rhos.append(1.0)
            continue
        tar_pyr = _pyramid(raw_to_luma(frame)[..., 0], cfg.pyramid_levels)
        levels = min(len(ref_pyr), len(tar_pyr))
        est = AffineWarp.identity()
        rho, ok = -1.0, False
        for level in reversed(range(levels)):
            est, rho, ok = ecc_align(
                ref_pyr[level], tar_pyr[level], model=cfg.model,
                max_iters=cfg.max_iters, eps=cfg.eps, init=est,
                smooth_sigma=cfg.smooth_sigma)
            if level > 0:
                est = est.scale_translation(2.0)
        ok = ok and np.all(np.isfinite(est.matrix))
        if ok:
            warps.append(est.inverse().scale_translation(2.0 * cfg.scale))
        else:
            warps.append(AffineWarp.identity())
        converged.append(bool(ok))
        rhos.append(float(np.clip(rho, -1.0, 1.0)))
    return AlignmentResult(warps=warps, converged=converged, final_rho=rhos)
