"""Image containers, pixel conventions, and bit-exact file I/O.

Images are plain numpy arrays of shape (height, width, channels) in
row-major, channel-interleaved layout, holding linear-light values
nominally in [0, 1].  Coordinates follow the top-left-origin convention:
(x, y) = (column, row), with pixel centers at integer + 0.5 in continuous
coordinates.  Packed raw frames are (H, W, 4) arrays whose channel order
is [R, G_r, G_b, B], one channel per site of an RGGB 2x2 Bayer block.

Tensors are exchanged on disk in the ".btf" container: magic "BTF1",
ndim as u32, dims as ndim x u32, a u32 dtype code (0 = 32-bit float), and
a little-endian row-major float payload.  Round trips are bit-exact.
"""

from dataclasses import dataclass, field

import cv2
import numpy as np

BTF_MAGIC = b"BTF1"
BTF_DTYPE_F32 = 0

# IEC 61966-2-1 constants for the piecewise sRGB transfer.
_SRGB_LINEAR_CUTOFF = 0.0031308
_SRGB_ENCODED_CUTOFF = 0.04045


class FormatError(ValueError):
    """A file did not parse as the expected format."""


def as_tensor3(data, channels=None):
    """Validate and return an (H, W, C) float64 image array.

    Raises ValueError on wrong rank, wrong channel count, or non-finite
    values.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError(f"expected (H, W, C) array, got shape {arr.shape}")
    if channels is not None and arr.shape[2] != channels:
        raise ValueError(
            f"expected {channels} channels, got {arr.shape[2]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains NaN or Inf values")
    return arr


def as_packed_raw(data):
    """Validate a packed raw frame: (H, W, 4), channels [R, G_r, G_b, B]."""
    return as_tensor3(data, channels=4)


@dataclass
class Burst:
    """An ordered list of packed raw frames of identical shape.

    ``reference_index`` names the base frame the others are aligned to.
    """

    frames: list = field(default_factory=list)
    reference_index: int = 0

    def __post_init__(self):
        if len(self.frames) < 1:
            raise ValueError("a burst needs at least one frame")
        self.frames = [as_packed_raw(f) for f in self.frames]
        shape = self.frames[0].shape
        for i, f in enumerate(self.frames):
            if f.shape != shape:
                raise ValueError(
                    f"frame {i} has shape {f.shape}, expected {shape}")
        if not 0 <= self.reference_index < len(self.frames):
            raise ValueError("reference_index out of range")

    def __len__(self):
        return len(self.frames)

    @property
    def reference(self):
        return self.frames[self.reference_index]

    @property
    def frame_shape(self):
        return self.frames[0].shape


def write_tensor(t, path):
    """Write an array to ``path`` in the .btf container (float32 payload)."""
    arr = np.ascontiguousarray(t, dtype=np.float32)
    header = BTF_MAGIC + np.asarray(
        [arr.ndim, *arr.shape, BTF_DTYPE_F32], dtype="<u4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.astype("<f4").tobytes())


def read_tensor(path):
    """Read a .btf file written by :func:`write_tensor`.

    Raises FormatError on a bad magic or dtype code and OSError on a
    truncated payload.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8 or blob[:4] != BTF_MAGIC:
        raise FormatError(f"{path}: not a BTF1 tensor file")
    ndim = int(np.frombuffer(blob[4:8], dtype="<u4")[0])
    header_len = 8 + 4 * ndim + 4
    if len(blob) < header_len:
        raise OSError(f"{path}: truncated header")
    dims = np.frombuffer(blob[8:8 + 4 * ndim], dtype="<u4").astype(np.int64)
    dtype_code = int(np.frombuffer(
        blob[8 + 4 * ndim:header_len], dtype="<u4")[0])
    if dtype_code != BTF_DTYPE_F32:
        raise FormatError(f"{path}: unknown dtype code {dtype_code}")
    count = int(np.prod(dims)) if ndim > 0 else 1
    payload = blob[header_len:]
    if len(payload) != 4 * count:
        raise OSError(
            f"{path}: payload holds {len(payload)} bytes, "
            f"expected {4 * count}")
    data = np.frombuffer(payload, dtype="<f4", count=count)
    return data.reshape(dims).astype(np.float32)


def srgb_encode(linear):
    """Linear light -> sRGB-encoded values (piecewise IEC transfer)."""
    x = np.asarray(linear, dtype=np.float64)
    lo = 12.92 * x
    hi = 1.055 * np.power(np.maximum(x, _SRGB_LINEAR_CUTOFF), 1.0 / 2.4) - 0.055
    return np.where(x <= _SRGB_LINEAR_CUTOFF, lo, hi)


def srgb_decode(encoded):
    """sRGB-encoded values -> linear light (inverse of srgb_encode)."""
    s = np.asarray(encoded, dtype=np.float64)
    lo = s / 12.92
    hi = np.power((np.maximum(s, _SRGB_ENCODED_CUTOFF) + 0.055) / 1.055, 2.4)
    return np.where(s <= _SRGB_ENCODED_CUTOFF, lo, hi)


def read_srgb_png(path):
    """Read an 8- or 16-bit RGB PNG, scaled to [0, 1] by the bit-depth max.

    No transfer-function decoding is applied: the returned values are the
    sRGB-encoded intensities as stored.
    """
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise OSError(f"cannot read {path}")
    if img.ndim != 3 or img.shape[2] != 3:
        raise FormatError(f"{path}: expected a 3-channel RGB PNG")
    if img.dtype == np.uint8:
        peak = 255.0
    elif img.dtype == np.uint16:
        peak = 65535.0
    else:
        raise FormatError(f"{path}: unsupported sample type {img.dtype}")
    return img[..., ::-1].astype(np.float64) / peak


def write_srgb_png(t, path, bit_depth=8):
    """sRGB-encode a linear RGB image, quantize, and write it as a PNG."""
    encoded = srgb_encode(np.clip(as_tensor3(t, channels=3), 0.0, 1.0))
    save_png(encoded, path, bit_depth=bit_depth)


def save_png(encoded, path, bit_depth=8):
    """Quantize already-encoded [0, 1] RGB values and write a PNG."""
    arr = np.clip(np.asarray(encoded, dtype=np.float64), 0.0, 1.0)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {arr.shape}")
    if bit_depth == 8:
        q = np.rint(arr * 255.0).astype(np.uint8)
    elif bit_depth == 16:
        q = np.rint(arr * 65535.0).astype(np.uint16)
    else:
        raise ValueError("bit_depth must be 8 or 16")
    if not cv2.imwrite(str(path), q[..., ::-1]):
        raise OSError(f"cannot write {path}")
