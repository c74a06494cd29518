"""Color conversion (JFIF / BT.601 full range) and 4:2:0 chroma resampling."""

import numpy as np

from ..errors import MalformedStreamError

ROUNDING_MODES = ("truncate", "round-half-up")
UPSAMPLE_MODES = ("replicate", "linear")


def _apply_rounding(x, rounding):
    if rounding == "truncate":
        x = np.trunc(x)
    elif rounding == "round-half-up":
        x = np.floor(x + 0.5)
    else:
        raise ValueError(f"unknown rounding mode {rounding!r}")
    return np.clip(x, 0, 255).astype(np.uint8)


def ycbcr_to_rgb(y, cb, cr, rounding="round-half-up"):
    """Convert Y, Cb, Cr samples (scalars or arrays, real-valued allowed) to uint8 R, G, B."""
    y = np.asarray(y, dtype=np.float64)
    cb = np.asarray(cb, dtype=np.float64) - 128.0
    cr = np.asarray(cr, dtype=np.float64) - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return tuple(_apply_rounding(c, rounding) for c in (r, g, b))


def rgb_to_ycbcr(rgb):
    """Forward JFIF conversion; returns float64 array with the same shape as ``rgb``."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0
    cr = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0
    return np.stack([y, cb, cr], axis=-1)


def _upsample_axis_linear(plane, axis, out_len):
    # co-sited: output sample i sits at source position i / 2
    n = plane.shape[axis]
    pos = np.arange(out_len) / 2.0
    lo = np.floor(pos).astype(np.intp)
    frac = pos - lo
    lo = np.minimum(lo, n - 1)
    hi = np.minimum(lo + 1, n - 1)
    a = np.take(plane, lo, axis=axis)
    b = np.take(plane, hi, axis=axis)
    shape = [1] * plane.ndim
    shape[axis] = out_len
    frac = frac.reshape(shape)
    return a * (1.0 - frac) + b * frac


def chroma_upsample(plane, width, height, mode="linear"):
    """Upsample a half-resolution chroma plane to ``height x width``.

    ``plane`` must be ``ceil(height/2) x ceil(width/2)``. ``replicate`` copies
    each sample into its 2x2 block; ``linear`` is a co-sited triangle filter
    with edge clamping. Returns float64.
    """
    plane = np.asarray(plane, dtype=np.float64)
    expected = ((height + 1) // 2, (width + 1) // 2)
    if plane.shape != expected:
        raise MalformedStreamError(
            f"chroma plane {plane.shape} does not match {expected} for a {height}x{width} image"
        )
    if mode == "replicate":
        out = np.repeat(np.repeat(plane, 2, axis=0), 2, axis=1)
        return out[:height, :width]
    if mode == "linear":
        out = _upsample_axis_linear(plane, 0, height)
        return _upsample_axis_linear(out, 1, width)
    raise ValueError(f"unknown chroma upsampling mode {mode!r}")


def chroma_downsample(plane):
    """2x2 box average of an even-sized plane (encoder side)."""
    plane = np.asarray(plane, dtype=np.float64)
    h, w = plane.shape
    return plane.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
