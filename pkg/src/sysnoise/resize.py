"""Separable image resampling under two sampling conventions.

Convention ``A`` is the fixed-tap family: the kernel is evaluated at its
nominal support around ``(dst + 0.5) * scale - 0.5``, with no antialiasing on
downscale. Convention ``B`` is the antialiased family: the destination centre
is ``(dst + 0.5) * scale`` and the kernel support is stretched by
``max(scale, 1)``. Both clamp to the edge. Intermediate values stay in
float64 and are rounded half away from zero once, after the second pass.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, InvalidCellError, UnsupportedCombinationError

KERNELS = ("nearest", "bilinear", "bicubic", "lanczos", "area", "box", "hamming")
CONVENTIONS = ("A", "B")

# Kernel availability per convention (A ~ OpenCV, B ~ Pillow)
_AVAILABLE = {
    "A": {"nearest", "bilinear", "bicubic", "lanczos", "area"},
    "B": {"nearest", "bilinear", "bicubic", "lanczos", "box", "hamming"},
}

LIBRARY_CONVENTION = {"opencv": "A", "pil": "B"}
_KERNEL_ALIASES = {"linear": "bilinear", "cubic": "bicubic", "lanczos3": "lanczos"}

#: the six variants of the benchmark (three kernels from each library)
STANDARD_RESIZE_VARIANTS = (
    "pil-nearest",
    "pil-bilinear",
    "pil-bicubic",
    "opencv-nearest",
    "opencv-bilinear",
    "opencv-bicubic",
)
DEFAULT_RESIZE = "pil-bilinear"


@dataclass(frozen=True)
class KernelProfile:
    name: str
    support: float
    a: float = -0.5  # cubic parameter
    lobes: int = 3  # lanczos

    def weight(self, t):
        return kernel_weight(self, t)


def kernel_profile(kernel, convention):
    support = {
        "nearest": 0.5,
        "box": 0.5,
        "area": 0.5,
        "bilinear": 1.0,
        "hamming": 1.0,
        "bicubic": 2.0,
        "lanczos": 3.0,
    }[kernel]
    a = -0.75 if convention == "A" else -0.5
    return KernelProfile(kernel, support, a=a)


@dataclass(frozen=True)
class ResizeSpec:
    kernel: str
    convention: str
    width: int
    height: int

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if self.convention not in CONVENTIONS:
            raise ConfigError(f"unknown convention {self.convention!r}")
        if self.kernel not in _AVAILABLE[self.convention]:
            raise UnsupportedCombinationError(
                f"kernel {self.kernel!r} is not available under convention {self.convention}"
            )
        if self.width < 1 or self.height < 1:
            raise ConfigError(f"target size must be positive, got {self.width}x{self.height}")

    def with_size(self, width, height):
        return replace(self, width=int(width), height=int(height))

    @property
    def profile(self):
        return kernel_profile(self.kernel, self.convention)


def parse_resize_variant(name):
    """Split ``'pil-bilinear'`` into (kernel, convention), validating availability."""
    try:
        lib, kernel = name.lower().split("-", 1)
        convention = LIBRARY_CONVENTION[lib]
    except (ValueError, KeyError):
        raise ConfigError(
            f"bad resize variant {name!r}; expected '<pil|opencv>-<kernel>'"
        ) from None
    kernel = _KERNEL_ALIASES.get(kernel, kernel)
    # constructing a spec runs the availability check
    ResizeSpec(kernel, convention, 1, 1)
    return kernel, convention


def resize_variant(name, width, height):
    kernel, convention = parse_resize_variant(name)
    return ResizeSpec(kernel, convention, width, height)


def _sinc(x):
    return np.sinc(x)  # sin(pi x) / (pi x)


def kernel_weight(profile, t):
    """Evaluate the continuous kernel at offset ``t`` (scalar or array)."""
    t = np.abs(np.asarray(t, dtype=np.float64))
    name = profile.name
    if name in ("nearest", "box", "area"):
        w = (t <= 0.5).astype(np.float64)
        return w if w.ndim else float(w)
    if name == "bilinear":
        w = np.maximum(0.0, 1.0 - t)
    elif name == "bicubic":
        a = profile.a
        w = np.where(
            t <= 1.0,
            ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0,
            np.where(t < 2.0, ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a, 0.0),
        )
    elif name == "lanczos":
        n = profile.lobes
        w = np.where(t < n, _sinc(t) * _sinc(t / n), 0.0)
    elif name == "hamming":
        w = np.where(t < 1.0, (0.54 + 0.46 * np.cos(np.pi * t)) * _sinc(t), 0.0)
    else:
        raise ConfigError(f"unknown kernel {name!r}")
    return w if w.ndim else float(w)


def map_src_coord(dst, scale, convention, kernel="bilinear", src_size=None):
    """Map a destination index to a source coordinate.

    For ``nearest`` the result is an integer source index, otherwise the
    continuous coordinate on which the filtering kernel is centred.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    if kernel == "nearest":
        if convention == "A":
            idx = math.floor(dst * scale)
        else:
            idx = math.floor((dst + 0.5) * scale)
        if src_size is not None:
            idx = min(idx, src_size - 1)
        return idx
    if convention == "A":
        return (dst + 0.5) * scale - 0.5
    return (dst + 0.5) * scale


def _nearest_indices(in_size, out_size, convention):
    d = np.arange(out_size, dtype=np.int64)
    # integer arithmetic avoids float floor artifacts at exact boundaries
    if convention == "A":
        idx = (d * in_size) // out_size
    else:
        idx = ((2 * d + 1) * in_size) // (2 * out_size)
    return np.minimum(idx, in_size - 1)


def axis_weights(in_size, out_size, kernel, convention):
    """Per-destination tap indices and normalized weights, each ``(out_size, taps)``.

    Indices are already clamped to ``[0, in_size)``.
    """
    scale = in_size / out_size
    dst = np.arange(out_size, dtype=np.float64)
    if kernel == "nearest":
        idx = _nearest_indices(in_size, out_size, convention)[:, None]
        return idx, np.ones((out_size, 1))

    if kernel == "area":
        # exact box average over the footprint [dst*scale, (dst+1)*scale)
        lo = dst * scale
        hi = (dst + 1.0) * scale
        first = np.floor(lo).astype(np.int64)
        ntaps = int(math.ceil(scale)) + 1
        taps = first[:, None] + np.arange(ntaps)[None, :]
        overlap = np.minimum(hi[:, None], taps + 1.0) - np.maximum(lo[:, None], taps.astype(np.float64))
        w = np.maximum(overlap, 0.0)
    else:
        profile = kernel_profile(kernel, convention)
        if convention == "A":
            center = (dst + 0.5) * scale - 0.5
            stretch = 1.0
            support = profile.support
            first = np.floor(center - support).astype(np.int64) + 1
            ntaps = int(2 * support)
        else:
            center = (dst + 0.5) * scale
            stretch = max(scale, 1.0)
            support = profile.support * stretch
            first = np.floor(center - support - 0.5).astype(np.int64)
            ntaps = int(math.ceil(2 * support)) + 2
        taps = first[:, None] + np.arange(ntaps)[None, :]
        if convention == "A":
            t = center[:, None] - taps
        else:
            t = (taps + 0.5 - center[:, None]) / stretch
        w = kernel_weight(profile, t)
    total = w.sum(axis=1, keepdims=True)
    w = w / total
    keep = np.any(w != 0.0, axis=0)
    return np.clip(taps[:, keep], 0, in_size - 1), w[:, keep]


def _resample_axis(data, idx, w, axis):
    # fixed-order tap accumulation keeps results independent of BLAS threading
    out = None
    for k in range(idx.shape[1]):
        shape = [1] * data.ndim
        shape[axis] = idx.shape[0]
        term = np.take(data, idx[:, k], axis=axis) * w[:, k].reshape(shape)
        out = term if out is None else out + term
    return out


def round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def resize_float(img, spec):
    """Resample to ``spec`` size without the final rounding; returns float64."""
    img = np.asarray(img)
    h, w = img.shape[:2]
    data = img.astype(np.float64)
    ix, wx = axis_weights(w, spec.width, spec.kernel, spec.convention)
    data = _resample_axis(data, ix, wx, axis=1)
    iy, wy = axis_weights(h, spec.height, spec.kernel, spec.convention)
    return _resample_axis(data, iy, wy, axis=0)


def resize(img, spec):
    """Resize an ``(h, w)`` or ``(h, w, c)`` uint8 image; horizontal pass first, then vertical."""
    out = resize_float(img, spec)
    return np.clip(round_half_away(out), 0, 255).astype(np.uint8)


def bilinear_at(q11, q21, q12, q22, x1, y1, x2, y2, x, y):
    """Two-step linear interpolation inside the cell [x1, x2] x [y1, y2]."""
    if x1 == x2 or y1 == y2:
        raise InvalidCellError("degenerate interpolation cell")
    fx1 = (x2 - x) / (x2 - x1) * q11 + (x - x1) / (x2 - x1) * q21
    fx2 = (x2 - x) / (x2 - x1) * q12 + (x - x1) / (x2 - x1) * q22
    return (y2 - y) / (y2 - y1) * fx1 + (y - y1) / (y2 - y1) * fx2


# Maps [f, f_x, f_y, f_xy] at the four unit-cell corners to the 16 a_ij.
_BICUBIC_AINV = np.array([
    [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [-3, 3, 0, 0, -2, -1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [2, -2, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, -3, 3, 0, 0, -2, -1, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 2, -2, 0, 0, 1, 1, 0, 0],
    [-3, 0, 3, 0, 0, 0, 0, 0, -2, 0, -1, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, -3, 0, 3, 0, 0, 0, 0, 0, -2, 0, -1, 0],
    [9, -9, -9, 9, 6, 3, -6, -3, 6, -6, 3, -3, 4, 2, 2, 1],
    [-6, 6, 6, -6, -3, -3, 3, 3, -4, 4, -2, 2, -2, -2, -1, -1],
    [2, 0, -2, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 2, 0, -2, 0, 0, 0, 0, 0, 1, 0, 1, 0],
    [-6, 6, 6, -6, -4, -2, 4, 2, -3, 3, -3, 3, -2, -1, -2, -1],
    [4, -4, -4, 4, 2, 2, -2, -2, 2, -2, 2, -2, 1, 1, 1, 1],
], dtype=np.float64)


def bicubic_coefficients(patch, a=-0.5):
    """Fit a_ij (as a 4x4 array indexed [i, j]) on the central cell of a 4x4 patch.

    ``patch[r, c]`` holds samples at x = c - 1, y = r - 1, so the cell is
    [0, 1] x [0, 1]. Corner derivatives are finite differences scaled by
    ``-2a``; ``a = -0.5`` gives plain central differences (Catmull-Rom).
    """
    p = np.asarray(patch, dtype=np.float64)
    if p.shape != (4, 4):
        raise ValueError("bicubic patch must be 4x4")
    g = -a  # derivative gain: f_x ~ g * (f[x+1] - f[x-1])
    corners = [(0, 0), (1, 0), (0, 1), (1, 1)]  # (x, y) in the order of _BICUBIC_AINV
    f, fx, fy, fxy = [], [], [], []
    for cx, cy in corners:
        r, c = cy + 1, cx + 1
        f.append(p[r, c])
        fx.append(g * (p[r, c + 1] - p[r, c - 1]))
        fy.append(g * (p[r + 1, c] - p[r - 1, c]))
        fxy.append(g * g * (p[r + 1, c + 1] - p[r - 1, c + 1] - p[r + 1, c - 1] + p[r - 1, c - 1]))
    alpha = _BICUBIC_AINV @ np.array(f + fx + fy + fxy)
    # alpha is ordered a00, a10, a20, a30, a01, ... (i = power of x)
    return alpha.reshape(4, 4).T


def bicubic_ref(patch, x, y, a=-0.5):
    """Evaluate the fitted bicubic polynomial at (x, y) in the central cell."""
    coef = bicubic_coefficients(patch, a)
    xs = np.array([1.0, x, x * x, x ** 3])
    ys = np.array([1.0, y, y * y, y ** 3])
    return float(xs @ coef @ ys)
