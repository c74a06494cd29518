"""Train/val preprocessing: square resize + center crop, and random resized crop."""

import math

import numpy as np

from .errors import ConfigError, InvalidCropError
from .resize import ResizeSpec, resize

OUTPUT_SIDE = 224
VAL_RESIZE = 256
SCALE_RANGE = (0.08, 1.0)
RATIO_RANGE = (3.0 / 4.0, 4.0 / 3.0)
MAX_ATTEMPTS = 10
TRANSFORM_KINDS = ("train", "val")


class RngStream:
    """Deterministic random stream for one image.

    Backed by the counter-based Philox generator keyed from ``(seed, index)``
    (plus an optional domain tag), so streams for different images can be
    consumed in any order or in parallel.
    """

    def __init__(self, seed, index, tag=0):
        self.seed = int(seed)
        self.index = int(index)
        ss = np.random.SeedSequence([int(tag), self.seed, self.index])
        self._gen = np.random.Generator(np.random.Philox(ss))

    def uniform(self, low=0.0, high=1.0):
        return float(self._gen.uniform(low, high))

    def integers(self, low, high):
        """Integer in [low, high)."""
        return int(self._gen.integers(low, high))


def as_rgb(img):
    img = np.asarray(img)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.shape[2] == 1:
        img = np.repeat(img, 3, axis=2)
    return img


def center_crop(img, out_w, out_h):
    h, w = img.shape[:2]
    if out_w > w or out_h > h or out_w < 1 or out_h < 1:
        raise InvalidCropError(f"cannot crop {out_w}x{out_h} from a {w}x{h} image")
    x0 = (w - out_w) // 2
    y0 = (h - out_h) // 2
    return img[y0:y0 + out_h, x0:x0 + out_w]


def sample_area_ratio(rng, scale_range=SCALE_RANGE, ratio_range=RATIO_RANGE):
    """One (area fraction, aspect ratio) draw: uniform area, log-uniform ratio."""
    frac = rng.uniform(*scale_range)
    log_lo, log_hi = math.log(ratio_range[0]), math.log(ratio_range[1])
    aspect = math.exp(rng.uniform(log_lo, log_hi))
    return frac, aspect


def crop_window(width, height, rng, scale_range=SCALE_RANGE, ratio_range=RATIO_RANGE):
    """Return (x, y, w, h) of the random crop, falling back to a center crop."""
    if not (0 < scale_range[0] <= scale_range[1] <= 1.0):
        raise ConfigError(f"bad scale range {scale_range}")
    if not (0 < ratio_range[0] <= ratio_range[1]):
        raise ConfigError(f"bad ratio range {ratio_range}")
    area = width * height
    for _ in range(MAX_ATTEMPTS):
        frac, aspect = sample_area_ratio(rng, scale_range, ratio_range)
        w = int(round(math.sqrt(area * frac * aspect)))
        h = int(round(math.sqrt(area * frac / aspect)))
        if 0 < w <= width and 0 < h <= height:
            x = rng.integers(0, width - w + 1)
            y = rng.integers(0, height - h + 1)
            return x, y, w, h
    in_ratio = width / height
    if in_ratio < ratio_range[0]:
        w = width
        h = int(round(w / ratio_range[0]))
    elif in_ratio > ratio_range[1]:
        h = height
        w = int(round(h * ratio_range[1]))
    else:
        w, h = width, height
    return (width - w) // 2, (height - h) // 2, w, h


def random_resized_crop(img, rng, spec, out_side=OUTPUT_SIDE, scale_range=SCALE_RANGE,
                        ratio_range=RATIO_RANGE):
    """Crop a random window and resize it to ``out_side`` square with ``spec``'s kernel."""
    h, w = img.shape[:2]
    x, y, cw, ch = crop_window(w, h, rng, scale_range, ratio_range)
    crop = img[y:y + ch, x:x + cw]
    return resize(crop, spec.with_size(out_side, out_side))


def val_transform(img, spec):
    """Square resize to 256x256 (not shorter-side), then center crop 224x224."""
    out = resize(img, spec.with_size(VAL_RESIZE, VAL_RESIZE))
    return center_crop(out, OUTPUT_SIDE, OUTPUT_SIDE)


def train_transform(img, spec, seed, index):
    return random_resized_crop(img, RngStream(seed, index), spec)


def apply_transform(img, kind, spec: ResizeSpec, seed=0, index=0):
    """Dispatch on ``kind`` in {'train', 'val'}; output is always 224x224x3 uint8."""
    img = as_rgb(img)
    if kind == "val":
        return val_transform(img, spec)
    if kind == "train":
        return train_transform(img, spec, seed, index)
    raise ConfigError(f"unknown transform type {kind!r}; expected 'train' or 'val'")
