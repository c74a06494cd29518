"""Deterministic synthetic images used by the tests, the acceptance suite and the CLI."""

import numpy as np

from .jpeg.encoder import encode


def parity_checkerboard(size=6):
    """``size x size x 3`` image: 255 where row and column are both even, else 0."""
    r, c = np.mgrid[0:size, 0:size]
    on = (r % 2 == 0) & (c % 2 == 0)
    img = np.where(on, 255, 0).astype(np.uint8)
    return np.repeat(img[:, :, None], 3, axis=2)


def upscale_nearest(img, width, height):
    h, w = img.shape[:2]
    ys = (np.arange(height) * h) // height
    xs = (np.arange(width) * w) // width
    return img[ys][:, xs]


def _smooth_noise(rng, side, cutoff):
    noise = rng.normal(size=(side, side, 3))
    f = np.fft.fftfreq(side)
    mask = (np.hypot(*np.meshgrid(f, f)) < cutoff)[:, :, None]
    out = np.real(np.fft.ifft2(np.fft.fft2(noise, axes=(0, 1)) * mask, axes=(0, 1)))
    return out / (out.std() + 1e-12)


def natural_image(rng, side=32):
    """One smooth, photo-like synthetic image: colored blobs, gradient, texture, noise."""
    y, x = np.mgrid[0:side, 0:side] / side
    img = np.zeros((side, side, 3))
    img += rng.uniform(40, 200, 3)
    gdir = rng.normal(size=2)
    img += (gdir[0] * (x - 0.5) + gdir[1] * (y - 0.5))[:, :, None] * rng.uniform(20, 60, 3)
    for _ in range(rng.integers(2, 5)):
        cx, cy = rng.uniform(0, 1, 2)
        s = rng.uniform(0.08, 0.3)
        blob = np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * s * s))
        img += blob[:, :, None] * rng.uniform(-80, 80, 3)
    freq = rng.uniform(1, 6)
    theta = rng.uniform(0, np.pi)
    wave = np.sin(2 * np.pi * freq * (x * np.cos(theta) + y * np.sin(theta)) + rng.uniform(0, 2 * np.pi))
    img += wave[:, :, None] * rng.uniform(5, 25)
    img += _smooth_noise(rng, side, 0.25) * rng.uniform(3, 10)
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def fixture_images(n=16, side=32, seed=1180):
    rng = np.random.default_rng(seed)
    return [natural_image(rng, side) for _ in range(n)]


def fixture_corpus(n=16, side=32, seed=1180, quality=100, subsampling="4:4:4"):
    """(original images, JPEG bytes) of the decoder-divergence fixture corpus."""
    images = fixture_images(n, side, seed)
    return images, [encode(img, quality, subsampling) for img in images]


# ---------------------------------------------------------------------------
# toy classification corpus


def toy_class_params(n_classes, seed=7):
    """Per-class texture (frequency, orientation, phase) and base color."""
    rng = np.random.default_rng([seed, n_classes])
    params = []
    for k in range(n_classes):
        params.append({
            "freq": 10.0 + 12.0 * k / max(1, n_classes - 1),
            "theta": rng.uniform(0, np.pi),
            "phase": rng.uniform(0, 2 * np.pi),
            "color": rng.uniform(90, 165, 3),
        })
    return params


def toy_image(label, params, rng, side=64, texture_amp=40.0, color_jitter=18.0, noise=12.0):
    """One toy image of class ``label``: class-colored field plus a class texture."""
    p = params[label]
    y, x = np.mgrid[0:side, 0:side] / side
    color = p["color"] + rng.normal(0, color_jitter, 3)
    arg = 2 * np.pi * p["freq"] * (x * np.cos(p["theta"]) + y * np.sin(p["theta"])) + p["phase"]
    amp = texture_amp * rng.uniform(0.6, 1.4)
    img = color[None, None, :] + (amp * np.sin(arg))[:, :, None]
    img = img + _smooth_noise(rng, side, 0.35) * noise
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def toy_corpus(n_images, n_classes=2, seed=0, side=64, quality=85, subsampling="4:2:0", **kw):
    """Balanced toy corpus as (list of JPEG bytes, labels array)."""
    params = toy_class_params(n_classes)
    rng = np.random.default_rng([seed, 0x70])
    labels = np.arange(n_images) % n_classes
    data = [encode(toy_image(int(k), params, rng, side, **kw), quality, subsampling) for k in labels]
    return data, labels.astype(np.int64)
