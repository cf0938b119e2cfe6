"""Procedural stand-in datasets: coloured shapes on textured backgrounds.

Class ``c`` fixes the shape family and a base hue; position, size, exact
colour and background texture are sampled per image.
"""

import colorsys

import numpy as np

from .cifar import ImageBatch

SIZE = 32
SHAPES = (
    "disc",
    "square",
    "triangle",
    "ring",
    "plus",
    "cross",
    "hbars",
    "vbars",
    "diamond",
    "frame",
)

_YY, _XX = np.mgrid[0:SIZE, 0:SIZE].astype(np.float64) + 0.5


def _shape_mask(kind, cy, cx, r):
    dy, dx = _YY - cy, _XX - cx
    if kind == "disc":
        return dy**2 + dx**2 <= r**2
    if kind == "square":
        return (np.abs(dy) <= r * 0.85) & (np.abs(dx) <= r * 0.85)
    if kind == "triangle":
        return (dy <= r * 0.8) & (dy >= -r) & (np.abs(dx) <= (dy + r) * 0.6)
    if kind == "ring":
        d2 = dy**2 + dx**2
        return (d2 <= r**2) & (d2 >= (0.55 * r) ** 2)
    if kind == "plus":
        w = max(r * 0.3, 1.0)
        return ((np.abs(dy) <= w) & (np.abs(dx) <= r)) | ((np.abs(dx) <= w) & (np.abs(dy) <= r))
    if kind == "cross":
        w = max(r * 0.3, 1.0)
        inside = (np.abs(dy) <= r) & (np.abs(dx) <= r)
        return inside & ((np.abs(dy - dx) <= w) | (np.abs(dy + dx) <= w))
    if kind == "hbars":
        inside = (np.abs(dy) <= r) & (np.abs(dx) <= r)
        return inside & (np.floor((dy + r) / max(r * 0.5, 1.5)) % 2 == 0)
    if kind == "vbars":
        inside = (np.abs(dy) <= r) & (np.abs(dx) <= r)
        return inside & (np.floor((dx + r) / max(r * 0.5, 1.5)) % 2 == 0)
    if kind == "diamond":
        return np.abs(dy) + np.abs(dx) <= r * 1.1
    if kind == "frame":
        outer = (np.abs(dy) <= r) & (np.abs(dx) <= r)
        inner = (np.abs(dy) <= r * 0.6) & (np.abs(dx) <= r * 0.6)
        return outer & ~inner
    raise ValueError(f"unknown shape {kind!r}")


def _background(rng):
    base = rng.uniform(0.15, 0.85, size=3)
    base = base * 0.4 + base.mean() * 0.6  # desaturate
    gy, gx = rng.normal(0, 0.15, size=(2, 3))
    grad = gy[:, None, None] * (_YY / SIZE - 0.5) + gx[:, None, None] * (_XX / SIZE - 0.5)
    # coarse 8x8 texture, upsampled to 32x32
    coarse = rng.normal(0, 0.06, size=(1, 8, 8))
    tex = np.kron(coarse, np.ones((1, 4, 4)))
    fine = rng.normal(0, 0.03, size=(3, SIZE, SIZE))
    return base[:, None, None] + grad + tex + fine


def render(label, rng, num_classes=10):
    """Render one image of class ``label`` (values in [0, 1])."""
    kind = SHAPES[label % len(SHAPES)]
    hue = (label / num_classes + rng.uniform(-0.04, 0.04)) % 1.0
    color = np.array(colorsys.hsv_to_rgb(hue, rng.uniform(0.6, 1.0), rng.uniform(0.65, 1.0)))
    r = rng.uniform(7.0, 12.0)
    cy, cx = rng.uniform(r * 0.8 + 1, SIZE - r * 0.8 - 1, size=2)
    img = _background(rng)
    mask = _shape_mask(kind, cy, cx, r)
    shade = 1.0 + rng.normal(0, 0.04, size=(3, SIZE, SIZE))
    img = np.where(mask[None], color[:, None, None] * shade, img)
    return np.clip(img, 0.0, 1.0)


def synth_dataset(num_classes, per_class, seed):
    """Class-balanced procedural dataset, a pure function of its arguments."""
    if num_classes < 2:
        raise ValueError("num_classes must be >= 2")
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    n = num_classes * per_class
    labels = np.tile(np.arange(num_classes), per_class)
    images = np.empty((n, 3, SIZE, SIZE))
    ss = np.random.SeedSequence([seed, num_classes, 0x5EED])
    for i, child in enumerate(ss.spawn(n)):
        images[i] = render(int(labels[i]), np.random.default_rng(child), num_classes)
    ids = np.array([f"synth-{seed}-{i}" for i in range(n)])
    return ImageBatch(images, ids), labels


def _grating(rng):
    theta = rng.uniform(0, np.pi)
    freq = rng.uniform(0.15, 0.6)
    phase = rng.uniform(0, 2 * np.pi)
    wave = 0.5 + 0.5 * np.sin(freq * (np.cos(theta) * _XX + np.sin(theta) * _YY) + phase)
    tint = rng.uniform(0.3, 1.0, size=3)
    return wave[None] * tint[:, None, None]


def _uniform_noise(rng):
    return rng.uniform(0, 1, size=(3, SIZE, SIZE))


def _checker(rng):
    cell = int(rng.integers(2, 9))
    board = ((_YY // cell + _XX // cell) % 2).astype(np.float64)
    a, b = rng.uniform(0, 1, size=(2, 3))
    return a[:, None, None] * board + b[:, None, None] * (1 - board)


def _blobs(rng):
    coarse = rng.uniform(0, 1, size=(3, 4, 4))
    return np.kron(coarse, np.ones((1, 8, 8)))


_OOD_GENERATORS = (_uniform_noise, _grating, _checker, _blobs)


def synth_ood(count, seed):
    """Out-of-distribution images from generators unrelated to the shape classes."""
    if count < 1:
        raise ValueError("count must be >= 1")
    ss = np.random.SeedSequence([seed, 0x00D])
    images = np.empty((count, 3, SIZE, SIZE))
    for i, child in enumerate(ss.spawn(count)):
        rng = np.random.default_rng(child)
        gen = _OOD_GENERATORS[i % len(_OOD_GENERATORS)]
        images[i] = np.clip(gen(rng), 0.0, 1.0)
    ids = np.array([f"ood-{seed}-{i}" for i in range(count)])
    return ImageBatch(images, ids)
