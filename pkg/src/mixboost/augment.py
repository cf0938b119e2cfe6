"""Per-batch augmentation operators.

Every operator takes ``(images, labels, ..., seed)`` with images shaped
``(B, 3, 32, 32)`` in ``[0, 1]`` and labels either as class indices or as a
``(B, K)`` soft-label matrix, and returns an :class:`AugmentedBatch` with
soft labels.
"""

from dataclasses import dataclass, field

import numpy as np

SIZE = 32
AREA = SIZE * SIZE


@dataclass
class AugmentedBatch:
    images: np.ndarray
    labels: np.ndarray
    provenance: dict = field(default_factory=dict)


def to_soft(labels, num_classes=None):
    labels = np.asarray(labels)
    if labels.ndim == 2:
        return labels.astype(np.float64)
    if num_classes is None:
        raise ValueError("num_classes is required for hard labels")
    q = np.zeros((len(labels), num_classes))
    q[np.arange(len(labels)), labels.astype(np.int64)] = 1.0
    return q


def _check(images):
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 4 or images.shape[1:] != (3, SIZE, SIZE):
        raise ValueError(f"expected images of shape (B, 3, 32, 32), got {images.shape}")
    return images


def identity(images, labels, seed=0, num_classes=None):
    return AugmentedBatch(_check(images).copy(), to_soft(labels, num_classes), {"op": "none"})


def basic_flip_shift(images, seed, max_shift=2):
    """Random horizontal flip plus an integer translation with edge padding."""
    images = _check(images)
    rng = np.random.default_rng([seed, 0xF11B])
    out = np.empty_like(images)
    flips = rng.random(len(images)) < 0.5
    shifts = rng.integers(-max_shift, max_shift + 1, size=(len(images), 2))
    base = np.arange(SIZE)
    for i, img in enumerate(images):
        if flips[i]:
            img = img[:, :, ::-1]
        rows = np.clip(base - shifts[i, 0], 0, SIZE - 1)
        cols = np.clip(base - shifts[i, 1], 0, SIZE - 1)
        out[i] = img[:, rows][:, :, cols]
    return out


def cutout(images, labels, hole_size, seed, fill=(0.5, 0.5, 0.5), num_classes=None):
    """Replace one ``hole_size`` square per image (fully inside the frame) with ``fill``."""
    images = _check(images)
    if not 0 <= hole_size <= SIZE:
        raise ValueError(f"hole_size must lie in [0, {SIZE}]")
    rng = np.random.default_rng([seed, 0xC0])
    out = images.copy()
    corners = rng.integers(0, SIZE - hole_size + 1, size=(len(images), 2))
    fill = np.asarray(fill, dtype=np.float64)[:, None, None]
    for i, (y, x) in enumerate(corners):
        out[i, :, y:y + hole_size, x:x + hole_size] = fill
    prov = {"op": "cutout", "hole_size": int(hole_size), "corners": corners.tolist()}
    return AugmentedBatch(out, to_soft(labels, num_classes), prov)


def mixup(images, labels, beta_alpha, seed, lam=None, num_classes=None):
    """Convex combination with a seeded partner permutation; ``lam ~ Beta(a, a)``."""
    images = _check(images)
    if len(images) < 2:
        raise ValueError("mixup needs a batch of at least 2")
    if beta_alpha <= 0:
        raise ValueError("beta_alpha must be positive")
    rng = np.random.default_rng([seed, 0x313])
    perm = rng.permutation(len(images))
    drawn = rng.beta(beta_alpha, beta_alpha)
    lam = drawn if lam is None else float(lam)
    q = to_soft(labels, num_classes)
    out = lam * images + (1.0 - lam) * images[perm]
    q_out = lam * q + (1.0 - lam) * q[perm]
    return AugmentedBatch(out, q_out, {"op": "mixup", "lam": lam, "perm": perm.tolist()})


def cutmix(images, labels, beta_alpha, seed, rho=None, num_classes=None):
    """Paste a rectangle from a partner image; labels weighted by pasted area.

    The target pasted fraction is ``1 - lam`` with ``lam ~ Beta(a, a)``, or
    ``rho`` when forced; the label weight is always the realised area / 1024.
    """
    images = _check(images)
    if len(images) < 2:
        raise ValueError("cutmix needs a batch of at least 2")
    if beta_alpha <= 0:
        raise ValueError("beta_alpha must be positive")
    rng = np.random.default_rng([seed, 0xC4])
    perm = rng.permutation(len(images))
    target = 1.0 - rng.beta(beta_alpha, beta_alpha)
    if rho is not None:
        target = float(rho)
    side = int(round(SIZE * np.sqrt(target)))
    cy, cx = rng.integers(0, SIZE, size=2)
    if side >= SIZE:
        y0, x0, y1, x1 = 0, 0, SIZE, SIZE
    else:
        # box centred on (cy, cx), shifted to stay inside the frame
        y0 = int(np.clip(cy - side // 2, 0, SIZE - side))
        x0 = int(np.clip(cx - side // 2, 0, SIZE - side))
        y1, x1 = y0 + side, x0 + side
    out = images.copy()
    out[:, :, y0:y1, x0:x1] = images[perm][:, :, y0:y1, x0:x1]
    area = (y1 - y0) * (x1 - x0) / AREA
    q = to_soft(labels, num_classes)
    q_out = (1.0 - area) * q + area * q[perm]
    prov = {"op": "cutmix", "rho": area, "box": [y0, x0, y1, x1], "perm": perm.tolist()}
    return AugmentedBatch(out, q_out, prov)


def plasma_fractal(size=32, roughness=0.6, seed=0):
    """Diamond-square heightfield cropped to ``size`` and rescaled to ``[0, 1]``.

    ``roughness`` is the per-level decay of the random displacement; values
    near 1 keep fine-scale detail, small values give smooth fields.
    """
    if not 0.0 < roughness <= 1.0:
        raise ValueError("roughness must lie in (0, 1]")
    rng = np.random.default_rng([seed, 0xF4AC])
    n = 2
    while n + 1 < size:
        n *= 2
    n += 1
    a = np.zeros((n, n))
    a[:: n - 1, :: n - 1] = rng.uniform(-1, 1, size=(2, 2))
    step, scale = n - 1, 1.0
    idx = np.arange(n)
    while step > 1:
        half = step // 2
        # diamond step: square centres
        c = a[0:n - 1:step, 0:n - 1:step] + a[step::step, 0:n - 1:step] \
            + a[0:n - 1:step, step::step] + a[step::step, step::step]
        a[half::step, half::step] = c / 4 + rng.uniform(-scale, scale, size=c.shape)
        # square step: edge midpoints
        ii, jj = np.meshgrid(idx[::half], idx[::half], indexing="ij")
        sel = ((ii + jj) // half) % 2 == 1
        ii, jj = ii[sel], jj[sel]
        total = np.zeros(len(ii))
        count = np.zeros(len(ii))
        for di, dj in ((-half, 0), (half, 0), (0, -half), (0, half)):
            ni, nj = ii + di, jj + dj
            ok = (ni >= 0) & (ni < n) & (nj >= 0) & (nj < n)
            total[ok] += a[ni[ok], nj[ok]]
            count[ok] += 1
        a[ii, jj] = total / count + rng.uniform(-scale, scale, size=len(ii))
        step = half
        scale *= roughness
    a = a[:size, :size]
    lo, hi = a.min(), a.max()
    if hi == lo:
        return np.zeros((size, size))
    return (a - lo) / (hi - lo)


def make_mixer_pool(count, seed, roughness=(0.4, 0.8)):
    """``count`` colour mixing images, one plasma fractal per channel."""
    rng = np.random.default_rng([seed, 0x9001])
    pool = np.empty((count, 3, SIZE, SIZE))
    for k in range(count):
        r = rng.uniform(*roughness)
        base = int(rng.integers(0, 2**31))
        pool[k] = np.stack([plasma_fractal(SIZE, r, base + c) for c in range(3)])
    return pool


def _mix(x, partner, w, multiplicative):
    if multiplicative:
        return np.power(x, 1.0 - w) * np.power(partner, w)
    return (1.0 - w) * x + w * partner


def pixmix_style(images, labels, mixer_pool, k_max=4, beta=3.0, seed=0, num_classes=None):
    """Procedural PixMix analogue.

    Each image runs ``k ~ U{0..k_max}`` mixing rounds. A round picks a
    partner (a fractal from ``mixer_pool`` or, with probability 1/2, a
    flipped/shifted view of the original), draws ``w ~ Beta(beta, beta)`` and
    mixes either additively ``(1 - w) x + w p`` or multiplicatively
    ``x^(1 - w) p^w``. Labels pass through unchanged.
    """
    images = _check(images)
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    pool = np.asarray(mixer_pool, dtype=np.float64) if mixer_pool is not None else np.zeros((0, 3, SIZE, SIZE))
    if k_max > 0 and len(pool) == 0:
        raise ValueError("mixer_pool is empty")
    q = to_soft(labels, num_classes)
    if k_max == 0:
        return AugmentedBatch(images.copy(), q, {"op": "pixmix_style", "rounds": [0] * len(images)})
    rng = np.random.default_rng([seed, 0x919])
    views = basic_flip_shift(images, int(rng.integers(0, 2**31)))
    out = images.copy()
    rounds = rng.integers(0, k_max + 1, size=len(images))
    for i in range(len(images)):
        x = out[i]
        for _ in range(rounds[i]):
            if rng.random() < 0.5:
                partner = views[i]
            else:
                partner = pool[int(rng.integers(0, len(pool)))]
            w = rng.beta(beta, beta)
            x = np.clip(_mix(x, partner, w, rng.random() < 0.5), 0.0, 1.0)
        out[i] = x
    return AugmentedBatch(out, q, {"op": "pixmix_style", "rounds": rounds.tolist()})


OPERATORS = ("none", "cutout", "mixup", "cutmix", "pixmix_style")


class Augmenter:
    """Binds an operator name and its parameters; ``apply(images, labels, seed)``."""

    def __init__(self, op="none", num_classes=10, fill=(0.5, 0.5, 0.5), hole_size=16,
                 beta_alpha=1.0, k_max=4, beta=3.0, mixer_pool_size=64, mixer_seed=0):
        if op not in OPERATORS:
            raise ValueError(f"unknown augmentation {op!r}; choose from {OPERATORS}")
        self.op = op
        self.num_classes = num_classes
        self.fill = tuple(float(f) for f in fill)
        self.hole_size = hole_size
        self.beta_alpha = beta_alpha
        self.k_max = k_max
        self.beta = beta
        self.pool = make_mixer_pool(mixer_pool_size, mixer_seed) if op == "pixmix_style" else None

    def apply(self, images, labels, seed):
        K = self.num_classes
        if self.op == "none":
            return identity(images, labels, num_classes=K)
        if self.op == "cutout":
            return cutout(images, labels, self.hole_size, seed, fill=self.fill, num_classes=K)
        if self.op == "mixup":
            return mixup(images, labels, self.beta_alpha, seed, num_classes=K)
        if self.op == "cutmix":
            return cutmix(images, labels, self.beta_alpha, seed, num_classes=K)
        return pixmix_style(images, labels, self.pool, self.k_max, self.beta, seed, num_classes=K)
