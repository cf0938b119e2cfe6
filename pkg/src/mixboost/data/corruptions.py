"""Mini corruption and perturbation sets.

Severity tables (index = severity - 1):

==============  ===========================  =================
kind            parameter                    severities 1/2/3
==============  ===========================  =================
gaussian_noise  additive N(0, sigma^2)       0.04 / 0.08 / 0.12
shot_noise      Poisson photon count rate    60 / 25 / 12
impulse_noise   salt-and-pepper fraction     0.01 / 0.03 / 0.06
box_blur        box kernel width             3 / 5 / 7
brightness      additive offset delta        0.10 / 0.20 / 0.30
contrast        contrast factor              0.60 / 0.40 / 0.20
pixelate        resample resolution          20 / 14 / 10
==============  ===========================  =================

Every output is clipped to ``[0, 1]``.
"""

import numpy as np

from .cifar import ImageBatch

KINDS = (
    "gaussian_noise",
    "shot_noise",
    "impulse_noise",
    "box_blur",
    "brightness",
    "contrast",
    "pixelate",
)

SEVERITY = {
    "gaussian_noise": (0.04, 0.08, 0.12),
    "shot_noise": (60.0, 25.0, 12.0),
    "impulse_noise": (0.01, 0.03, 0.06),
    "box_blur": (3, 5, 7),
    "brightness": (0.10, 0.20, 0.30),
    "contrast": (0.60, 0.40, 0.20),
    "pixelate": (20, 14, 10),
}

NOISE_KINDS = ("gaussian_noise", "shot_noise", "impulse_noise")
SEQUENCE_KINDS = ("noise", "translate")
DEFAULT_SIGMA_MAX = 0.1
DEFAULT_MAX_SHIFT = 4


def _box_blur(x, width):
    pad = width // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)), mode="edge")
    c = xp.cumsum(axis=2).cumsum(axis=3)
    c = np.pad(c, ((0, 0), (0, 0), (1, 0), (1, 0)))
    H, W = x.shape[2:]
    s = c[:, :, width:width + H, width:width + W] - c[:, :, :H, width:width + W] \
        - c[:, :, width:width + H, :W] + c[:, :, :H, :W]
    return s / (width * width)


def _pixelate(x, res):
    H = x.shape[2]
    idx = (np.arange(H) * res) // H
    # block means over the source pixels mapping to each coarse cell
    onehot = np.zeros((res, H))
    onehot[idx, np.arange(H)] = 1.0
    onehot /= onehot.sum(axis=1, keepdims=True)
    coarse = np.einsum("rh,bchw,sw->bcrs", onehot, x, onehot)
    return coarse[:, :, idx][:, :, :, idx]


def corrupt(clean, kind, severity, seed):
    """Apply ``kind`` at ``severity`` (1..3); pure function of its arguments.

    ``clean`` may be an ImageBatch or a raw ``(B, 3, H, W)`` array; the same
    type is returned.
    """
    if kind not in SEVERITY:
        raise ValueError(f"unknown corruption kind {kind!r}; choose from {KINDS}")
    if severity not in (1, 2, 3):
        raise ValueError("severity must be 1, 2 or 3")
    batch = clean if isinstance(clean, ImageBatch) else None
    x = np.asarray(batch.images if batch is not None else clean, dtype=np.float64)
    p = SEVERITY[kind][severity - 1]
    rng = np.random.default_rng([seed, KINDS.index(kind), severity])
    if kind == "gaussian_noise":
        out = x + rng.normal(0.0, p, size=x.shape)
    elif kind == "shot_noise":
        out = rng.poisson(x * p) / p
    elif kind == "impulse_noise":
        u = rng.uniform(size=x.shape)
        out = x.copy()
        out[u < p / 2] = 0.0
        out[(u >= p / 2) & (u < p)] = 1.0
    elif kind == "box_blur":
        out = _box_blur(x, p)
    elif kind == "brightness":
        out = x + p
    elif kind == "contrast":
        m = x.mean(axis=(1, 2, 3), keepdims=True)
        out = (x - m) * p + m
    else:
        out = _pixelate(x, p)
    out = np.clip(out, 0.0, 1.0)
    if batch is not None:
        return ImageBatch(out, batch.ids)
    return out


def corruption_suite(clean, seed, kinds=KINDS, severities=(1, 2, 3)):
    """All (kind, severity) sets as a dict keyed by ``(kind, severity)``."""
    return {(k, s): corrupt(clean, k, s, seed) for k in kinds for s in severities}


def perturb_sequence(image, kind, T, seed, magnitude=None):
    """``T`` frames of increasing perturbation; frame 0 is the input.

    ``noise``: one fixed N(0, 1) field scaled by ``sigma_t = t * sigma_max / (T-1)``.
    ``translate``: frame ``t`` shifted by ``floor(t * max_shift / T)`` pixels
    along a seeded direction, with edge padding.
    """
    if T < 2:
        raise ValueError("sequence length T must be >= 2")
    if kind not in SEQUENCE_KINDS:
        raise ValueError(f"unknown perturbation kind {kind!r}")
    image = np.asarray(image, dtype=np.float64)
    rng = np.random.default_rng([seed, SEQUENCE_KINDS.index(kind), T])
    frames = np.empty((T,) + image.shape)
    if kind == "noise":
        sigma_max = DEFAULT_SIGMA_MAX if magnitude is None else magnitude
        z = rng.normal(size=image.shape)
        for t in range(T):
            frames[t] = np.clip(image + (t * sigma_max / (T - 1)) * z, 0.0, 1.0)
    else:
        max_shift = DEFAULT_MAX_SHIFT if magnitude is None else int(magnitude)
        axis = int(rng.integers(0, 2)) + 1  # 1 = rows, 2 = cols of (C, H, W)
        sign = 1 if rng.integers(0, 2) else -1
        H = image.shape[axis]
        for t in range(T):
            k = (t * max_shift) // T
            src = np.clip(np.arange(H) - sign * k, 0, H - 1)
            frames[t] = np.take(image, src, axis=axis)
    frames[0] = image
    return frames


def sequence_suite(images, T, seed, kinds=SEQUENCE_KINDS):
    """Stack of sequences ``(N * len(kinds), T, 3, H, W)`` for mFR."""
    out = []
    for k in kinds:
        for i, img in enumerate(np.asarray(images)):
            out.append(perturb_sequence(img, k, T, seed * 1_000_003 + i))
    return np.stack(out)
