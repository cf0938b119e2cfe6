"""Patch masking and the boosted loss ``CE(y, y_hat) - lambda * L_boost``.

``L_boost`` is the Shannon entropy of ``softmax(y_hat - y_hat_mask)``,
averaged over the batch. It is maximal (``ln K``) exactly when masked and
unmasked logits differ by a per-example constant, so subtracting it from the
loss pulls the masked prediction towards the unmasked one.
"""

from dataclasses import dataclass

import numpy as np

from .nn import autodiff as ad
from .nn.model import cross_entropy


@dataclass(frozen=True)
class MaskSpec:
    """Patch grid over the image; ``round(r1 * rows * cols)`` patches get masked."""

    rows: int = 8
    cols: int = 8
    r1: float = 0.7

    def __post_init__(self):
        if not 0.0 <= self.r1 <= 1.0:
            raise ValueError("mask rate r1 must lie in [0, 1]")
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one patch")

    @property
    def num_patches(self):
        return self.rows * self.cols

    @property
    def num_masked(self):
        # Python's round() ties to even
        return int(round(self.r1 * self.num_patches))


def sample_mask(spec, seed, count=None):
    """Boolean patch grid(s) with exactly ``spec.num_masked`` True entries.

    Returns shape ``(rows, cols)``, or ``(count, rows, cols)`` when ``count``
    is given (one independent realisation per image).
    """
    rng = np.random.default_rng([seed, 0x3A5C])
    P, k = spec.num_patches, spec.num_masked
    n = 1 if count is None else count
    masks = np.zeros((n, P), dtype=bool)
    for i in range(n):
        masks[i, rng.choice(P, size=k, replace=False)] = True
    masks = masks.reshape(n, spec.rows, spec.cols)
    return masks[0] if count is None else masks


def apply_mask(images, mask, fill):
    """Replace masked patches by ``fill`` (per channel); other pixels untouched."""
    images = np.asarray(images, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    B, C, H, W = images.shape
    rows, cols = mask.shape[-2:]
    if H % rows or W % cols:
        raise ValueError(f"{rows}x{cols} patch grid does not tile a {H}x{W} image")
    pixel = np.repeat(np.repeat(mask, H // rows, axis=-2), W // cols, axis=-1)
    if pixel.ndim == 2:
        pixel = np.broadcast_to(pixel, (B, H, W))
    fill = np.asarray(fill, dtype=np.float64).reshape(1, C, 1, 1)
    return np.where(pixel[:, None], fill, images)


def boost_loss(logits, masked_logits):
    """Mean entropy of ``softmax(logits - masked_logits)``; in ``[0, ln K]``."""
    logits, masked_logits = ad.as_tensor(logits), ad.as_tensor(masked_logits)
    if logits.shape != masked_logits.shape or logits.ndim != 2:
        raise ValueError(f"logit shapes differ or are not (B, K): {logits.shape} vs {masked_logits.shape}")
    logp = ad.log_softmax(logits - masked_logits, axis=1)
    B = logits.shape[0]
    return -(ad.exp(logp) * logp).sum() * (1.0 / B)


def total_loss(labels, logits, masked_logits, lam):
    """``cross_entropy(logits, labels) - lam * boost_loss(logits, masked_logits)``."""
    if lam < 0 or not np.isfinite(lam):
        raise ValueError("lambda must be finite and >= 0")
    ce = cross_entropy(logits, labels)
    if lam == 0:
        return ce
    return ce - boost_loss(logits, masked_logits) * lam
