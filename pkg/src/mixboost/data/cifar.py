"""CIFAR-10 binary record format.

Each record is 3073 bytes: one label byte followed by 1024 red, 1024 green
and 1024 blue pixel bytes (row-major 32x32 planes).
"""

from dataclasses import dataclass

import numpy as np

RECORD_BYTES = 3073
IMAGE_BYTES = 3072


class FormatError(ValueError):
    pass


@dataclass
class ImageBatch:
    """Images ``(B, 3, 32, 32)`` in ``[0, 1]`` plus per-example identifiers."""

    images: np.ndarray
    ids: np.ndarray

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.ids = np.asarray(self.ids)
        if self.images.ndim != 4 or self.images.shape[1] != 3:
            raise ValueError(f"images must be (B, 3, H, W), got {self.images.shape}")
        if len(self.ids) != len(self.images):
            raise ValueError("ids and images differ in length")

    def __len__(self):
        return len(self.images)

    def subset(self, idx):
        return ImageBatch(self.images[idx], self.ids[idx])


def parse_cifar10_bytes(blob, num_classes=10):
    if len(blob) % RECORD_BYTES:
        raise FormatError(f"length {len(blob)} is not a multiple of {RECORD_BYTES}")
    raw = np.frombuffer(blob, dtype=np.uint8).reshape(-1, RECORD_BYTES)
    labels = raw[:, 0].astype(np.int64)
    if np.any(labels >= num_classes):
        raise FormatError(f"label byte {labels.max()} exceeds {num_classes - 1}")
    images = raw[:, 1:].reshape(-1, 3, 32, 32).astype(np.float64) / 255.0
    return images, labels


def parse_cifar10(path, num_classes=10):
    """Read one binary batch file into ``(ImageBatch, labels)``."""
    with open(path, "rb") as fh:
        images, labels = parse_cifar10_bytes(fh.read(), num_classes)
    ids = np.array([f"{path}:{i}" for i in range(len(labels))])
    return ImageBatch(images, ids), labels


def to_cifar10_bytes(images, labels):
    images = np.asarray(images)
    labels = np.asarray(labels)
    if images.shape[1:] != (3, 32, 32):
        raise ValueError("CIFAR records hold 3x32x32 images")
    if np.any(labels < 0) or np.any(labels > 255):
        raise ValueError("labels must fit in one byte")
    pix = np.clip(np.rint(images * 255.0), 0, 255).astype(np.uint8).reshape(len(images), IMAGE_BYTES)
    raw = np.concatenate([labels.astype(np.uint8)[:, None], pix], axis=1)
    return raw.tobytes()


def write_cifar10(path, images, labels):
    with open(path, "wb") as fh:
        fh.write(to_cifar10_bytes(images, labels))
