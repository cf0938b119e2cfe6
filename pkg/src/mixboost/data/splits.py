import glob
import json
import os
from dataclasses import dataclass

import numpy as np

from .cifar import ImageBatch, parse_cifar10, write_cifar10
from .synth import synth_dataset


class DataError(ValueError):
    pass


@dataclass
class DatasetSplits:
    train: ImageBatch
    train_labels: np.ndarray
    test: ImageBatch
    test_labels: np.ndarray
    num_classes: int
    source: str

    @property
    def mean(self):
        """Per-channel mean colour of the training images."""
        return self.train.images.mean(axis=(0, 2, 3))

    @property
    def std(self):
        return self.train.images.std(axis=(0, 2, 3))


def _read_cifar_dir(path):
    train_files = sorted(glob.glob(os.path.join(path, "data_batch_*.bin")))
    test_file = os.path.join(path, "test_batch.bin")
    if not train_files or not os.path.exists(test_file):
        raise DataError(f"no CIFAR-10 binary batches under {path!r}")
    parts = [parse_cifar10(f) for f in train_files]
    train = ImageBatch(np.concatenate([b.images for b, _ in parts]), np.concatenate([b.ids for b, _ in parts]))
    train_labels = np.concatenate([l for _, l in parts])
    test, test_labels = parse_cifar10(test_file)
    return train, train_labels, test, test_labels


def make_splits(n_train=2000, n_test=500, num_classes=10, seed=0, cifar_dir=None, synth_fallback=True):
    """Disjoint train/test splits from CIFAR-10 binaries or the synthetic generator.

    With ``cifar_dir`` set the first ``n_train``/``n_test`` records are used.
    Otherwise, or when the directory is missing and ``synth_fallback`` is on,
    a class-balanced synthetic set is generated from ``seed``.
    """
    if cifar_dir:
        if os.path.isdir(cifar_dir):
            train, ytr, test, yte = _read_cifar_dir(cifar_dir)
            return DatasetSplits(
                train.subset(slice(0, n_train)), ytr[:n_train],
                test.subset(slice(0, n_test)), yte[:n_test], 10, "cifar10",
            )
        if not synth_fallback:
            raise DataError(f"dataset path {cifar_dir!r} does not exist and synthetic fallback is disabled")
    elif not synth_fallback:
        raise DataError("no dataset path given and synthetic fallback is disabled")

    if n_train % num_classes or n_test % num_classes:
        raise DataError("synthetic split sizes must be multiples of num_classes")
    per_train = n_train // num_classes
    per_test = n_test // num_classes
    full, labels = synth_dataset(num_classes, per_train + per_test, seed)
    cut = per_train * num_classes
    return DatasetSplits(
        full.subset(slice(0, cut)), labels[:cut],
        full.subset(slice(cut, None)), labels[cut:], num_classes, "synth",
    )


def save_set(directory, name, images, labels, manifest):
    """Persist a generated set as CIFAR-format records plus a JSON manifest."""
    os.makedirs(directory, exist_ok=True)
    write_cifar10(os.path.join(directory, name + ".bin"), images, labels)
    with open(os.path.join(directory, name + ".json"), "w") as fh:
        json.dump(dict(manifest, count=int(len(labels))), fh, indent=2, sort_keys=True)


def load_set(directory, name):
    batch, labels = parse_cifar10(os.path.join(directory, name + ".bin"))
    with open(os.path.join(directory, name + ".json")) as fh:
        manifest = json.load(fh)
    return batch, labels, manifest
