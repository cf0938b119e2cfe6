"""Boosted training loop and the (r1, lambda) grid search.

One step: base flip/shift, augmentation operator, one fresh patch mask per
image, forward on both the augmented and the masked batch, the combined
loss, backward and an SGD update. With ``lam == 0`` the masked branch is
skipped entirely, so the run is step-for-step identical to plain training.
"""

import dataclasses
import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .augment import Augmenter, basic_flip_shift
from .boost import MaskSpec, apply_mask, boost_loss, sample_mask, total_loss
from .nn.model import DEFAULT_CHANNELS, TinyCnn, backward
from .nn.optim import Sgd, SgdSchedule

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    """Raised when the loss stops being finite."""


@dataclass(frozen=True)
class TrainConfig:
    r1: float = 0.7
    lam: float = 1.0
    augmentation: str = "pixmix_style"
    hole_size: int = 16
    beta_alpha: float = 1.0
    k_max: int = 4
    pixmix_beta: float = 3.0
    mixer_pool_size: int = 64
    base_flip_shift: bool = True
    epochs: int = 30
    batch_size: int = 64
    lr0: float = 0.05
    momentum: float = 0.9
    mask_rows: int = 8
    mask_cols: int = 8
    channels: tuple = DEFAULT_CHANNELS
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.r1 <= 1.0:
            raise ValueError("r1 must lie in [0, 1]")
        if not math.isfinite(self.lam) or self.lam < 0:
            raise ValueError("lambda must be finite and >= 0")
        if self.epochs < 1 or self.batch_size < 2:
            raise ValueError("need epochs >= 1 and batch_size >= 2")
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


def _subseed(seed, stream, *more):
    return int(np.random.SeedSequence([seed, stream, *more]).generate_state(1)[0])


_INIT, _SHUFFLE, _BASE, _AUG, _MASK, _MIXERS = range(6)


def train(config, splits, callback=None):
    """Train one model; returns ``(model, log_records)``.

    ``splits`` supplies ``train``/``train_labels``, ``num_classes`` and the
    per-channel ``mean``/``std`` used for normalisation and as mask fill.
    """
    images = splits.train.images
    labels = np.asarray(splits.train_labels)
    K = splits.num_classes
    fill = splits.mean
    model = TinyCnn.create(K, config.channels, seed=_subseed(config.seed, _INIT), mean=fill, std=splits.std)
    augmenter = Augmenter(
        config.augmentation, num_classes=K, fill=fill, hole_size=config.hole_size,
        beta_alpha=config.beta_alpha, k_max=config.k_max, beta=config.pixmix_beta,
        mixer_pool_size=config.mixer_pool_size, mixer_seed=_subseed(config.seed, _MIXERS),
    )
    spec = MaskSpec(config.mask_rows, config.mask_cols, config.r1)

    n = len(images)
    bs = config.batch_size
    steps_per_epoch = n // bs
    if steps_per_epoch < 1:
        raise ValueError("training set smaller than one batch")
    schedule = SgdSchedule(config.lr0, config.epochs * steps_per_epoch, config.momentum)
    opt = Sgd(schedule)

    records = []
    t = 0
    for epoch in range(config.epochs):
        perm = np.random.default_rng([config.seed, _SHUFFLE, epoch]).permutation(n)
        sums = {"loss": 0.0, "ce": 0.0, "l_boost": 0.0, "correct": 0}
        lr_start = schedule.lr(t)
        for s in range(steps_per_epoch):
            idx = perm[s * bs:(s + 1) * bs]
            x, y = images[idx], labels[idx]
            if config.base_flip_shift:
                x = basic_flip_shift(x, _subseed(config.seed, _BASE, t))
            batch = augmenter.apply(x, y, _subseed(config.seed, _AUG, t))
            logits = model(batch.images)
            masked_logits = None
            if config.lam > 0:
                masks = sample_mask(spec, _subseed(config.seed, _MASK, t), count=len(idx))
                masked_logits = model(apply_mask(batch.images, masks, fill))
            loss = total_loss(batch.labels, logits, masked_logits, config.lam)
            if not np.isfinite(loss.data):
                raise TrainingError(f"non-finite loss {loss.item()} at epoch {epoch}, step {s}")
            grads = backward(loss, model)
            opt.step(model, grads, t)
            t += 1

            lb = boost_loss(logits.data, masked_logits.data).item() if masked_logits is not None else 0.0
            sums["loss"] += loss.item()
            sums["ce"] += loss.item() + config.lam * lb
            sums["l_boost"] += lb
            sums["correct"] += int(np.sum(logits.data.argmax(axis=1) == batch.labels.argmax(axis=1)))
        rec = {
            "epoch": epoch,
            "lr": lr_start,
            "loss": sums["loss"] / steps_per_epoch,
            "ce": sums["ce"] / steps_per_epoch,
            "l_boost": sums["l_boost"] / steps_per_epoch if config.lam > 0 else None,
            "train_acc": sums["correct"] / (steps_per_epoch * bs),
        }
        records.append(rec)
        log.info("epoch %d loss %.4f acc %.3f", epoch, rec["loss"], rec["train_acc"])
        if callback is not None:
            callback(rec)
    return model, records


def write_log(path, records):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_log(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def grid_search(r1_values, lambda_values, base_config, splits, evaluate):
    """Train and evaluate one model per ``(r1, lambda)`` cell.

    ``evaluate(model) -> dict`` supplies the metrics for a cell. Every cell
    reuses ``base_config.seed``, so results do not depend on visiting order.
    A failing cell yields a row with an ``error`` entry and the grid goes on.
    """
    r1_values, lambda_values = list(r1_values), list(lambda_values)
    if not r1_values or not lambda_values:
        raise ValueError("grid value lists must be nonempty")
    rows = []
    for r1 in r1_values:
        for lam in lambda_values:
            row = {"r1": float(r1), "lambda": float(lam), "error": None}
            try:
                model, _ = train(base_config.replace(r1=r1, lam=lam), splits)
                row.update(evaluate(model))
            except Exception as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    return rows
