"""Fixed small CNN classifier built on the autodiff core."""

import hashlib
import json

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

INPUT_SHAPE = (3, 32, 32)

# Three conv stages, each followed by ReLU; the first two downsample by 2.
DEFAULT_CHANNELS = (16, 32, 64)


def architecture(num_classes=10, channels=DEFAULT_CHANNELS):
    """Return the layer descriptor list for the classifier."""
    layers = []
    cin = INPUT_SHAPE[0]
    for stage, cout in enumerate(channels):
        layers.append({"type": "conv3x3", "name": f"conv{stage}", "in": cin, "out": cout})
        layers.append({"type": "relu"})
        if stage < len(channels) - 1:
            layers.append({"type": "downsample2"})
        cin = cout
    layers.append({"type": "global_avg_pool"})
    layers.append({"type": "dense", "name": "fc", "in": cin, "out": num_classes})
    return layers


class TinyCnn:
    """Conv/ReLU/downsample stack with global average pooling and a dense head.

    Inputs are ``(B, 3, 32, 32)`` images in ``[0, 1]``; a fixed per-channel
    standardisation (``mean``/``std``) is applied before the first conv so
    that a pixel equal to the dataset mean colour maps to zero.
    """

    def __init__(self, layers, params, mean=(0.0, 0.0, 0.0), std=(1.0, 1.0, 1.0)):
        self.layers = layers
        self.params = params
        self.mean = np.asarray(mean, dtype=np.float64)
        self.std = np.asarray(std, dtype=np.float64)
        self.num_classes = layers[-1]["out"]

    @classmethod
    def create(cls, num_classes=10, channels=DEFAULT_CHANNELS, seed=0, mean=None, std=None):
        layers = architecture(num_classes, channels)
        rng = np.random.default_rng(seed)
        params = {}
        for layer in layers:
            if layer["type"] == "conv3x3":
                fan_in = layer["in"] * 9
                w = rng.normal(0.0, np.sqrt(2.0 / fan_in), (layer["out"], layer["in"], 3, 3))
                params[layer["name"] + ".weight"] = Tensor(w, requires_grad=True)
                params[layer["name"] + ".bias"] = Tensor(np.zeros(layer["out"]), requires_grad=True)
            elif layer["type"] == "dense":
                w = rng.normal(0.0, np.sqrt(1.0 / layer["in"]), (layer["in"], layer["out"]))
                params[layer["name"] + ".weight"] = Tensor(w, requires_grad=True)
                params[layer["name"] + ".bias"] = Tensor(np.zeros(layer["out"]), requires_grad=True)
        kw = {}
        if mean is not None:
            kw["mean"] = mean
        if std is not None:
            kw["std"] = std
        return cls(layers, params, **kw)

    def num_parameters(self):
        return int(sum(p.data.size for p in self.params.values()))

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def copy(self):
        params = {k: Tensor(v.data.copy(), requires_grad=True) for k, v in self.params.items()}
        return TinyCnn([dict(l) for l in self.layers], params, self.mean.copy(), self.std.copy())

    def forward(self, x):
        """Logits for a batch; ``x`` may be an ndarray or a Tensor."""
        x = ad.as_tensor(x)
        if x.ndim != 4 or tuple(x.shape[1:]) != INPUT_SHAPE:
            raise ValueError(f"expected input of shape (B, 3, 32, 32), got {tuple(x.shape)}")
        h = (x - self.mean[None, :, None, None]) * (1.0 / self.std)[None, :, None, None]
        for layer in self.layers:
            kind = layer["type"]
            if kind == "conv3x3":
                h = ad.conv2d(h, self.params[layer["name"] + ".weight"], self.params[layer["name"] + ".bias"])
            elif kind == "relu":
                h = ad.relu(h)
            elif kind == "downsample2":
                h = ad.avg_pool2(h)
            elif kind == "global_avg_pool":
                h = ad.global_avg_pool(h)
            elif kind == "dense":
                h = h @ self.params[layer["name"] + ".weight"] + self.params[layer["name"] + ".bias"]
            else:
                raise ValueError(f"unknown layer type {kind!r}")
        return h

    __call__ = forward

    def predict_logits(self, x, chunk=256):
        """Graph-free logits as a plain ndarray, evaluated in chunks."""
        x = np.asarray(x, dtype=np.float64)
        out = []
        with ad.no_grad():
            for s in range(0, len(x), chunk):
                out.append(self.forward(x[s:s + chunk]).data)
        if not out:
            return np.zeros((0, self.num_classes))
        return np.concatenate(out, axis=0)

    def fingerprint(self):
        """Stable hash over architecture, normalisation and parameter bytes."""
        h = hashlib.sha256()
        h.update(json.dumps(self.layers, sort_keys=True).encode())
        h.update(self.mean.astype("<f8").tobytes())
        h.update(self.std.astype("<f8").tobytes())
        for name in sorted(self.params):
            h.update(name.encode())
            h.update(self.params[name].data.astype("<f8").tobytes())
        return h.hexdigest()


def forward(model, batch):
    return model.forward(batch)


def cross_entropy(logits, labels):
    """Mean cross-entropy for hard labels (int array) or soft labels (B, K)."""
    logits = ad.as_tensor(logits)
    if logits.ndim != 2:
        raise ValueError(f"logits must be (B, K), got {logits.shape}")
    B, K = logits.shape
    labels = np.asarray(labels)
    if labels.ndim == 1:
        if labels.shape[0] != B:
            raise ValueError("label count does not match batch size")
        if np.any(labels < 0) or np.any(labels >= K):
            raise ValueError(f"label index out of range for {K} classes")
        q = np.zeros((B, K))
        q[np.arange(B), labels.astype(np.int64)] = 1.0
    else:
        q = labels.astype(np.float64)
        if q.shape != (B, K):
            raise ValueError(f"soft labels must be shape {(B, K)}, got {q.shape}")
    return -(ad.log_softmax(logits, axis=1) * q).sum() * (1.0 / B)


def backward(loss, model):
    """Populate parameter gradients from ``loss``; returns {name: grad}."""
    model.zero_grad()
    loss.backward()
    return {k: (p.grad if p.grad is not None else np.zeros_like(p.data)) for k, p in model.params.items()}
