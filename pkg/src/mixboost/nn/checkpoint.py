"""Versioned binary checkpoint container.

Byte layout (all integers little-endian)::

    offset  size  field
    0       8     magic  b"MXBCKPT\\x00"
    8       4     uint32 format version (currently 1)
    12      8     uint64 header length H
    20      H     UTF-8 JSON header (keys sorted, no whitespace)
    20+H    ...   data section: float64 little-endian arrays, back to back

The header holds ``architecture`` (the layer descriptor list), ``metadata``
(free-form training metadata) and ``tensors``: a list of
``{"name", "shape", "offset", "count"}`` entries where ``offset`` counts
bytes from the start of the data section. Besides the named parameters the
table carries two buffers, ``norm.mean`` and ``norm.std``.
"""

import json
import struct

import numpy as np

from .autodiff import Tensor
from .model import TinyCnn

MAGIC = b"MXBCKPT\x00"
VERSION = 1


class CheckpointError(ValueError):
    pass


def to_bytes(model, metadata=None):
    arrays = [(name, model.params[name].data) for name in sorted(model.params)]
    arrays += [("norm.mean", model.mean), ("norm.std", model.std)]
    table = []
    offset = 0
    for name, arr in arrays:
        table.append({"name": name, "shape": list(arr.shape), "offset": offset, "count": int(arr.size)})
        offset += arr.size * 8
    header = {
        "architecture": model.layers,
        "metadata": metadata or {},
        "tensors": table,
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [MAGIC, struct.pack("<IQ", VERSION, len(hbytes)), hbytes]
    parts += [np.ascontiguousarray(arr, dtype="<f8").tobytes() for _, arr in arrays]
    return b"".join(parts)


def from_bytes(blob):
    if blob[:8] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, hlen = struct.unpack_from("<IQ", blob, 8)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = json.loads(blob[20:20 + hlen].decode("utf-8"))
    base = 20 + hlen
    arrays = {}
    for entry in header["tensors"]:
        start = base + entry["offset"]
        end = start + entry["count"] * 8
        if end > len(blob):
            raise CheckpointError(f"truncated data for tensor {entry['name']}")
        arr = np.frombuffer(blob[start:end], dtype="<f8").astype(np.float64)
        arrays[entry["name"]] = arr.reshape(entry["shape"])
    mean = arrays.pop("norm.mean")
    std = arrays.pop("norm.std")
    params = {k: Tensor(v, requires_grad=True) for k, v in arrays.items()}
    model = TinyCnn(header["architecture"], params, mean, std)
    return model, header["metadata"]


def save(path, model, metadata=None):
    with open(path, "wb") as fh:
        fh.write(to_bytes(model, metadata))


def load(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
