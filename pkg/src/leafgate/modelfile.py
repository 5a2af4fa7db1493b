"""Versioned binary model files.

Layout, all little-endian:

* magic ``AGRP`` (4 bytes)
* format version, u16
* header length, u32
* JSON header: model kind, preset, input size, label registry (classifier
  only), layer table, and parameter entry shapes in serialization order
* parameter block: float32 values in layer order, entry order
* trailing u64 checksum: the first 8 bytes of the SHA-256 of the parameter
  block

Loads verify magic, version, structure, and checksum before any model is
constructed; a malformed file never yields a partially loaded model.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .atomicio import atomic_write_bytes
from .classifier import ClassifierModel, LabelRegistry
from .errors import (
    BadMagicError,
    ChecksumError,
    ModelFormatError,
    UnsupportedVersionError,
)
from .nn import Network, spec_from_dict, spec_to_dict
from .quality import IqaModel

MAGIC = b"AGRP"
FORMAT_VERSION = 1
KIND_IQA = "iqa"
KIND_CLASSIFIER = "classifier"

_PREFIX = struct.Struct("<4sHI")
_CHECKSUM = struct.Struct("<Q")


def _checksum(param_block: bytes) -> int:
    digest = hashlib.sha256(param_block).digest()
    return _CHECKSUM.unpack(digest[:8])[0]


def _param_block(network: Network) -> tuple[bytes, list]:
    chunks = []
    entries = []
    for i, spec in enumerate(network.layers):
        for entry in spec.param_entries():
            arr = network.params[i][entry.name]
            chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
            entries.append([i, entry.name, list(arr.shape)])
    return b"".join(chunks), entries


def save_model(model, path) -> None:
    if isinstance(model, IqaModel):
        kind, registry = KIND_IQA, None
    elif isinstance(model, ClassifierModel):
        kind, registry = KIND_CLASSIFIER, model.registry
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    block, entries = _param_block(model.network)
    header = {
        "kind": kind,
        "preset": model.preset,
        "input_size": model.input_size,
        "layers": [spec_to_dict(s) for s in model.network.layers],
        "params": entries,
        "param_bytes": len(block),
    }
    if registry is not None:
        header["labels"] = list(registry.names)
        if registry.declared_total is not None:
            header["declared_total"] = registry.declared_total
    head = json.dumps(header, separators=(",", ":")).encode("utf-8")
    payload = (_PREFIX.pack(MAGIC, FORMAT_VERSION, len(head)) + head + block
               + _CHECKSUM.pack(_checksum(block)))
    atomic_write_bytes(path, payload)


def load_model(path):
    """Returns the :class:`IqaModel` or :class:`ClassifierModel` stored at
    ``path`` after full verification."""
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise ModelFormatError(f"cannot read model file {path}: {e}") from None
    if len(data) < _PREFIX.size:
        raise ModelFormatError(f"{path}: file shorter than the fixed prefix")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: magic {magic!r} is not {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"{path}: format version {version} "
                                      f"(supported: {FORMAT_VERSION})")
    head_end = _PREFIX.size + header_len
    if len(data) < head_end + _CHECKSUM.size:
        raise ModelFormatError(f"{path}: truncated header")
    try:
        header = json.loads(data[_PREFIX.size:head_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelFormatError(f"{path}: bad header: {e}") from None

    try:
        kind = header["kind"]
        preset = header["preset"]
        input_size = int(header["input_size"])
        layer_dicts = header["layers"]
        entries = header["params"]
        param_bytes = int(header["param_bytes"])
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"{path}: header missing field: {e}") from None

    block = data[head_end:head_end + param_bytes]
    if len(block) != param_bytes or len(data) < head_end + param_bytes + _CHECKSUM.size:
        raise ModelFormatError(f"{path}: truncated parameter block")
    (stored,) = _CHECKSUM.unpack_from(data, head_end + param_bytes)
    if stored != _checksum(block):
        raise ChecksumError(f"{path}: parameter checksum mismatch")

    try:
        layers = [spec_from_dict(d) for d in layer_dicts]
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"{path}: bad layer table: {e}") from None
    params = [{} for _ in layers]
    offset = 0
    for item in entries:
        try:
            idx, name, shape = int(item[0]), str(item[1]), [int(s) for s in item[2]]
        except (IndexError, TypeError, ValueError):
            raise ModelFormatError(f"{path}: bad parameter entry {item!r}") from None
        size = 4 * int(np.prod(shape, dtype=np.int64)) if shape else 4
        if idx >= len(layers) or offset + size > len(block):
            raise ModelFormatError(f"{path}: parameter entry {name!r} out of bounds")
        arr = np.frombuffer(block, dtype="<f4", count=size // 4, offset=offset)
        params[idx][name] = arr.reshape(shape).astype(np.float32)
        offset += size
    if offset != len(block):
        raise ModelFormatError(f"{path}: {len(block) - offset} unclaimed parameter bytes")

    declared = [tuple(e.shape) for spec in layers for e in spec.param_entries()]
    loaded = [tuple(item[2]) for item in entries]
    if declared != [tuple(s) for s in loaded]:
        raise ModelFormatError(f"{path}: parameter shapes do not match the layer table")

    network = Network(layers, params).eval()
    if kind == KIND_IQA:
        return IqaModel(network, preset, input_size)
    if kind == KIND_CLASSIFIER:
        labels = header.get("labels")
        if not labels:
            raise ModelFormatError(f"{path}: classifier file without a label registry")
        registry = LabelRegistry(tuple(labels), header.get("declared_total"))
        return ClassifierModel(network, preset, input_size, registry)
    raise ModelFormatError(f"{path}: unknown model kind {kind!r}")
