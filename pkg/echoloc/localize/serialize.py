"""
``ELMDL1`` model files.

Layout (little-endian)::

    b"ELMDL1"                 6-byte magic
    uint32 header_length
    header_length bytes       YAML header: format, config, classes, stats,
                              tensors [{name, shape}]
    float32 tensors           in header order, row-major

Parameters are float32-exact after training, so load(save(m)) reproduces
the model bit for bit. Loading rebuilds the network from the stored config
and rejects any tensor whose name or shape disagrees with it.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import yaml

from echoloc.config import ModelConfig
from echoloc.errors import ErrorCode, ModelError
from echoloc.localize.network import FeatureStats, Model, Network

MODEL_MAGIC = b"ELMDL1"
MODEL_FORMAT = "echoloc-model/1"


def model_bytes(model: Model) -> bytes:
    tensors = model.network.tensors()
    header = {
        "format": MODEL_FORMAT,
        "config": model.config.to_dict(),
        "classes": list(model.classes),
        "stats": model.stats.to_dict(),
        "tensors": [{"name": k, "shape": list(v.shape)} for k, v in tensors.items()],
    }
    head = yaml.safe_dump(header, sort_keys=True).encode("utf-8")
    body = b"".join(np.ascontiguousarray(v, dtype="<f4").tobytes() for v in tensors.values())
    return MODEL_MAGIC + struct.pack("<I", len(head)) + head + body


def parse_model(data: bytes, source: str = "<bytes>") -> Model:
    def fail(msg: str) -> ModelError:
        return ModelError(f"{source}: {msg}", ErrorCode.MODEL_FILE_ERROR)

    if not data.startswith(MODEL_MAGIC):
        raise fail("bad magic")
    offset = len(MODEL_MAGIC)
    if len(data) < offset + 4:
        raise fail("truncated header")
    (head_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    if len(data) < offset + head_len:
        raise fail("truncated header")
    try:
        header = yaml.safe_load(data[offset:offset + head_len].decode("utf-8"))
    except (yaml.YAMLError, UnicodeDecodeError) as e:
        raise fail(f"unreadable header: {e}") from e
    offset += head_len
    if not isinstance(header, dict) or header.get("format") != MODEL_FORMAT:
        raise fail("unsupported model format")

    try:
        config = ModelConfig.from_dict(header["config"])
        network = Network(config, init="zeros")
        stats = FeatureStats.from_dict(header["stats"])
        declared = [(t["name"], tuple(t["shape"])) for t in header["tensors"]]
    except (KeyError, TypeError, ValueError) as e:
        raise fail(f"incomplete header: {e}") from e
    except ModelError as e:
        raise fail(str(e)) from e

    expected = [(k, v.shape) for k, v in network.tensors().items()]
    if declared != expected:
        raise fail("tensor list does not match the configured architecture")

    tensors = {}
    for name, shape in declared:
        count = int(np.prod(shape))
        end = offset + 4 * count
        if end > len(data):
            raise fail(f"truncated tensor {name}")
        tensors[name] = np.frombuffer(data, dtype="<f4", count=count, offset=offset).reshape(shape)
        offset = end
    if offset != len(data):
        raise fail(f"{len(data) - offset} trailing bytes")
    network.assign(tensors)
    return Model(network, [str(c) for c in header.get("classes") or []], stats)


def save_model(model: Model, path: str | Path) -> Path:
    """Write ``model`` atomically."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    tmp = p.with_name(p.name + ".tmp")
    tmp.write_bytes(model_bytes(model))
    tmp.replace(p)
    return p


def load_model(path: str | Path) -> Model:
    p = Path(path)
    if not p.is_file():
        raise ModelError(f"model file not found: {p}", ErrorCode.MISSING_FILE)
    return parse_model(p.read_bytes(), str(p))
