"""Pool snapshots for pausing and resuming experiments.

Layout (little-endian)::

    magic        4 bytes  b"DFP1"
    version      uint16
    tag_len      uint16, then the method tag (utf-8)
    params_len   uint32, then a JSON object: method params, learner kind,
                 learner config, capacity, n_classes
    extra_len    uint32, then a JSON object with caller run state (may be {})
    n_members    uint32, then per member:
        weight f64, residence i64, birth_chunk i64, accuracy f64,
        blob_len uint32 + DFM1 model blob,
        has_reservoir uint8 [rows uint32, cols uint32, X f64[rows*cols], y i64[rows]]
"""

from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

from awae.ensemble import AWAE, AwaeConfig, ChunkEnsemble, ClassifierMember
from awae.errors import SerializationError
from awae.learners import LearnerConfig, dump_model, load_model
from awae.reference import make_reference

MAGIC = b"DFP1"
FORMAT_VERSION = 1


def _read(buf: io.BytesIO, n: int) -> bytes:
    data = buf.read(n)
    if len(data) != n:
        raise SerializationError("truncated pool snapshot")
    return data


def _unpack(buf: io.BytesIO, fmt: str):
    s = struct.Struct("<" + fmt)
    return s.unpack(_read(buf, s.size))


def _json_block(obj) -> bytes:
    data = json.dumps(obj, sort_keys=True).encode("utf-8")
    return struct.pack("<I", len(data)) + data


def dump_pool(method: ChunkEnsemble, extra: dict | None = None) -> bytes:
    buf = io.BytesIO()
    tag = method.method.encode("utf-8")
    buf.write(MAGIC + struct.pack("<HH", FORMAT_VERSION, len(tag)) + tag)
    params = {
        "params": method.params(),
        "learner_kind": method.learner_kind,
        "learner_config": method.learner_config.to_dict(),
        "capacity": method.pool.capacity,
        "n_classes": method.pool.n_classes,
    }
    buf.write(_json_block(params))
    buf.write(_json_block(extra or {}))
    buf.write(struct.pack("<I", len(method.pool)))
    for m in method.pool.members:
        blob = dump_model(m.model)
        buf.write(struct.pack("<dqqdI", m.weight, m.residence, m.birth_chunk, m.accuracy, len(blob)))
        buf.write(blob)
        if m.reservoir_X is None:
            buf.write(b"\x00")
        else:
            rows, cols = m.reservoir_X.shape
            buf.write(b"\x01" + struct.pack("<II", rows, cols))
            buf.write(np.ascontiguousarray(m.reservoir_X, dtype="<f8").tobytes())
            buf.write(np.ascontiguousarray(m.reservoir_y, dtype="<i8").tobytes())
    return buf.getvalue()


def load_pool(blob: bytes) -> tuple[ChunkEnsemble, dict]:
    """Rebuild the ensemble stored in ``blob``; returns it with the extra run state."""
    buf = io.BytesIO(blob)
    if _read(buf, 4) != MAGIC:
        raise SerializationError("not a pool snapshot (bad magic)")
    version, tag_len = _unpack(buf, "HH")
    if version != FORMAT_VERSION:
        raise SerializationError(f"unsupported snapshot version {version}")
    tag = _read(buf, tag_len).decode("utf-8")
    (n,) = _unpack(buf, "I")
    params = json.loads(_read(buf, n))
    (n,) = _unpack(buf, "I")
    extra = json.loads(_read(buf, n))

    learner_config = LearnerConfig(**params["learner_config"])
    if tag == "awae":
        method = AWAE(AwaeConfig(**params["params"]), params["learner_kind"], learner_config, params["n_classes"])
    else:
        method = make_reference(tag, params["capacity"], params["learner_kind"], learner_config, params["n_classes"])

    (count,) = _unpack(buf, "I")
    members = []
    for _ in range(count):
        weight, residence, birth, acc, blob_len = _unpack(buf, "dqqdI")
        member = ClassifierMember(load_model(_read(buf, blob_len)), weight, residence, birth, acc)
        if _read(buf, 1) == b"\x01":
            rows, cols = _unpack(buf, "II")
            member.reservoir_X = np.frombuffer(_read(buf, 8 * rows * cols), "<f8").astype(np.float64).reshape(rows, cols)
            member.reservoir_y = np.frombuffer(_read(buf, 8 * rows), "<i8").astype(np.int64)
        members.append(member)
    method.pool.members = members
    return method, extra


def save_pool(path: str | Path, method: ChunkEnsemble, extra: dict | None = None) -> None:
    """Write atomically so an interruption never leaves a torn snapshot."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(dump_pool(method, extra))
    tmp.replace(path)


def read_pool(path: str | Path) -> tuple[ChunkEnsemble, dict]:
    return load_pool(Path(path).read_bytes())
