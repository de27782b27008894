"""Versioned little-endian binary format for trained models.

Every blob starts with a common header::

    magic     4 bytes   b"DFM1"
    version   uint16    FORMAT_VERSION
    kind      uint8     0 constant, 1 gnb, 2 hoeffding_tree, 3 mlp
    n_classes uint32    M
    n_features uint32   d

followed by a kind-specific payload (all floats are float64, all arrays
row-major):

* constant: ``label uint32``
* gnb: ``var_smoothing f64``, ``priors[M]``, ``means[M*d]``, ``variances[M*d]``
* hoeffding_tree: ``grace_period uint32``, ``split_confidence f64``,
  ``tie_threshold f64``, ``n_nodes uint32`` then nodes in pre-order, each a
  ``uint8`` tag: 0 = leaf followed by ``class_counts[M]``; 1 = split followed by
  ``feature uint32``, ``threshold f64`` (left subtree precedes right).
  Only the prediction state is stored; leaf statistics are not.
* mlp: ``hidden uint32``, ``W1[d*h]``, ``b1[h]``, ``W2[h*M]``, ``b2[M]``
"""

from __future__ import annotations

import io
import struct

import numpy as np

from awae.errors import SerializationError
from awae.learners.base import Classifier, ConstantClassifier
from awae.learners.gnb import GaussianNB
from awae.learners.hoeffding import HoeffdingTree, Leaf, Split
from awae.learners.mlp import MLP

MAGIC = b"DFM1"
FORMAT_VERSION = 1
KIND_CODES = {"constant": 0, "gnb": 1, "hoeffding_tree": 2, "mlp": 3}
_HEADER = struct.Struct("<4sHBII")


def _write_array(buf: io.BytesIO, arr: np.ndarray) -> None:
    buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read_exact(buf: io.BytesIO, n: int) -> bytes:
    data = buf.read(n)
    if len(data) != n:
        raise SerializationError("truncated model blob")
    return data


def _read_array(buf: io.BytesIO, shape: tuple[int, ...]) -> np.ndarray:
    count = int(np.prod(shape)) if shape else 1
    return np.frombuffer(_read_exact(buf, 8 * count), dtype="<f8").astype(np.float64).reshape(shape)


def _unpack(buf: io.BytesIO, fmt: str):
    s = struct.Struct("<" + fmt)
    return s.unpack(_read_exact(buf, s.size))


def dump_model(model: Classifier) -> bytes:
    buf = io.BytesIO()
    if model.kind not in KIND_CODES:
        raise SerializationError(f"cannot serialize model kind {model.kind!r}")
    buf.write(_HEADER.pack(MAGIC, FORMAT_VERSION, KIND_CODES[model.kind], model.n_classes, model.n_features))
    if isinstance(model, ConstantClassifier):
        buf.write(struct.pack("<I", model.label))
    elif isinstance(model, GaussianNB):
        buf.write(struct.pack("<d", model.var_smoothing))
        for arr in (model.priors, model.means, model.variances):
            _write_array(buf, arr)
    elif isinstance(model, HoeffdingTree):
        nodes = []
        stack = [model.root]
        while stack:
            node = stack.pop()
            nodes.append(node)
            if not node.is_leaf():
                stack.extend((node.right, node.left))
        buf.write(struct.pack("<IddI", model.grace_period, model.split_confidence, model.tie_threshold, len(nodes)))
        for node in nodes:
            if node.is_leaf():
                buf.write(b"\x00")
                _write_array(buf, node.class_counts)
            else:
                buf.write(b"\x01" + struct.pack("<Id", node.feature, node.threshold))
    elif isinstance(model, MLP):
        buf.write(struct.pack("<I", model.hidden))
        for name in ("W1", "b1", "W2", "b2"):
            _write_array(buf, model.params[name])
    return buf.getvalue()


def load_model(blob: bytes) -> Classifier:
    buf = io.BytesIO(blob)
    magic, version, code, M, d = _HEADER.unpack(_read_exact(buf, _HEADER.size))
    if magic != MAGIC:
        raise SerializationError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise SerializationError(f"unsupported model format version {version}")
    if code == 0:
        (label,) = _unpack(buf, "I")
        model = ConstantClassifier(M, d, label)
    elif code == 1:
        (vs,) = _unpack(buf, "d")
        model = GaussianNB(M, d, vs)
        model.priors = _read_array(buf, (M,))
        model.means = _read_array(buf, (M, d))
        model.variances = _read_array(buf, (M, d))
    elif code == 2:
        grace, conf, tie, n_nodes = _unpack(buf, "IddI")
        model = HoeffdingTree(M, d, grace, conf, tie)
        model.root = _read_tree(buf, M, d, [n_nodes])
    elif code == 3:
        (hidden,) = _unpack(buf, "I")
        model = MLP(M, d, hidden=hidden)
        model.params = {
            "W1": _read_array(buf, (d, hidden)),
            "b1": _read_array(buf, (hidden,)),
            "W2": _read_array(buf, (hidden, M)),
            "b2": _read_array(buf, (M,)),
        }
    else:
        raise SerializationError(f"unknown model kind code {code}")
    if buf.read(1):
        raise SerializationError("trailing bytes after model payload")
    return model


def _read_tree(buf: io.BytesIO, M: int, d: int, remaining: list[int]):
    if remaining[0] <= 0:
        raise SerializationError("tree node count exhausted")
    remaining[0] -= 1
    tag = _read_exact(buf, 1)
    if tag == b"\x00":
        return Leaf(M, d, _read_array(buf, (M,)))
    if tag == b"\x01":
        feature, threshold = _unpack(buf, "Id")
        left = _read_tree(buf, M, d, remaining)
        right = _read_tree(buf, M, d, remaining)
        return Split(feature, threshold, left, right)
    raise SerializationError(f"bad tree node tag {tag!r}")
