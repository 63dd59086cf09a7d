"""Binary model files for fitted stacks.

Layout (all integers little-endian)::

    magic        4 bytes  b"PSTK"
    version      u32
    schema hash  32 bytes (SHA-256; zeros when the stack was fit without a schema)
    n_sections   u32
    section*     u16 name length, name (utf-8), u8 type (b"J" json | b"A" array),
                 u64 payload length, payload, u32 CRC-32 of name + type + payload

Array payloads are ``dtype code (b"f" float64 | b"i" int64), u8 ndim,
ndim x u64 shape`` followed by the little-endian data.
"""

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import CorruptPayloadError, SchemaHashMismatchError, VersionMismatchError
from ..feature_selection import FeatureMask
from ..learners import LearnerSpec, TrainedLearner
from ..meta_mlp import MlpConfig, model_from_params
from ..stacking import StackModel

MAGIC = b"PSTK"
FORMAT_VERSION = 1
_NO_HASH = bytes(32)


def _encode_array(arr):
    arr = np.asarray(arr)
    if arr.dtype.kind in "iub":
        code, data = b"i", arr.astype("<i8")
    elif arr.dtype.kind == "f":
        code, data = b"f", arr.astype("<f8")
    else:
        raise TypeError(f"cannot serialize dtype {arr.dtype}")
    head = code + struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape)
    return head + data.tobytes(order="C")


def _decode_array(buf):
    code = buf[:1]
    ndim = buf[1]
    shape = struct.unpack_from(f"<{ndim}Q", buf, 2)
    offset = 2 + 8 * ndim
    dtype = {b"f": "<f8", b"i": "<i8"}.get(code)
    if dtype is None:
        raise CorruptPayloadError(f"unknown array dtype code {code!r}")
    count = int(np.prod(shape)) if ndim else 1
    if len(buf) - offset != 8 * count:
        raise CorruptPayloadError("array payload length does not match its shape")
    arr = np.frombuffer(buf, dtype=dtype, count=count, offset=offset).reshape(shape)
    return arr.astype(np.float64 if code == b"f" else np.int64)


def _section(name, kind, payload):
    nb = name.encode("utf-8")
    crc = zlib.crc32(nb + kind + payload)
    return struct.pack("<H", len(nb)) + nb + kind + struct.pack("<Q", len(payload)) + payload + struct.pack("<I", crc)


def save_model(m, path):
    """Write ``m`` to ``path``; returns the path."""
    header = {
        "k_inner": m.k_inner,
        "seed": m.seed,
        "n_features": m.n_features,
        "feature_names": list(m.feature_names),
        "meta_config": m.meta_config.to_dict(),
        "bases": [],
        "meta_layers": len(m.meta.weights),
    }
    sections = []
    for i, (spec, mask, model) in enumerate(m.bases):
        keys = sorted(model.state)
        header["bases"].append({
            "spec": spec.to_dict(),
            "mask": {"kind": mask.learner_kind, "selected": list(mask.selected),
                     "cv_score": mask.cv_score_at_selection},
            "n_features": model.n_features,
            "state_keys": keys,
            "has_importance": model.native_importance is not None,
        })
        for key in keys:
            sections.append(_section(f"base{i}/{key}", b"A", _encode_array(model.state[key])))
        if model.native_importance is not None:
            sections.append(_section(f"base{i}/__importance__", b"A", _encode_array(model.native_importance)))
    for layer, (w, b) in enumerate(zip(m.meta.weights, m.meta.biases)):
        sections.append(_section(f"meta/w{layer}", b"A", _encode_array(w)))
        sections.append(_section(f"meta/b{layer}", b"A", _encode_array(b)))
    head = _section("header", b"J", json.dumps(header, sort_keys=True).encode("utf-8"))
    blob = (MAGIC + struct.pack("<I", FORMAT_VERSION) + (m.schema_hash or _NO_HASH)
            + struct.pack("<I", len(sections) + 1) + head + b"".join(sections))
    path = Path(path)
    path.write_bytes(blob)
    return path


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise CorruptPayloadError("model file is truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_sections(path):
    """``(version, schema_hash, {name: (type, payload)})`` with every checksum verified."""
    r = _Reader(Path(path).read_bytes())
    if r.take(4) != MAGIC:
        raise CorruptPayloadError(f"{path}: not a phishstack model file")
    (version,) = r.unpack("<I")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: format version {version}, this build reads {FORMAT_VERSION}")
    schema_hash = r.take(32)
    (count,) = r.unpack("<I")
    sections = {}
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        name_b = r.take(name_len)
        kind = r.take(1)
        (length,) = r.unpack("<Q")
        payload = r.take(length)
        (crc,) = r.unpack("<I")
        if zlib.crc32(name_b + kind + payload) != crc:
            raise CorruptPayloadError(f"{path}: checksum mismatch in section {name_b!r}")
        sections[name_b.decode("utf-8")] = (kind, payload)
    if r.pos != len(r.data):
        raise CorruptPayloadError(f"{path}: trailing bytes after last section")
    return version, schema_hash, sections


def load_model(path, schema=None):
    """Read a stack written by :func:`save_model`.

    With ``schema`` given, its hash must match the one stored at save time.
    """
    _, stored_hash, sections = read_sections(path)
    if schema is not None:
        expected = schema.schema_hash()
        if stored_hash != expected:
            raise SchemaHashMismatchError(f"{path}: model was trained against a different dataset schema")

    def array(name):
        try:
            kind, payload = sections[name]
        except KeyError:
            raise CorruptPayloadError(f"{path}: missing section {name!r}") from None
        if kind != b"A":
            raise CorruptPayloadError(f"{path}: section {name!r} is not an array")
        return _decode_array(payload)

    try:
        kind, payload = sections["header"]
        header = json.loads(payload.decode("utf-8"))
    except (KeyError, ValueError):
        raise CorruptPayloadError(f"{path}: unreadable header") from None

    bases = []
    for i, b in enumerate(header["bases"]):
        spec = LearnerSpec.from_dict(b["spec"])
        mask = FeatureMask(b["mask"]["kind"], tuple(b["mask"]["selected"]), b["mask"]["cv_score"])
        state = {key: array(f"base{i}/{key}") for key in b["state_keys"]}
        imp = array(f"base{i}/__importance__") if b["has_importance"] else None
        bases.append((spec, mask, TrainedLearner(spec, b["n_features"], state, imp)))
    layers = header["meta_layers"]
    meta = model_from_params([array(f"meta/w{l}") for l in range(layers)],
                             [array(f"meta/b{l}") for l in range(layers)])
    return StackModel(
        bases=tuple(bases), meta=meta, k_inner=header["k_inner"], seed=header["seed"],
        n_features=header["n_features"], meta_config=MlpConfig.from_dict(header["meta_config"]),
        feature_names=tuple(header["feature_names"]),
        schema_hash=None if stored_hash == _NO_HASH else stored_hash,
    )
