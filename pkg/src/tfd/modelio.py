"""Binary model files: both reconstructors' tensors plus a JSON trailer.

Layout (little-endian)::

    b"TFD1" | u32 version | u32 tensor count
    per tensor: u16 name length | name (UTF-8) | u8 rank | u32 dims[rank] | f64 values (row-major)
    u32 trailer length | trailer (UTF-8 JSON)
"""

from __future__ import annotations

import hashlib
import json
import os
import struct

import numpy as np

from .errors import CorruptFile, ShapeMismatch
from .ingest import NormalizationStats
from .pipeline import Detector, Thresholds
from .reconstructors import FreqReconstructor, TimeReconstructor

MAGIC = b"TFD1"
VERSION = 1


def config_hash(obj) -> str:
    """Short sha256 of a JSON-serializable object in canonical form."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def _tensors(det: Detector) -> list[tuple[str, np.ndarray]]:
    out = [(f"time/{k}", v) for k, v in det.time_model.params.items()]
    out += [(f"freq/{k}", v) for k, v in det.freq_model.params.items()]
    return out


def dumps(det: Detector) -> bytes:
    tensors = _tensors(det)
    parts = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, arr in tensors:
        raw = name.encode("utf-8")
        arr = np.ascontiguousarray(arr, dtype="<f8")
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    trailer = {
        "thresholds": {"R_t": det.thresholds.R_t, "R_f": det.thresholds.R_f},
        "norm": det.norm.to_dict(),
        "freq_kernels": list(det.freq_model.kernels),
        **det.meta,
    }
    blob = json.dumps(trailer, sort_keys=True).encode("utf-8")
    parts.append(struct.pack("<I", len(blob)) + blob)
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = data, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptFile(f"truncated model file at byte {self.pos} (wanted {n} more)")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def loads(data: bytes) -> Detector:
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise CorruptFile("bad magic: not a model file")
    version, count = r.unpack("<II")
    if version != VERSION:
        raise CorruptFile(f"unsupported model file version {version}")
    tensors = {}
    for _ in range(count):
        (n,) = r.unpack("<H")
        try:
            name = r.take(n).decode("utf-8")
        except UnicodeDecodeError:
            raise CorruptFile("tensor name is not UTF-8") from None
        (rank,) = r.unpack("<B")
        dims = r.unpack(f"<{rank}I")
        size = int(np.prod(dims)) if rank else 1
        tensors[name] = np.frombuffer(r.take(8 * size), dtype="<f8").astype(np.float64).reshape(dims)
    (n,) = r.unpack("<I")
    try:
        meta = json.loads(r.take(n).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFile(f"unreadable trailer: {exc}") from None
    if r.pos != len(data):
        raise CorruptFile(f"{len(data) - r.pos} trailing bytes after trailer")
    try:
        th = meta.pop("thresholds")
        norm = NormalizationStats.from_dict(meta.pop("norm"))
        kernels = tuple(meta.pop("freq_kernels"))
    except (KeyError, TypeError) as exc:
        raise CorruptFile(f"trailer missing field {exc}") from None
    tm, fm = TimeReconstructor(seed=None), FreqReconstructor(seed=None, kernels=kernels)
    tm.params.load({k[5:]: v for k, v in tensors.items() if k.startswith("time/")})
    fm.params.load({k[5:]: v for k, v in tensors.items() if k.startswith("freq/")})
    return Detector(tm, fm, Thresholds(float(th["R_t"]), float(th["R_f"])), norm, meta)


def save_model(det: Detector, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(det))


def load_model(path: str | os.PathLike) -> Detector:
    with open(path, "rb") as fh:
        return loads(fh.read())


__all__ = ["MAGIC", "VERSION", "config_hash", "dumps", "loads", "save_model", "load_model", "ShapeMismatch"]
