"""Packet records, 10-second segmentation and the 16x2 per-segment feature matrix.

The canonical trace format is a UTF-8 CSV with the header
``ts,src_ip,src_port,dst_ip,dst_port,proto,len`` (optionally gzip-compressed
when the file name ends in ``.gz``).
"""

from __future__ import annotations

import csv
import gzip
import io
import math
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import EmptyTrainingSet, MalformedLine, NonFiniteTimestamp

HEADER = ("ts", "src_ip", "src_port", "dst_ip", "dst_port", "proto", "len")
PROTOCOLS = ("TCP", "UDP", "OTHER")
WINDOW = 10.0
N_STEPS = 16


@dataclass(frozen=True)
class PacketRecord:
    ts: float
    src_ip: str
    src_port: int
    dst_ip: str
    dst_port: int
    proto: str
    len: int

    def __post_init__(self):
        if not math.isfinite(self.ts) or self.ts < 0:
            raise ValueError(f"timestamp must be finite and >= 0, got {self.ts}")
        for port in (self.src_port, self.dst_port):
            if not 0 <= port <= 65535:
                raise ValueError(f"port out of range: {port}")
        if not 0 <= self.len <= 65535:
            raise ValueError(f"packet length out of range: {self.len}")
        if self.proto not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.proto!r}")


@dataclass
class Segment:
    segment_id: str
    window_start: float
    packets: list[PacketRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.packets)


@dataclass(frozen=True)
class FeatureMatrix:
    """Inter-arrival times ``t`` and packet sizes ``l`` of the first packets of a segment."""

    t: np.ndarray
    l: np.ndarray

    @property
    def values(self) -> np.ndarray:
        """The matrix as a ``(steps, 2)`` array, one row per packet position."""
        return np.stack([self.t, self.l], axis=1)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "FeatureMatrix":
        arr = np.asarray(arr, dtype=np.float64)
        return cls(arr[:, 0].copy(), arr[:, 1].copy())


@dataclass(frozen=True)
class NormalizationStats:
    t_min: float
    t_max: float
    l_min: float
    l_max: float

    def to_dict(self) -> dict:
        return {"t_min": self.t_min, "t_max": self.t_max, "l_min": self.l_min, "l_max": self.l_max}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationStats":
        return cls(float(d["t_min"]), float(d["t_max"]), float(d["l_min"]), float(d["l_max"]))


def _parse_int(text: str, line: int, name: str, hi: int) -> int:
    try:
        v = int(text)
    except ValueError:
        raise MalformedLine(line, f"{name} is not an integer: {text!r}") from None
    if not 0 <= v <= hi:
        raise MalformedLine(line, f"{name} out of range: {v}")
    return v


def parse_packets(stream: bytes | str | IO) -> list[PacketRecord]:
    """Parse canonical packet CSV into records, in file order.

    ``stream`` may be raw bytes, decoded text, or a binary/text file object.
    Line numbers in errors are 1-based and count the header as line 1.
    """
    if isinstance(stream, bytes):
        text = io.StringIO(stream.decode("utf-8"))
    elif isinstance(stream, str):
        text = io.StringIO(stream)
    elif isinstance(stream, io.TextIOBase):
        text = stream
    else:
        text = io.TextIOWrapper(stream, encoding="utf-8")
    reader = csv.reader(text)
    header = next(reader, None)
    if header is None:
        return []
    if tuple(h.strip() for h in header) != HEADER:
        raise MalformedLine(1, f"bad header {','.join(header)!r}")
    records = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(HEADER):
            raise MalformedLine(line, f"expected {len(HEADER)} fields, got {len(row)}")
        try:
            ts = float(row[0])
        except ValueError:
            raise MalformedLine(line, f"timestamp is not a number: {row[0]!r}") from None
        if not math.isfinite(ts):
            raise NonFiniteTimestamp(line, f"non-finite timestamp {row[0]!r}")
        if ts < 0:
            raise MalformedLine(line, f"negative timestamp {ts}")
        proto = row[5].strip().upper()
        if proto not in PROTOCOLS:
            raise MalformedLine(line, f"unknown protocol {row[5]!r}")
        records.append(
            PacketRecord(
                ts=ts,
                src_ip=row[1].strip(),
                src_port=_parse_int(row[2], line, "src_port", 65535),
                dst_ip=row[3].strip(),
                dst_port=_parse_int(row[4], line, "dst_port", 65535),
                proto=proto,
                len=_parse_int(row[6], line, "len", 65535),
            )
        )
    return records


def read_packets(path: str | os.PathLike) -> list[PacketRecord]:
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as fh:
        return parse_packets(fh)


def format_packets(records: Iterable[PacketRecord]) -> str:
    """Serialize records as canonical CSV (timestamps at microsecond precision)."""
    out = [",".join(HEADER)]
    for r in records:
        out.append(f"{r.ts:.6f},{r.src_ip},{r.src_port},{r.dst_ip},{r.dst_port},{r.proto},{r.len}")
    return "\n".join(out) + "\n"


def write_packets(records: Iterable[PacketRecord], path: str | os.PathLike) -> None:
    data = format_packets(records).encode("utf-8")
    if str(path).endswith(".gz"):
        # mtime=0 keeps the compressed bytes reproducible
        with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0, filename="") as fh:
            fh.write(data)
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def segment_stream(
    packets: Sequence[PacketRecord],
    window: float = WINDOW,
    prefix: str = "seg",
    origin: float | None = None,
    n_windows: int | None = None,
) -> list[Segment]:
    """Cut a trace into consecutive fixed windows.

    Window ``k`` covers ``[t0 + k*window, t0 + (k+1)*window)``. Unless
    ``origin`` is given, ``t0`` is the first timestamp rounded down to a
    multiple of ``window`` (wall-clock aligned windows). Windows with no packets
    are still emitted, so segment ``k`` always has index ``k``. With
    ``n_windows`` exactly that many windows are returned and packets outside
    them are dropped.
    """
    if not packets and n_windows is None:
        return []
    pkts = sorted(packets, key=lambda p: p.ts)
    if origin is None:
        t0 = math.floor(pkts[0].ts / window) * window if pkts else 0.0
    else:
        t0 = float(origin)
    ts = np.fromiter((p.ts for p in pkts), dtype=np.float64, count=len(pkts))
    idx = np.floor((ts - t0) / window).astype(np.int64)
    # float rounding can put a packet one window off at a boundary
    idx = np.where(ts < t0 + idx * window, idx - 1, idx)
    idx = np.where(ts >= t0 + (idx + 1) * window, idx + 1, idx)
    n = (int(idx[-1]) + 1 if len(idx) else 0) if n_windows is None else int(n_windows)
    width = max(4, len(str(max(n - 1, 0))))
    segments = [Segment(f"{prefix}-{k:0{width}d}", t0 + k * window, []) for k in range(n)]
    for k, p in zip(idx.tolist(), pkts):
        if 0 <= k < n:
            segments[k].packets.append(p)
    return segments


def extract_features(seg: Segment | Sequence[PacketRecord], n_steps: int = N_STEPS) -> FeatureMatrix:
    """Inter-arrival times and sizes of the first ``n_steps`` packets, zero-padded.

    The first packet's inter-arrival time is 0 since it has no predecessor
    inside the segment.
    """
    pkts = seg.packets if isinstance(seg, Segment) else seg
    used = pkts[:n_steps]
    t = np.zeros(n_steps)
    l = np.zeros(n_steps)
    if used:
        ts = np.array([p.ts for p in used], dtype=np.float64)
        t[1 : len(used)] = np.diff(ts)
        l[: len(used)] = [p.len for p in used]
    return FeatureMatrix(t, l)


def features_array(segments: Iterable[Segment], n_steps: int = N_STEPS) -> np.ndarray:
    """Stack the feature matrices of many segments into an ``(N, steps, 2)`` array."""
    mats = [extract_features(s, n_steps).values for s in segments]
    if not mats:
        return np.zeros((0, n_steps, 2))
    return np.stack(mats)


def _as_array(x) -> np.ndarray:
    if isinstance(x, FeatureMatrix):
        return x.values
    return np.asarray(x, dtype=np.float64)


def fit_normalization(train) -> NormalizationStats:
    """Global min/max of the inter-arrival and size rows over all training entries.

    ``train`` is a list of FeatureMatrix or an ``(N, steps, 2)`` array.
    """
    if isinstance(train, np.ndarray):
        arr = train
    else:
        train = list(train)
        arr = np.stack([_as_array(m) for m in train]) if train else np.zeros((0, N_STEPS, 2))
    if arr.size == 0:
        raise EmptyTrainingSet("cannot fit normalization on an empty training set")
    t, l = arr[..., 0], arr[..., 1]
    return NormalizationStats(float(t.min()), float(t.max()), float(l.min()), float(l.max()))


def _scale(v: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi == lo:
        return np.zeros_like(v)
    return np.clip((v - lo) / (hi - lo), 0.0, 1.0)


def apply_normalization(x, s: NormalizationStats):
    """Min-max scale each row to [0, 1] with clamping; returns the same kind as ``x``."""
    arr = _as_array(x)
    out = np.empty_like(arr)
    out[..., 0] = _scale(arr[..., 0], s.t_min, s.t_max)
    out[..., 1] = _scale(arr[..., 1], s.l_min, s.l_max)
    if isinstance(x, FeatureMatrix):
        return FeatureMatrix.from_array(out)
    return out
