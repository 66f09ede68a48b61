"""Synthetic web-server traffic: Poisson normal clients, (R, L, T) pulse attacks, labeled datasets.

All generators are pure functions of their config and an integer seed, and
emit timestamps rounded down to whole microseconds so that a CSV round trip
reproduces them exactly.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import BadPreset, InsufficientAttackSegments, InvalidConfig
from .ingest import WINDOW, PacketRecord, Segment, segment_stream, write_packets
from .rng import substream

NORMAL = "normal"
ATTACK = "attack"


@dataclass(frozen=True)
class NormalTrafficConfig:
    mean_rate: float = 4.5
    pkt_len_range: tuple[int, int] = (60, 1500)
    n_clients: int = 4
    client_ip_base: str = "10.0.0."
    client_host_start: int = 11
    client_port_base: int = 40000
    server_ip: str = "10.0.0.1"
    server_ports: tuple[int, ...] = (80, 8080)

    def __post_init__(self):
        if not self.mean_rate > 0:
            raise InvalidConfig("mean_rate must be positive")
        lo, hi = self.pkt_len_range
        if not 0 <= lo <= hi <= 65535:
            raise InvalidConfig(f"bad packet length range {self.pkt_len_range}")
        if self.n_clients < 1:
            raise InvalidConfig("need at least one client")


@dataclass(frozen=True)
class PulseAttackConfig:
    """Pulse attack ``(R, L, T)`` plus its on/off running schedule.

    ``mode="pulse"`` puts ``floor(R*L)`` packets in the first ``L`` seconds of
    every complete period ``T`` of an on-phase. ``mode="slow"`` instead emits
    single packets separated by gaps of mean ``T`` (relative spread
    ``jitter``), modelling slow-read attacks that do not pulse.
    """

    peak_rate: float = 50.0
    pulse_len: float = 0.1
    period: float = 1.0
    on_duration: float = 50.0
    off_duration: float = 100.0
    attack_pkt_len: int | tuple[int, int] = 60
    jitter: float = 0.0
    mode: str = "pulse"
    src_ip: str = "10.0.0.66"
    src_port_base: int = 50000
    n_src_ports: int = 64
    dst_ip: str = "10.0.0.1"
    dst_port: int = 80
    proto: str = "TCP"

    def __post_init__(self):
        if self.mode not in ("pulse", "slow"):
            raise InvalidConfig(f"unknown attack mode {self.mode!r}")
        if not self.peak_rate > 0:
            raise InvalidConfig("peak rate R must be positive")
        if not self.period > 0:
            raise InvalidConfig("period T must be positive")
        if not 0 < self.pulse_len <= self.period:
            raise InvalidConfig(f"pulse length L={self.pulse_len} must lie in (0, T={self.period}]")
        if self.on_duration < 0 or self.off_duration < 0:
            raise InvalidConfig("on/off durations must be non-negative")
        if self.jitter < 0:
            raise InvalidConfig("jitter must be non-negative")
        lo, hi = self.len_range
        if not 0 <= lo <= hi <= 65535:
            raise InvalidConfig(f"bad attack packet length {self.attack_pkt_len}")

    @property
    def len_range(self) -> tuple[int, int]:
        if isinstance(self.attack_pkt_len, int):
            return self.attack_pkt_len, self.attack_pkt_len
        lo, hi = self.attack_pkt_len
        return int(lo), int(hi)

    @property
    def burst_size(self) -> int:
        # the epsilon absorbs products like 0.29 * 100 = 28.999999999999996
        return int(math.floor(self.peak_rate * self.pulse_len + 1e-9))

    @property
    def cycle(self) -> float:
        return self.on_duration + self.off_duration

    @property
    def average_rate(self) -> float:
        """Long-run packets per second of the pulse schedule."""
        if self.mode == "slow":
            return 1.0 / self.period
        if self.cycle == 0:
            return 0.0
        return self.burst_size * math.floor(self.on_duration / self.period + 1e-9) / self.cycle


# Parameter presets standing in for six attack tools. They vary burst rate,
# burst length, timing jitter and packet sizes; none emulates a protocol.
PRESETS: dict[str, PulseAttackConfig] = {
    "pwnloris-like": PulseAttackConfig(peak_rate=40, pulse_len=0.1, attack_pkt_len=(200, 400), jitter=0.002),
    "hping-like": PulseAttackConfig(peak_rate=50, pulse_len=0.1, attack_pkt_len=60),
    "torshammer-like": PulseAttackConfig(peak_rate=30, pulse_len=0.2, attack_pkt_len=(400, 700), jitter=0.01),
    "slowloris-like": PulseAttackConfig(peak_rate=30, pulse_len=0.1, attack_pkt_len=(150, 300), jitter=0.005),
    "httpbog-like": PulseAttackConfig(peak_rate=60, pulse_len=0.1, attack_pkt_len=(100, 1500), jitter=0.01),
    "slowhttptest-like": PulseAttackConfig(
        peak_rate=1.0, pulse_len=1.0, period=1.5, off_duration=0.0, attack_pkt_len=(54, 90), jitter=0.5, mode="slow"
    ),
}


def get_preset(name: str) -> PulseAttackConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise BadPreset(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def _usec(t: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(t) * 1e6) / 1e6


def _lengths(rng: np.random.Generator, lo: int, hi: int, n: int) -> np.ndarray:
    if lo == hi:
        return np.full(n, lo, dtype=np.int64)
    return rng.integers(lo, hi + 1, size=n)


def gen_normal(cfg: NormalTrafficConfig, duration: float, seed: int) -> list[PacketRecord]:
    """Poisson request arrivals at ``cfg.mean_rate`` over ``[0, duration)``.

    Packet lengths are i.i.d. uniform integers in ``cfg.pkt_len_range``;
    client addresses rotate round-robin.
    """
    if duration <= 0:
        return []
    rng = substream(seed, "synth", "normal")
    expected = cfg.mean_rate * duration
    chunk = int(expected + 10.0 * math.sqrt(expected) + 16)
    times = np.cumsum(rng.exponential(1.0 / cfg.mean_rate, size=chunk))
    while times[-1] < duration:
        more = np.cumsum(rng.exponential(1.0 / cfg.mean_rate, size=chunk)) + times[-1]
        times = np.concatenate([times, more])
    times = _usec(times[times < duration])
    lens = _lengths(rng, cfg.pkt_len_range[0], cfg.pkt_len_range[1], len(times))
    out = []
    nports = len(cfg.server_ports)
    for i, (ts, ln) in enumerate(zip(times.tolist(), lens.tolist())):
        k = i % cfg.n_clients
        out.append(
            PacketRecord(
                ts=ts,
                src_ip=f"{cfg.client_ip_base}{cfg.client_host_start + k}",
                src_port=cfg.client_port_base + k,
                dst_ip=cfg.server_ip,
                dst_port=cfg.server_ports[k % nports],
                proto="TCP",
                len=int(ln),
            )
        )
    return out


def _active_slots(cfg: PulseAttackConfig, duration: float) -> np.ndarray:
    """Start times of every complete pulse period inside an on-phase and before ``duration``."""
    eps = 1e-9
    per_phase = int(math.floor(cfg.on_duration / cfg.period + eps))
    if per_phase == 0 or duration <= 0:
        return np.zeros(0)
    starts = []
    cycle = cfg.cycle if cfg.cycle > 0 else cfg.on_duration
    k = 0
    while k * cycle < duration:
        base = k * cycle
        for j in range(per_phase):
            slot = base + j * cfg.period
            if slot + cfg.period > duration + eps:
                break
            starts.append(slot)
        k += 1
    return np.asarray(starts, dtype=np.float64)


def _attack_records(cfg: PulseAttackConfig, times: np.ndarray, rng: np.random.Generator) -> list[PacketRecord]:
    lo, hi = cfg.len_range
    lens = _lengths(rng, lo, hi, len(times))
    return [
        PacketRecord(
            ts=ts,
            src_ip=cfg.src_ip,
            src_port=cfg.src_port_base + (i % cfg.n_src_ports),
            dst_ip=cfg.dst_ip,
            dst_port=cfg.dst_port,
            proto=cfg.proto,
            len=int(ln),
        )
        for i, (ts, ln) in enumerate(zip(times.tolist(), lens.tolist()))
    ]


def gen_pulse_attack(cfg: PulseAttackConfig, duration: float, seed: int) -> list[PacketRecord]:
    """Attack packets over ``[0, duration)`` following the on/off schedule of ``cfg``.

    In pulse mode each complete period of an on-phase carries ``floor(R*L)``
    packets evenly spaced over its first ``L`` seconds (optionally jittered
    without leaving the burst); off-phases are silent.
    """
    if cfg.mode == "slow":
        return gen_slow_attack(cfg, duration, seed)
    rng = substream(seed, "synth", "attack")
    n = cfg.burst_size
    slots = _active_slots(cfg, duration)
    if n == 0 or len(slots) == 0:
        return []
    step = cfg.pulse_len / n
    offsets = np.arange(n) * step
    times = slots[:, None] + offsets[None, :]
    if cfg.jitter > 0:
        times = times + rng.uniform(0.0, min(cfg.jitter, step), size=times.shape)
        # keep each packet inside its burst window and the burst ordered
        times = np.minimum(times, slots[:, None] + cfg.pulse_len - 1e-6)
        times = np.sort(times, axis=1)
    return _attack_records(cfg, _usec(times.ravel()), rng)


def gen_slow_attack(cfg: PulseAttackConfig, duration: float, seed: int) -> list[PacketRecord]:
    """Isolated packets with long gaps of mean ``cfg.period`` during on-phases."""
    rng = substream(seed, "synth", "attack")
    if duration <= 0 or cfg.on_duration == 0:
        return []
    spread = min(cfg.jitter, 0.999) * cfg.period
    n_max = int(duration / (cfg.period - spread) + 2)
    gaps = rng.uniform(cfg.period - spread, cfg.period + spread, size=n_max)
    times = np.concatenate([[0.0], np.cumsum(gaps)])
    times = times[times < duration]
    if cfg.off_duration > 0:
        times = times[np.mod(times, cfg.cycle) < cfg.on_duration]
    return _attack_records(cfg, _usec(times), rng)


def strip_sleep(records: Sequence[PacketRecord], cfg: PulseAttackConfig) -> list[PacketRecord]:
    """Drop off-phase traffic and shift on-phases together so they are contiguous."""
    if cfg.off_duration == 0:
        return list(records)
    out = []
    for r in records:
        k = math.floor(r.ts / cfg.cycle)
        offset = r.ts - k * cfg.cycle
        if offset < cfg.on_duration:
            out.append(replace(r, ts=float(_usec(k * cfg.on_duration + offset))))
    return out


def attack_trace(cfg: PulseAttackConfig, active_duration: float, seed: int) -> list[PacketRecord]:
    """Sleep-stripped attack traffic covering ``active_duration`` seconds of attack time."""
    if cfg.off_duration == 0 or cfg.mode == "slow":
        return [r for r in gen_pulse_attack(replace(cfg, off_duration=0.0), active_duration, seed)]
    cycles = math.ceil(active_duration / cfg.on_duration) if cfg.on_duration > 0 else 0
    raw = gen_pulse_attack(cfg, cycles * cfg.cycle, seed)
    return [r for r in strip_sleep(raw, cfg) if r.ts < active_duration]


def _merge(*traces: Sequence[PacketRecord]) -> list[PacketRecord]:
    merged = [r for tr in traces for r in tr]
    merged.sort(key=lambda r: r.ts)
    return merged


def normal_segments(
    cfg: NormalTrafficConfig, n_segments: int, seed: int, prefix: str = "normal"
) -> list[Segment]:
    trace = gen_normal(cfg, n_segments * WINDOW, substream_int(seed, "normal-trace"))
    return segment_stream(trace, origin=0.0, prefix=prefix, n_windows=n_segments)


def attack_segments(
    cfg: PulseAttackConfig | str,
    n_segments: int,
    seed: int,
    background: NormalTrafficConfig | None = NormalTrafficConfig(),
    prefix: str | None = None,
) -> list[Segment]:
    """Attack segments: sleep-stripped attack traffic, optionally over normal background."""
    name = cfg if isinstance(cfg, str) else "attack"
    if isinstance(cfg, str):
        cfg = get_preset(cfg)
    duration = n_segments * WINDOW
    trace = attack_trace(cfg, duration, substream_int(seed, "attack-trace", name))
    if background is not None:
        bg = gen_normal(background, duration, substream_int(seed, "attack-background", name))
        trace = _merge(trace, bg)
    return segment_stream(trace, origin=0.0, prefix=prefix or f"atk-{name}", n_windows=n_segments)


def substream_int(seed: int, *names: object) -> int:
    return int(substream(seed, *names).integers(0, 2**63 - 1))


@dataclass
class LabeledDataset:
    name: str
    segments: list[tuple[Segment, str]] = field(default_factory=list)
    seed: int | None = None

    @property
    def n_normal(self) -> int:
        return sum(1 for _, lab in self.segments if lab == NORMAL)

    @property
    def n_attack(self) -> int:
        return sum(1 for _, lab in self.segments if lab == ATTACK)

    @property
    def anomaly_ratio(self) -> float:
        n = len(self.segments)
        return self.n_attack / n if n else 0.0

    @property
    def labels(self) -> list[str]:
        return [lab for _, lab in self.segments]

    def normal(self) -> list[Segment]:
        return [s for s, lab in self.segments if lab == NORMAL]

    def composition(self) -> dict:
        return {
            "n_segments": len(self.segments),
            "n_normal": self.n_normal,
            "n_attack": self.n_attack,
            "anomaly_ratio": self.anomaly_ratio,
            "minutes": len(self.segments) * WINDOW / 60.0,
        }


def compose_dataset(
    normal_segs: Sequence[Segment],
    attack_segs: Sequence[Segment],
    n_attack: int,
    seed: int,
    name: str = "dataset",
) -> LabeledDataset:
    """Insert ``n_attack`` randomly chosen attack segments at random positions among the normal ones.

    Normal segments keep their relative order.
    """
    if n_attack > len(attack_segs):
        raise InsufficientAttackSegments(f"asked for {n_attack} attack segments, only {len(attack_segs)} available")
    if n_attack < 0:
        raise ValueError("n_attack must be non-negative")
    rng = substream(seed, "compose", name)
    picks = rng.choice(len(attack_segs), size=n_attack, replace=False) if n_attack else np.zeros(0, dtype=int)
    total = len(normal_segs) + n_attack
    slots = np.zeros(total, dtype=bool)
    if n_attack:
        slots[rng.choice(total, size=n_attack, replace=False)] = True
    nit = iter(normal_segs)
    ait = iter(attack_segs[int(i)] for i in picks)
    segments = [(next(ait), ATTACK) if is_attack else (next(nit), NORMAL) for is_attack in slots.tolist()]
    return LabeledDataset(name=name, segments=segments, seed=seed)


def split_train_valid(normal_segs: Sequence, ratio: float = 0.7, seed: int = 0) -> tuple[list, list]:
    """Random disjoint split with ``round(ratio * n)`` items in the first part.

    Both parts keep the input's relative order.
    """
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie strictly between 0 and 1")
    n = len(normal_segs)
    n_train = int(math.floor(ratio * n + 0.5))
    perm = substream(seed, "split").permutation(n)
    train_idx = np.sort(perm[:n_train])
    valid_idx = np.sort(perm[n_train:])
    return [normal_segs[i] for i in train_idx], [normal_segs[i] for i in valid_idx]


def table2_dataset(
    attack: str | PulseAttackConfig | Sequence[str | PulseAttackConfig],
    seed: int,
    n_normal: int = 2160,
    n_attack: int = 360,
    normal_cfg: NormalTrafficConfig = NormalTrafficConfig(),
    background: NormalTrafficConfig | None = NormalTrafficConfig(),
    name: str | None = None,
) -> LabeledDataset:
    """A labeled detection set: normal segments with attack segments inserted at random positions.

    A single preset name gives ``n_normal`` normal plus ``n_attack`` attack
    segments. A list of presets draws ``n_attack // len(list)`` segments from
    each one (the mixed "all-united" set uses 6 x 120 = 720).
    """
    normal = normal_segments(normal_cfg, n_normal, seed)
    items = [attack] if isinstance(attack, (str, PulseAttackConfig)) else list(attack)
    per = n_attack // len(items)
    pool: list[Segment] = []
    for item in items:
        pool.extend(attack_segments(item, per, seed, background=background))
    first = items[0] if isinstance(items[0], str) else "custom"
    label = name or (first if len(items) == 1 else "all-united")
    return compose_dataset(normal, pool, len(pool), seed, name=label)


def scheduled_dataset(
    attack: str | PulseAttackConfig,
    duration: float,
    seed: int,
    normal_cfg: NormalTrafficConfig = NormalTrafficConfig(),
    name: str | None = None,
) -> LabeledDataset:
    """One continuous capture: normal clients throughout, the attack running its on/off schedule.

    A window is labeled attack when it holds at least one attack packet.
    """
    label = name or (attack if isinstance(attack, str) else "custom")
    cfg = get_preset(attack) if isinstance(attack, str) else attack
    n = int(math.ceil(duration / WINDOW))
    atk = gen_pulse_attack(cfg, duration, substream_int(seed, "schedule-attack", label))
    bg = gen_normal(normal_cfg, duration, substream_int(seed, "schedule-normal", label))
    hit = segment_stream(atk, origin=0.0, n_windows=n)
    segs = segment_stream(_merge(atk, bg), origin=0.0, prefix="seg", n_windows=n)
    labeled = [(seg, ATTACK if len(h) else NORMAL) for seg, h in zip(segs, hit)]
    return LabeledDataset(name=label, segments=labeled, seed=seed)


def write_dataset(ds: LabeledDataset, out_dir: str | os.PathLike, stem: str | None = None, extra: dict | None = None):
    """Write ``<stem>.csv`` (packets), ``<stem>.labels.csv`` and ``<stem>.manifest.json``.

    Segment ``k`` is laid out at ``[10k, 10k + 10)`` with its first packet on
    the window boundary, so re-segmenting the trace reproduces the dataset
    order. Label ids are the ids that :func:`segment_stream` would assign.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or ds.name
    records: list[PacketRecord] = []
    labels = []
    width = max(4, len(str(len(ds.segments) - 1)))
    sources = []
    for k, (seg, lab) in enumerate(ds.segments):
        if seg.packets:
            first = seg.packets[0].ts
            base = k * WINDOW
            records.extend(replace(p, ts=float(_usec(base + (p.ts - first)))) for p in seg.packets)
        labels.append((f"seg-{k:0{width}d}", lab))
        sources.append(seg.segment_id)
    trace_path = out / f"{stem}.csv"
    write_packets(records, trace_path)
    with open(out / f"{stem}.labels.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("segment_id,label\n")
        for sid, lab in labels:
            fh.write(f"{sid},{lab}\n")
    manifest = {
        "name": ds.name,
        "seed": ds.seed,
        "trace": trace_path.name,
        "labels": f"{stem}.labels.csv",
        "composition": ds.composition(),
        "sources": sources,
    }
    if extra:
        manifest.update(extra)
    with open(out / f"{stem}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return trace_path


def read_labels(path: str | os.PathLike) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "segment_id,label":
            raise ValueError(f"bad labels header {header!r}")
        out = {}
        for line in fh:
            line = line.strip()
            if line:
                sid, lab = line.split(",")
                out[sid] = lab
        return out


def config_dict(cfg) -> dict:
    d = asdict(cfg)
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}
