"""Training loop, steady-state threshold calibration and the dual-threshold detector."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import EmptyTrainingSet, InsufficientRuns
from .ingest import NormalizationStats, Segment, apply_normalization, features_array
from .nncore import make_optimizer
from .reconstructors import FreqReconstructor, TimeReconstructor, build
from .rng import substream, substream_seed

log = logging.getLogger(__name__)

ATTACK = "attack"
NORMAL = "normal"


@dataclass(frozen=True)
class Hyperparams:
    epochs: int = 100
    batch_size: int = 16
    lr_time: float = 0.05
    lr_freq: float = 0.001
    calib_epoch_lo: int = 71
    calib_epoch_hi: int = 100
    calib_runs: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.epochs < self.calib_epoch_hi:
            raise ValueError("epochs must cover the calibration window")
        if not 1 <= self.calib_epoch_lo <= self.calib_epoch_hi:
            raise ValueError("calibration window must satisfy 1 <= lo <= hi")
        if min(self.batch_size, self.calib_runs) < 1 or min(self.lr_time, self.lr_freq) <= 0:
            raise ValueError("batch size, run count and learning rates must be positive")

    @classmethod
    def small_lr(cls, **overrides) -> "Hyperparams":
        """Learning rates 5e-5 (AdaGrad) and 1e-5 (Adam); far too small to converge in 100 epochs."""
        return cls(**{"lr_time": 0.00005, "lr_freq": 0.00001, **overrides})

    @classmethod
    def quick(cls, epochs: int, **overrides) -> "Hyperparams":
        """Shortened schedule whose calibration window is the last 30% of epochs."""
        lo = max(1, epochs - max(1, round(0.3 * epochs)) + 1)
        return cls(epochs=epochs, calib_epoch_lo=lo, calib_epoch_hi=epochs, **overrides)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Thresholds:
    R_t: float
    R_f: float

    def __post_init__(self):
        for v in (self.R_t, self.R_f):
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"thresholds must be finite and positive, got {self}")


@dataclass
class TrainingTrace:
    train_loss: list[float] = field(default_factory=list)
    valid_error: list[float] = field(default_factory=list)
    wall_time: list[float] = field(default_factory=list)
    seed: int | None = None

    def same_values(self, other: "TrainingTrace") -> bool:
        """Equality ignoring wall-clock times."""
        return self.train_loss == other.train_loss and self.valid_error == other.valid_error

    def to_csv(self) -> str:
        rows = ["epoch,train_loss,valid_error"]
        rows += [f"{k + 1},{a!r},{b!r}" for k, (a, b) in enumerate(zip(self.train_loss, self.valid_error))]
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class DetectionResult:
    segment_id: str
    r_t: float
    r_f: float
    verdict: str
    triggered: str

    def to_dict(self) -> dict:
        return asdict(self)


def run_seed(root: int, *names: object) -> int:
    """Integer seed of a named sub-stream, for handing to model constructors."""
    return int(substream_seed(root, *names).generate_state(1, np.uint64)[0] >> 1)


def _optimizer_for(model, hp: Hyperparams):
    lr = hp.lr_time if model.kind == "time" else hp.lr_freq
    return make_optimizer(model.optimizer, lr)


def train(model, train_set: np.ndarray, valid_set: np.ndarray, hp: Hyperparams, seed: int | None = None):
    """Mini-batch training of one reconstructor; returns ``(model, trace)``.

    Every epoch reshuffles the training set with a seeded stream, takes a
    descent step per batch (last partial batch kept), then records the mean
    training loss and the mean validation reconstruction error.
    """
    train_set = np.asarray(train_set, dtype=np.float64)
    valid_set = np.asarray(valid_set, dtype=np.float64)
    if len(train_set) == 0:
        raise EmptyTrainingSet("no training segments")
    seed = hp.seed if seed is None else seed
    rng = substream(seed, "shuffle", model.kind)
    opt = _optimizer_for(model, hp)
    trace = TrainingTrace(seed=seed)
    n = len(train_set)
    for epoch in range(hp.epochs):
        start = time.perf_counter()
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, hp.batch_size):
            xb = train_set[order[lo : lo + hp.batch_size]]
            model.params.zero_grad()
            loss, grad = model.loss(xb, model.forward(xb))
            model.backward(grad)
            opt.step(model.params)
            total += loss * len(xb)
        trace.train_loss.append(total / n)
        trace.valid_error.append(float(np.mean(model.score(valid_set))) if len(valid_set) else float("nan"))
        trace.wall_time.append(time.perf_counter() - start)
        log.debug("%s epoch %d loss %.6g valid %.6g", model.kind, epoch + 1, trace.train_loss[-1], trace.valid_error[-1])
    return model, trace


def calibrate_threshold(traces: Sequence[TrainingTrace], hp: Hyperparams) -> float:
    """Mean validation error over epochs ``[lo, hi]`` of each run, averaged over runs."""
    if len(traces) < 1 or len(traces) < hp.calib_runs:
        raise InsufficientRuns(f"need {hp.calib_runs} traces, got {len(traces)}")
    lo, hi = hp.calib_epoch_lo, hp.calib_epoch_hi
    means = []
    for tr in traces:
        window = tr.valid_error[lo - 1 : hi]
        if len(window) != hi - lo + 1:
            raise InsufficientRuns(f"trace has {len(tr.valid_error)} epochs, window needs {hi}")
        means.append(float(np.mean(window)))
    return float(np.mean(means))


@dataclass
class Calibration:
    kind: str
    threshold: float
    models: list
    traces: list[TrainingTrace]

    @property
    def model(self):
        """The first run's model, used for detection."""
        return self.models[0]


def calibrate(kind: str, train_set: np.ndarray, valid_set: np.ndarray, hp: Hyperparams) -> Calibration:
    """Train ``hp.calib_runs`` independently seeded reconstructors and calibrate their threshold."""
    models, traces = [], []
    for i in range(hp.calib_runs):
        seed = run_seed(hp.seed, "calib-run", i)
        model, trace = train(build(kind, seed), train_set, valid_set, hp, seed=seed)
        log.info("%s calibration run %d/%d: final loss %.5g, window error %.5g",
                 kind, i + 1, hp.calib_runs, trace.train_loss[-1],
                 np.mean(trace.valid_error[hp.calib_epoch_lo - 1 : hp.calib_epoch_hi]))
        models.append(model)
        traces.append(trace)
    return Calibration(kind, calibrate_threshold(traces, hp), models, traces)


@dataclass
class Detector:
    """Both trained reconstructors, their thresholds and the training normalization."""

    time_model: TimeReconstructor
    freq_model: FreqReconstructor
    thresholds: Thresholds
    norm: NormalizationStats
    meta: dict = field(default_factory=dict)

    def scores(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Reconstruction errors ``(r_t, r_f)`` for normalized inputs ``(N, 16, 2)``."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            x = x[None]
        if len(x) == 0:
            return np.zeros(0), np.zeros(0)
        return self.time_model.score(x), self.freq_model.score(x)

    def prepare(self, segments: Sequence[Segment]) -> np.ndarray:
        return apply_normalization(features_array(segments), self.norm)


def verdict(r_t: float, r_f: float, th: Thresholds) -> tuple[str, str]:
    """Attack when either error reaches its threshold (inclusive)."""
    t_hit = r_t >= th.R_t
    f_hit = r_f >= th.R_f
    triggered = "both" if t_hit and f_hit else "time" if t_hit else "freq" if f_hit else "none"
    return (ATTACK if t_hit or f_hit else NORMAL), triggered


def detect(x, models: Detector, th: Thresholds | None = None, segment_id: str = "") -> DetectionResult:
    """Score one normalized feature matrix and apply the OR rule."""
    th = th or models.thresholds
    arr = x.values if hasattr(x, "values") and not isinstance(x, np.ndarray) else np.asarray(x)
    r_t, r_f = models.scores(arr)
    v, trig = verdict(float(r_t[0]), float(r_f[0]), th)
    return DetectionResult(segment_id, float(r_t[0]), float(r_f[0]), v, trig)


def detect_batch(segments, models: Detector, th: Thresholds | None = None, ids: Sequence[str] | None = None):
    """Order-preserving detection over segments or an ``(N, 16, 2)`` normalized array."""
    th = th or models.thresholds
    if isinstance(segments, np.ndarray):
        x = segments
        ids = list(ids) if ids is not None else [str(i) for i in range(len(x))]
    else:
        segments = list(segments)
        if not segments:
            return []
        x = models.prepare(segments)
        ids = [s.segment_id for s in segments] if ids is None else list(ids)
    if len(x) == 0:
        return []
    r_t, r_f = models.scores(x)
    out = []
    for sid, a, b in zip(ids, r_t.tolist(), r_f.tolist()):
        v, trig = verdict(a, b, th)
        out.append(DetectionResult(sid, a, b, v, trig))
    return out


@dataclass
class TrainingResult:
    detector: Detector
    time_calibration: Calibration
    freq_calibration: Calibration


def fit_detector(train_x: np.ndarray, valid_x: np.ndarray, norm: NormalizationStats, hp: Hyperparams) -> TrainingResult:
    """Calibrate both reconstructors on normalized normal data and bundle a detector."""
    ct = calibrate("time", train_x, valid_x, hp)
    cf = calibrate("freq", train_x, valid_x, hp)
    det = Detector(ct.model, cf.model, Thresholds(ct.threshold, cf.threshold), norm, meta={"seed": hp.seed})
    return TrainingResult(det, ct, cf)
