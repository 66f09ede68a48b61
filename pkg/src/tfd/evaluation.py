"""Confusion-matrix metrics, repeated-run evaluation and Table-5-shaped reports."""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import LengthMismatch
from .ingest import apply_normalization, features_array, fit_normalization
from .pipeline import ATTACK, Hyperparams, detect_batch, fit_detector, run_seed
from .synth import LabeledDataset, split_train_valid

log = logging.getLogger(__name__)

METRIC_NAMES = ("accuracy", "recall", "precision", "fpr", "f1")
COLUMNS = ("Accuracy", "Recall", "Precision", "FAR", "F1")


class DegenerateMetricWarning(UserWarning):
    """A metric had a zero denominator and was reported as 0."""


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.fp + self.tn


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    fpr: float
    f1: float
    degenerate: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in METRIC_NAMES}


def _label(v) -> bool:
    if isinstance(v, str):
        return v == ATTACK
    return bool(v)


def confusion(preds: Sequence, labels: Sequence) -> ConfusionMatrix:
    """Count cells with attack as the positive class.

    Entries may be verdict strings (``"attack"``/``"normal"``) or booleans.
    """
    if len(preds) != len(labels):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(labels)} labels")
    p = np.fromiter((_label(v) for v in preds), dtype=bool, count=len(preds))
    y = np.fromiter((_label(v) for v in labels), dtype=bool, count=len(labels))
    return ConfusionMatrix(
        tp=int(np.sum(p & y)), fn=int(np.sum(~p & y)), fp=int(np.sum(p & ~y)), tn=int(np.sum(~p & ~y))
    )


def _ratio(num: float, den: float, name: str, bad: list[str]) -> float:
    if den == 0:
        bad.append(name)
        return 0.0
    return num / den


def metrics(cm: ConfusionMatrix, warn: bool = True) -> Metrics:
    """Accuracy, precision, recall, false-alarm rate and F1; 0/0 gives 0 and is flagged."""
    bad: list[str] = []
    acc = _ratio(cm.tp + cm.tn, cm.tp + cm.tn + cm.fp + cm.fn, "accuracy", bad)
    prec = _ratio(cm.tp, cm.tp + cm.fp, "precision", bad)
    rec = _ratio(cm.tp, cm.tp + cm.fn, "recall", bad)
    fpr = _ratio(cm.fp, cm.fp + cm.tn, "fpr", bad)
    f1 = _ratio(2 * prec * rec, prec + rec, "f1", bad)
    if bad and warn:
        warnings.warn(f"zero denominator in {', '.join(bad)}", DegenerateMetricWarning, stacklevel=2)
    return Metrics(acc, prec, rec, fpr, f1, tuple(bad))


def mean_metrics(ms: Sequence[Metrics]) -> Metrics:
    if not ms:
        raise ValueError("no metrics to average")
    vals = {k: float(np.mean([getattr(m, k) for m in ms])) for k in METRIC_NAMES}
    degenerate = tuple(sorted({d for m in ms for d in m.degenerate}))
    return Metrics(degenerate=degenerate, **vals)


@dataclass
class RunResult:
    seed: int
    cm: ConfusionMatrix
    metrics: Metrics
    thresholds: tuple[float, float] = (0.0, 0.0)

    def to_dict(self) -> dict:
        return {"seed": self.seed, **asdict(self.cm), "metrics": self.metrics.as_dict(),
                "thresholds": {"R_t": self.thresholds[0], "R_f": self.thresholds[1]}}


@dataclass
class EvalResult:
    dataset: str
    runs: list[RunResult] = field(default_factory=list)

    @property
    def mean(self) -> Metrics:
        return mean_metrics([r.metrics for r in self.runs])

    def std(self, name: str) -> float:
        return float(np.std([getattr(r.metrics, name) for r in self.runs]))

    def to_dict(self) -> dict:
        return {"dataset": self.dataset, "runs": [r.to_dict() for r in self.runs], "mean": self.mean.as_dict()}


def evaluate_once(dataset: LabeledDataset, hp: Hyperparams, seed: int) -> RunResult:
    """Train and calibrate on a 70/30 split of the normal segments, then detect over the whole dataset."""
    hp = replace(hp, seed=seed)
    train_segs, valid_segs = split_train_valid(dataset.normal(), 0.7, seed=seed)
    train_raw = features_array(train_segs)
    norm = fit_normalization(train_raw)
    fitted = fit_detector(apply_normalization(train_raw, norm),
                          apply_normalization(features_array(valid_segs), norm), norm, hp)
    segs = [s for s, _ in dataset.segments]
    results = detect_batch(segs, fitted.detector)
    cm = confusion([r.verdict for r in results], dataset.labels)
    th = fitted.detector.thresholds
    return RunResult(seed, cm, metrics(cm), (th.R_t, th.R_f))


def evaluate_runs(dataset: LabeledDataset, hp: Hyperparams, k: int = 5) -> EvalResult:
    """``k`` independently re-seeded train/calibrate/detect runs, kept individually."""
    out = EvalResult(dataset.name)
    for i in range(k):
        seed = run_seed(hp.seed, "eval-run", dataset.name, i)
        res = evaluate_once(dataset, hp, seed)
        log.info("%s run %d/%d: recall %.4f far %.4f", dataset.name, i + 1, k, res.metrics.recall, res.metrics.fpr)
        out.runs.append(res)
    return out


def report(results: Sequence[EvalResult]) -> tuple[str, dict]:
    """Plain-text table (one row per dataset plus Average) and its JSON mirror."""
    if not results:
        raise ValueError("report needs at least one evaluated dataset")
    means = [r.mean for r in results]
    avg = mean_metrics(means)
    width = max(len("Average"), *(len(r.dataset) for r in results))
    head = f"{'Dataset':<{width}}  " + "  ".join(f"{c:>9}" for c in COLUMNS)
    lines = [head, "-" * len(head)]
    for name, m in [(r.dataset, m) for r, m in zip(results, means)] + [("Average", avg)]:
        lines.append(f"{name:<{width}}  " + "  ".join(f"{getattr(m, k):>9.4f}" for k in METRIC_NAMES))
    doc = {
        "columns": list(COLUMNS),
        "datasets": [r.to_dict() for r in results],
        "average": avg.as_dict(),
    }
    return "\n".join(lines) + "\n", doc


def report_json(results: Sequence[EvalResult]) -> str:
    return json.dumps(report(results)[1], indent=2, sort_keys=True)


def results_from_json(doc: dict) -> list[EvalResult]:
    """Rebuild evaluation results from a report's JSON mirror."""
    out = []
    for d in doc["datasets"]:
        runs = []
        for r in d["runs"]:
            cm = ConfusionMatrix(r["tp"], r["fn"], r["fp"], r["tn"])
            th = r.get("thresholds", {})
            runs.append(RunResult(r["seed"], cm, metrics(cm, warn=False), (th.get("R_t", 0.0), th.get("R_f", 0.0))))
        out.append(EvalResult(d["dataset"], runs))
    return out
