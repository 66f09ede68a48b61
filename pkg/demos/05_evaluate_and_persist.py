"""
Repeated-run evaluation, the report table, and the model file
=============================================================

Each evaluation run draws its own train/validation split and seeds,
trains and calibrates both models, then scores the whole labeled set. The report averages runs.
A fitted detector saves to a single binary file and reloads bit for bit.
"""

import tempfile
from pathlib import Path

import numpy as np

from tfd.evaluation import evaluate_runs, report
from tfd.ingest import apply_normalization, features_array, fit_normalization
from tfd.modelio import load_model, save_model
from tfd.pipeline import Hyperparams, fit_detector
from tfd.synth import split_train_valid, table2_dataset

hp = Hyperparams(epochs=10, calib_epoch_lo=8, calib_epoch_hi=10, calib_runs=2, seed=5)
results = [evaluate_runs(table2_dataset(name, seed=5, n_normal=300, n_attack=60), hp, k=2)
           for name in ("hping-like", "torshammer-like")]
table, doc = report(results)
print(table)
print("recall per run on", results[0].dataset, [round(r.metrics.recall, 3) for r in results[0].runs])

ds = table2_dataset("hping-like", seed=5, n_normal=300, n_attack=60)
train_segs, valid_segs = split_train_valid(ds.normal(), 0.7, seed=5)
raw = features_array(train_segs)
norm = fit_normalization(raw)
det = fit_detector(apply_normalization(raw, norm), apply_normalization(features_array(valid_segs), norm), norm, hp).detector

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.tfd"
    save_model(det, path)
    back = load_model(path)
    x = det.prepare([seg for seg, _ in ds.segments])
    same = all(np.array_equal(a, b) for a, b in zip(det.scores(x), back.scores(x)))
    print(f"{path.stat().st_size} bytes on disk; reloaded scores identical: {same}")
