"""
Detecting attack windows with the OR rule
=========================================

A window is flagged when either reconstruction error reaches its threshold.
The ``triggered`` field tells which model fired.
"""

from collections import Counter

from tfd.ingest import apply_normalization, features_array, fit_normalization
from tfd.pipeline import Hyperparams, detect_batch, fit_detector
from tfd.synth import split_train_valid, table2_dataset

ds = table2_dataset("hping-like", seed=4, n_normal=400, n_attack=80)
train_segs, valid_segs = split_train_valid(ds.normal(), 0.7, seed=4)
raw = features_array(train_segs)
norm = fit_normalization(raw)
hp = Hyperparams(epochs=20, calib_epoch_lo=15, calib_epoch_hi=20, calib_runs=2, seed=4)
det = fit_detector(apply_normalization(raw, norm), apply_normalization(features_array(valid_segs), norm), norm, hp).detector

segments = [seg for seg, _ in ds.segments]
results = detect_batch(segments, det)
for res, label in list(zip(results, ds.labels))[:5]:
    print(f"{res.segment_id}: r_t={res.r_t:.4f} r_f={res.r_f:.4f} -> {res.verdict} ({res.triggered}); truth {label}")

for label in ("normal", "attack"):
    fired = Counter(r.triggered for r, y in zip(results, ds.labels) if y == label)
    print(f"{label} windows, which model fired:", dict(fired))
