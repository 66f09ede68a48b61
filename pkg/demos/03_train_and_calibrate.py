"""
Training both reconstructors and calibrating thresholds
=======================================================

The time-domain model is an LSTM autoencoder scored by MSE. The frequency
domain model is a causal convolutional residual net scored by binary cross
entropy. Each threshold is the mean validation error over the last epochs,
averaged across several seeded runs. A short schedule keeps this demo quick.
"""

from tfd.ingest import apply_normalization, features_array, fit_normalization
from tfd.pipeline import Hyperparams, fit_detector
from tfd.synth import NormalTrafficConfig, normal_segments, split_train_valid

segments = normal_segments(NormalTrafficConfig(), 600, seed=3)
train_segs, valid_segs = split_train_valid(segments, 0.7, seed=3)
raw = features_array(train_segs)
norm = fit_normalization(raw)
train_x = apply_normalization(raw, norm)
valid_x = apply_normalization(features_array(valid_segs), norm)
print(f"train {len(train_x)}, valid {len(valid_x)}")

# 20 epochs, thresholds from epochs 15..20, three runs per model
hp = Hyperparams(epochs=20, calib_epoch_lo=15, calib_epoch_hi=20, calib_runs=3, seed=3)
result = fit_detector(train_x, valid_x, norm, hp)

for cal in (result.time_calibration, result.freq_calibration):
    tr = cal.traces[0]
    print(f"{cal.kind}: loss {tr.train_loss[0]:.4f} -> {tr.train_loss[-1]:.4f}, "
          f"{sum(tr.wall_time):.1f} s per run, threshold {cal.threshold:.4f}")
print("thresholds:", result.detector.thresholds)
