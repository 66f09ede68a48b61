"""
From packets to 16 x 2 feature matrices
=======================================

A trace is cut into 10-second windows. Each window becomes a matrix of
inter-arrival gaps and packet sizes for its first 16 packets, zero padded,
then min-max scaled with statistics fitted on training data only.
"""

from tfd.ingest import apply_normalization, extract_features, features_array, fit_normalization, segment_stream
from tfd.synth import NormalTrafficConfig, attack_segments, gen_normal

trace = gen_normal(NormalTrafficConfig(), duration=300.0, seed=2)
segments = segment_stream(trace)
print(f"{len(trace)} packets -> {len(segments)} windows; packets per window:",
      [len(s) for s in segments[:10]], "...")

# the first packet of a window has gap 0 by definition
fm = extract_features(segments[0])
print("first window, gaps :", fm.t[:6].round(3))
print("first window, sizes:", fm.l[:6])

# fit the scaler on normal windows, then apply it to attack windows too
raw = features_array(segments)
norm = fit_normalization(raw)
print("fitted:", norm)
x = apply_normalization(raw, norm)
atk = apply_normalization(features_array(attack_segments("hping-like", 5, seed=2)), norm)
print(f"normal batch {x.shape}, range [{x.min():.2f}, {x.max():.2f}]")
print("an attack window's scaled sizes:", atk[0, :8, 1].round(3))
