"""
Synthetic normal traffic and a pulsing low-rate attack
======================================================

Normal clients send Poisson traffic. The attack sends short bursts at a
high peak rate and then sleeps, so its long-run rate stays low.
"""

import numpy as np

from tfd.synth import NormalTrafficConfig, gen_normal, gen_pulse_attack, get_preset

# one minute of normal traffic from the default population of clients
normal = gen_normal(NormalTrafficConfig(), duration=60.0, seed=1)
print(f"normal: {len(normal)} packets in 60 s, {len(normal) / 60:.2f} packets/s")

# the hping-like preset: 50 packets/s bursts of 0.1 s, 60-byte packets
cfg = get_preset("hping-like")
print(f"attack: peak {cfg.peak_rate} packets/s, burst {cfg.pulse_len} s, "
      f"cycle {cfg.cycle} s, long-run rate {cfg.average_rate:.3f} packets/s")

# five minutes, so the sleep between attack cycles is visible
attack = gen_pulse_attack(cfg, duration=300.0, seed=1)
ts = np.array([p.ts for p in attack])
print(f"attack: {len(attack)} packets in 300 s, active in [{ts.min():.2f}, {ts.max():.2f}] s")

# bursts show up as clusters of tiny gaps separated by long sleeps
gaps = np.diff(ts)
print(f"gaps inside a burst ~{np.median(gaps):.4f} s, longest sleep {gaps.max():.1f} s")
