"""Instantaneous spectrum of a PT-broken, an exceptional and a PT-symmetric mode."""

import numpy as np

from nhmetric import IntegratorConfig, ModeParams, ep_times, spectrum_on_grid

GAMMA, SCALE = 1.0, 2.5

for k in (0.2, 1.0, 2.0):
    p = ModeParams.from_scale(k, GAMMA, SCALE)
    t = IntegratorConfig(sample_count=2001).times(p)
    e = spectrum_on_grid(p, t)[:, 0]
    broken = t[e.imag != 0]
    span = f"[{broken.min():.3f}, {broken.max():.3f}]" if broken.size else "none"
    print(f"k={k:4.1f}  EP times {np.round(ep_times(p), 4)}  complex on {span}  "
          f"max Im E = {e.imag.max():.4f}")
