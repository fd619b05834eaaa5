"""Asymptotic polarisation versus k: simulation, closed form and adiabatic law."""

import numpy as np

from nhmetric import METRIC, NORM, ModeParams, adiabatic_value, asymptotic_value, sweep_point

GAMMA, SCALE = 1.0, 25.0

print("    k    sim metric  formula     adiabatic | sim norm    formula     adiabatic")
for k in np.linspace(-2, 2, 17):
    p = ModeParams.from_scale(k, GAMMA, SCALE)
    sp = sweep_point(p)
    row = []
    for m, z in ((METRIC, sp.bloch_metric[2]), (NORM, sp.bloch_norm[2])):
        row.append(f"{z:+.6f}  {asymptotic_value(k, GAMMA, p.F, m):+.6f}  "
                   f"{adiabatic_value(k, GAMMA, m):+.6f}")
    print(f"{k:+6.2f}  " + " | ".join(row))
