"""Defect density from PT-broken modes as the sweep gets slower."""

import math

from nhmetric import METRIC, NORM, defect_density, defect_density_finite_F

GAMMA = 1.0
print("gamma^2/F   metric PTb   norm PTb")
for scale in (1.0, 10.0, 100.0, 1000.0):
    F = GAMMA ** 2 / scale
    m = defect_density_finite_F(GAMMA, F, METRIC)
    n = defect_density_finite_F(GAMMA, F, NORM)
    print(f"{scale:9.0f}   {m.sigma_ptb:.6f}     {n.sigma_ptb:+.6f}")
m, n = defect_density(GAMMA, METRIC), defect_density(GAMMA, NORM)
print(f"adiabatic   {m.sigma_ptb:.6f}     {n.sigma_ptb:+.6f}   (gamma / 3 pi = {GAMMA / (3 * math.pi):.6f})")
