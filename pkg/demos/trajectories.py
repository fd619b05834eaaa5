"""Bloch trajectories of the mapped and the naive state for a few modes."""

from nhmetric import IntegratorConfig, ModeParams, evolve_factored

cfg = IntegratorConfig(sample_count=9)
for k in (2.0, 1.1, 1.0, 0.2):
    tr = evolve_factored(ModeParams.from_scale(k, 1.0, 2.5), cfg)
    print(f"k = {k}")
    print("   t*sqrt(F)   metric (x, y, z)           norm (x, y, z)")
    for s in tr:
        m = " ".join(f"{v:+.4f}" for v in s.bloch_metric)
        n = " ".join(f"{v:+.4f}" for v in s.bloch_norm)
        print(f"  {s.t * tr.params.F ** 0.5:+8.2f}   {m}   {n}")
