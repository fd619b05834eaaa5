"""k -> -k parity: the metric polarisation is even, the naive one is not."""

from nhmetric import IntegratorConfig, parity_report

rows = parity_report(1.0, 0.4, [-2, -1.1, -0.5, -0.2, 0, 0.2, 0.5, 1.1, 2],
                     IntegratorConfig(sample_count=201))
print("   k   metric sz even  metric sx odd   norm sz even   norm sz odd")
for r in rows:
    print(f"{r.k:4.1f}   {r.metric_z_even:.2e}        {r.metric_x_odd:.2e}       "
          f"{r.norm_z_even:.2e}       {r.norm_z_odd:.2e}")
