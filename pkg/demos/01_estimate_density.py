"""Estimate an event-time density from simulated current status data.

Each subject is inspected once at time t and we only learn whether the
event had already happened.  Run with ``python3 demos/01_estimate_density.py``.
"""

import numpy as np

from cskde import (CdfEstimate, GEstimate, analytic_density, f_final, f_minus, f_plus,
                   transform)
from cskde.families import beta, truncnorm
from cskde.simulation import ScenarioConfig, generate_css

cfg = ScenarioConfig(n=10000, reps=1, x_family=beta(2, 2), q_family=truncnorm(0.5, 0.3),
                     master_seed=2024)
sample, hidden = generate_css(cfg, 0, with_truth=True)
print(f"{len(sample)} inspections, {sample.statuses.mean():.1%} found the event already done")

# status 0 pushes the time one window to the right
v = transform(sample)
print("transformed range:", v.values.min().round(3), "to", v.values.max().round(3))

q = analytic_density(cfg.q_family)
e = GEstimate(v, h=0.22)
Fhat = CdfEstimate(v, 0.16, q=q)

x = np.array([0.05, 0.25, 0.5, 0.75, 0.95])
rows = zip(x, cfg.x_family.pdf(x), f_minus(e, q, x), f_plus(e, q, x),
           f_final(e, q, x, Fhat=Fhat))
print(f"\n{'x':>5} {'true':>7} {'left':>7} {'right':>7} {'final':>7}")
for r in rows:
    print("{:5.2f} {:7.3f} {:7.3f} {:7.3f} {:7.3f}".format(*r))

# the left estimate degrades near 1, the right one near 0; the final
# estimate leans on whichever side has more information
print("\nCDF at the same points:", np.round(Fhat(x), 3))
print("true CDF:               ", np.round(cfg.x_family.cdf(x), 3))
