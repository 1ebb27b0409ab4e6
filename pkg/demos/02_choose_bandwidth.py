"""Pick the density bandwidth from a fitted Beta reference.

The asymptotic MISE balances an h^4 bias term against a 1/(n h^3)
variance term; the minimiser scales like n^(-1/7).
"""

import numpy as np

from cskde import mise_expansion, mise_functionals, h_opt, reference_bandwidth, transform
from cskde.families import beta, truncnorm
from cskde.observation import analytic_density
from cskde.simulation import ScenarioConfig, generate_css

q = analytic_density(truncnorm(0.5, 0.3))
funcs = mise_functionals(beta(2, 2), q)
print(f"integrated squared bias term {funcs.bias_sq:.1f}, variance term {funcs.var:.4f}")

for n in (1000, 10000, 100000):
    print(f"n={n:>6}: oracle h = {h_opt(funcs, n):.4f}")

hs = np.linspace(0.05, 0.6, 12)
print("\nMISE(h) at n = 10000:")
for h, m in zip(hs, mise_expansion(hs, funcs, 10000)):
    print(f"  h={h:.2f}  {m:.5f}")

cfg = ScenarioConfig(n=10000, reps=1, x_family=beta(2, 2), q_family=truncnorm(0.5, 0.3),
                     master_seed=7)
v = transform(generate_css(cfg, 0)).values
rep = reference_bandwidth(v, q)
print(f"\ndata-driven: Beta({rep.params.alpha:.2f}, {rep.params.beta:.2f}) fit, h = {rep.h:.4f}")
