import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from cskde.bandwidth import (BandwidthFallbackWarning, BetaParams, MiseFunctionals,
                             MomentEstimates, TRIM, beta_mom, h_opt, mise_expansion,
                             mise_functionals, moment_estimates, reference_bandwidth,
                             rule_of_thumb)
from cskde.errors import BetaFitInfeasible, DegenerateBandwidth
from cskde.families import beta, truncnorm, uniform
from cskde.kernels import biweight
from cskde.observation import analytic_density, uniform_density
from cskde.simulation import ScenarioConfig, generate_css
from cskde.transform import transform

R1, MU2 = 15 / 7, 1 / 7


def _sample(n, seed, x=beta(2, 2), q=uniform()):
    cfg = ScenarioConfig(n=n, reps=1, x_family=x, q_family=q, master_seed=seed)
    return transform(generate_css(cfg, 0)).values


@pytest.mark.parametrize("a", [0.5, 1, 2, 5])
@pytest.mark.parametrize("b", [0.5, 1, 2, 5])
def test_beta_mom_round_trip(a, b):
    m = a / (a + b)
    v = a * b / ((a + b) ** 2 * (a + b + 1))
    p = beta_mom(MomentEstimates(m, v + m * m, v))
    assert p.alpha == pytest.approx(a, abs=1e-12)
    assert p.beta == pytest.approx(b, abs=1e-12)


def test_beta_mom_infeasible():
    with pytest.raises(BetaFitInfeasible):
        beta_mom(MomentEstimates(1.2, 1.5, 0.06))
    with pytest.raises(BetaFitInfeasible):
        beta_mom(MomentEstimates(0.5, 0.2, -0.05))
    with pytest.raises(BetaFitInfeasible):
        beta_mom(MomentEstimates(0.5, 0.55, 0.3))
    with pytest.raises(ValueError):
        BetaParams(-1, 2)


def test_moment_identities_by_quadrature():
    # E[V/qbar(V)] = E X + 1/2 and E[V^2/qbar(V)] = E X^2 + E X + 1/3
    fam, qf = beta(3, 2), truncnorm(0.4, 0.25)
    qd = analytic_density(qf)
    g = lambda v: float(qd.qbar(v) * (fam.cdf(v) - fam.cdf(v - 1)))
    m1 = sum(quad(lambda v: v * g(v) / float(qd.qbar(v)), lo, lo + 1)[0] for lo in (0, 1))
    m2 = sum(quad(lambda v: v * v * g(v) / float(qd.qbar(v)), lo, lo + 1)[0] for lo in (0, 1))
    ex, ex2 = fam.mean(), fam.var() + fam.mean() ** 2
    assert m1 == pytest.approx(ex + 0.5, abs=1e-9)
    assert m2 == pytest.approx(ex2 + ex + 1 / 3, abs=1e-9)


def test_moment_estimates_consistent():
    v = _sample(200000, 1, q=truncnorm(0.5, 0.3))
    m = moment_estimates(v, analytic_density(truncnorm(0.5, 0.3)).qbar)
    assert m.A == pytest.approx(0.5, abs=0.01)
    assert m.C == pytest.approx(0.05, abs=0.005)


@settings(max_examples=20, deadline=None)
@given(st.randoms(use_true_random=False))
def test_moment_estimates_permutation_invariant(rnd):
    v = np.linspace(0.01, 1.99, 101) ** 1.05 / 1.99 ** 0.05
    p = v.copy()
    rnd.shuffle(p)
    qb = uniform_density().qbar
    a, b = moment_estimates(v, qb), moment_estimates(p, qb)
    assert a.A == pytest.approx(b.A, abs=1e-14) and a.C == pytest.approx(b.C, abs=1e-14)


def test_moment_estimates_floor():
    qd = analytic_density(beta(2, 2))
    with pytest.raises(ValueError, match="indices"):
        moment_estimates(np.array([0.0, 0.5, 1.0]), lambda v: qd.q(v) * 0)


def test_functionals_beta22_uniform():
    f = mise_functionals(beta(2, 2), uniform_density())
    lo, hi = TRIM, 1 - TRIM
    F = lambda x: 3 * x * x - 2 * x ** 3
    assert f.bias_sq == pytest.approx(144 * (hi - lo), rel=1e-10)
    assert f.var == pytest.approx(quad(lambda x: F(x) * (1 - F(x)), lo, hi)[0], rel=1e-10)


def test_mise_expansion_hand_assembled():
    f = mise_functionals(beta(2, 2), uniform_density())
    n, h = 10000, 0.44
    hand = h ** 4 / 4 * MU2 ** 2 * f.bias_sq + R1 * f.var / (n * h ** 3)
    assert float(mise_expansion(h, f, n)) == pytest.approx(hand, rel=1e-10)
    assert float(mise_expansion(1e-4, f, n)) > 1e3


@pytest.mark.parametrize("fam,q", [(beta(2, 2), uniform()), (beta(3, 5), truncnorm(0.5, 0.3)),
                                   (beta(2, 2), truncnorm(0.5, 0.3))])
def test_h_opt_minimises_expansion(fam, q):
    f = mise_functionals(fam, analytic_density(q))
    n = 10000
    grid = np.exp(np.linspace(np.log(0.01), 0, 200))
    best = grid[np.argmin(mise_expansion(grid, f, n))]
    step = grid[1] / grid[0]
    h = h_opt(f, n)
    assert best / step <= h <= best * step
    assert h == pytest.approx((3 * R1 * f.var / (MU2 ** 2 * f.bias_sq)) ** (1 / 7)
                              * n ** (-1 / 7))


def test_h_opt_beta22_uniform_value():
    # closed-form minimiser for Beta(2,2) with uniform q at n = 1e4
    assert h_opt(mise_functionals(beta(2, 2), uniform_density()), 10000) == pytest.approx(
        0.2239, abs=5e-4)


def test_h_opt_with_htilde_minimises_corrected_expansion():
    qd = analytic_density(truncnorm(0.5, 0.3))
    f = mise_functionals(beta(2, 2), qd, with_q_correction=True)
    n, ht = 10000, 0.2
    h = h_opt(f, n, htilde=ht)
    grid = np.linspace(0.5 * h, 1.5 * h, 2001)
    assert grid[np.argmin(mise_expansion(grid, f, n, htilde=ht))] == pytest.approx(h, rel=1e-3)


def test_degenerate_bias():
    with pytest.raises(DegenerateBandwidth):
        h_opt(mise_functionals(uniform(), uniform_density()), 1000)
    with pytest.raises(DegenerateBandwidth):
        h_opt(MiseFunctionals(bias_sq=1.0, var=0.0), 1000)


def test_reference_bandwidth_audit_trail():
    v = _sample(100000, 4)
    rep = reference_bandwidth(v, uniform_density())
    assert rep.method == "beta-reference"
    assert rep.params.alpha == pytest.approx(2, abs=0.1)
    assert rep.params.beta == pytest.approx(2, abs=0.1)
    d = rep.as_dict()
    assert {"h", "alpha", "beta", "moments", "bias_integral", "variance_integral"} <= set(d)


def test_fallback_on_infeasible_fit():
    v = _sample(1000, 5)
    bogus = lambda x: 1e-3 * np.ones_like(x)  # mean estimate far outside (0, 1)

    class Q:
        mode, htilde = "analytic", None
        q = staticmethod(lambda x: np.ones_like(np.asarray(x, dtype=float)))
        qbar = staticmethod(bogus)

    with pytest.warns(BandwidthFallbackWarning):
        rep = reference_bandwidth(v, Q())
    assert rep.method == "rule-of-thumb"
    assert rep.h == pytest.approx(rule_of_thumb(v))
    with pytest.raises(BetaFitInfeasible):
        reference_bandwidth(v, Q(), fallback=False)


def test_rule_of_thumb():
    v = np.array([0.1, 0.5, 1.2, 1.8])
    assert rule_of_thumb(v) == pytest.approx(0.5 * np.std(v, ddof=1) * 4 ** (-1 / 7))
