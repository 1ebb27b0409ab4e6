import warnings

import numpy as np
from scipy.integrate import trapezoid
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from cskde.cdf import CdfEstimate
from cskde.density import (GEstimate, TheoreticalExpansion, WideBandwidthWarning,
                           clip_and_renormalize, default_grid, expansion_bias, f_combined,
                           f_final, f_minus, f_plus, g_hat, g_hat_deriv, optimal_t)
from cskde.errors import DegenerateObservationDensity
from cskde.families import beta, truncnorm
from cskde.kernels import biweight
from cskde.observation import ObservationDensity, analytic_density, uniform_density
from cskde.pipeline import estimate_curves
from cskde.simulation import ScenarioConfig, generate_css
from cskde.transform import transform, true_g


@pytest.fixture(scope="module")
def sample():
    cfg = ScenarioConfig(n=3000, reps=1, x_family=beta(2, 2), q_family=truncnorm(0.5, 0.3),
                         master_seed=11)
    return transform(generate_css(cfg, 0)).values


def brute_force(v, x, h, q, q1):
    # loop formula, independent of the blocked kernel sums
    w = lambda u: 15 / 16 * (1 - u * u) ** 2 if abs(u) < 1 else 0.0
    dw = lambda u: -15 / 4 * u * (1 - u * u) if abs(u) < 1 else 0.0
    n = len(v)
    g = sum(w((x - vi) / h) for vi in v) / (n * h)
    dg = sum(dw((x - vi) / h) for vi in v) / (n * h * h)
    return dg / q - q1 * g / q ** 2


def test_left_right_against_brute_force(sample):
    qd = analytic_density(truncnorm(0.5, 0.3))
    e = GEstimate(sample, 0.2)
    for x in (0.1, 0.5, 0.83):
        q, q1 = float(qd.q(x)), float(qd.q1(x))
        assert float(f_minus(e, qd, x)) == pytest.approx(brute_force(sample, x, 0.2, q, q1),
                                                         rel=1e-11)
        shifted = -brute_force(sample, x + 1, 0.2, q, q1)
        assert float(f_plus(e, qd, x)) == pytest.approx(shifted, rel=1e-11)


def test_uniform_q_reduces_to_derivative_estimates(sample):
    e = GEstimate(sample, 0.15)
    x = default_grid()
    q1 = uniform_density()
    np.testing.assert_array_equal(f_minus(e, q1, x), g_hat_deriv(e, x))
    np.testing.assert_array_equal(f_plus(e, q1, x), -g_hat_deriv(e, x + 1))


def test_g_hat_integrates_to_one(sample):
    e = GEstimate(sample, 0.1)
    grid = np.linspace(-0.2, 2.2, 24001)
    assert trapezoid(g_hat(e, grid), grid) == pytest.approx(1, abs=1e-6)


def test_combined_and_final(sample):
    qd = analytic_density(truncnorm(0.5, 0.3))
    e = GEstimate(sample, 0.22)
    x = default_grid(41)
    fm, fp = f_minus(e, qd, x), f_plus(e, qd, x)
    np.testing.assert_allclose(f_combined(e, qd, x, 0.3), 0.3 * fm + 0.7 * fp, rtol=1e-14)
    Fh = CdfEstimate(sample, len(sample) ** -0.2, biweight(), qd)
    t = 1 - Fh(x)
    np.testing.assert_allclose(f_final(e, qd, x), t * fm + (1 - t) * fp, rtol=1e-14)
    clamped = f_final(e, qd, x, Fhat=lambda z: np.full(z.shape, 1.3), clamp=True)
    np.testing.assert_allclose(clamped, fp)
    assert optimal_t(0.25) == 0.75


def test_pipeline_matches_estimator_functions(sample):
    qd = analytic_density(truncnorm(0.5, 0.3))
    x = default_grid()
    cur = estimate_curves(sample, x, 0.22, 0.16, qd)
    e = GEstimate(sample, 0.22)
    c = CdfEstimate(sample, 0.16, biweight(), qd)
    np.testing.assert_array_equal(cur["f_minus"], f_minus(e, qd, x))
    np.testing.assert_array_equal(cur["f_plus"], f_plus(e, qd, x))
    np.testing.assert_array_equal(cur["f_final"], f_final(e, qd, x, Fhat=c))
    np.testing.assert_array_equal(cur["F_half"], c(x))


def test_domain_and_floor(sample):
    e = GEstimate(sample, 0.2)
    qd = analytic_density(truncnorm(0.5, 0.3))
    for bad in (0.0, 1.0, -0.2, 1.2):
        with pytest.raises(ValueError):
            f_minus(e, qd, bad)
    zero = ObservationDensity(q=lambda x: np.where(np.asarray(x) < 0.5, 0.0, 2.0),
                              q1=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                              q2=lambda x: np.zeros_like(np.asarray(x, dtype=float)))
    with pytest.raises(DegenerateObservationDensity) as info:
        f_plus(e, zero, np.array([0.25, 0.75]))
    assert info.value.x == pytest.approx(0.25)


def test_wide_bandwidth_warns(sample):
    with pytest.warns(WideBandwidthWarning):
        e = GEstimate(sample, 0.6)
    assert e.wide_bandwidth
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        GEstimate(sample, 0.3)


def test_bad_inputs():
    with pytest.raises(ValueError):
        GEstimate(np.array([]), 0.2)
    with pytest.raises(ValueError):
        GEstimate(np.array([0.1]), 0.0)


@settings(max_examples=25, deadline=None)
@given(st.randoms(use_true_random=False))
def test_permutation_invariance(rnd):
    v = np.linspace(0.01, 1.99, 200) ** 1.1
    perm = v.copy()
    rnd.shuffle(perm)
    x = np.array([0.2, 0.6])
    qd = uniform_density()
    np.testing.assert_array_equal(f_final(GEstimate(v, 0.2), qd, x, h2=0.2),
                                  f_final(GEstimate(perm, 0.2), qd, x, h2=0.2))


def test_clip_and_renormalize():
    x = np.linspace(0, 1, 101)
    y = clip_and_renormalize(x, np.sin(2 * np.pi * x))
    assert np.all(y >= 0)
    assert trapezoid(y, x) == pytest.approx(1)


# -- bias and variance constants -----------------------------------------------

def _sympy_bias(Fexpr, qexpr, x):
    g = Fexpr * qexpr
    r = (1 - Fexpr) * qexpr
    dq = sp.diff(qexpr, x)
    bm = sp.diff(g, x, 3) / qexpr - dq * sp.diff(g, x, 2) / qexpr ** 2
    bp = -(sp.diff(r, x, 3) / qexpr - dq * sp.diff(r, x, 2) / qexpr ** 2)
    return bm, bp


@pytest.mark.parametrize("q_kind", ["truncnorm", "beta"])
def test_bias_terms_against_sympy(q_kind):
    x = sp.symbols("x")
    Fexpr = 3 * x ** 2 - 2 * x ** 3  # Beta(2,2)
    if q_kind == "truncnorm":
        fam_q = truncnorm(0.5, 0.3)
        mass = float(fam_q._tn_mass())
        qexpr = sp.exp(-(x - sp.Rational(1, 2)) ** 2 / (2 * sp.Rational(9, 100))) / (
            sp.sqrt(2 * sp.pi) * sp.Rational(3, 10) * mass)
    else:
        fam_q = beta(2, 3)
        qexpr = 12 * x * (1 - x) ** 2
    bm, bp = _sympy_bias(Fexpr, qexpr, x)
    te = TheoreticalExpansion.from_family(beta(2, 2), analytic_density(fam_q))
    for p in (0.2, 0.5, 0.7):
        ref_m = float(bm.subs(x, p))
        ref_p = float(bp.subs(x, p))
        assert float(te.bias_bminus(p)) == pytest.approx(ref_m, rel=1e-9)
        assert float(te.bias_bplus(p)) == pytest.approx(ref_p, rel=1e-9)
        assert float(te.bminus_from_g(p)) == pytest.approx(ref_m, rel=1e-9)
        assert float(te.bplus_from_g(p)) == pytest.approx(ref_p, rel=1e-9)
        F = float(Fexpr.subs(x, p))
        assert float(te.reduced(p)) == pytest.approx((1 - F) * ref_m + F * ref_p, rel=1e-9)
        assert float(expansion_bias(te, p, 0.3)) == pytest.approx(0.3 * ref_m + 0.7 * ref_p,
                                                                  rel=1e-9)


def test_reduced_form_has_no_third_derivative():
    x = sp.symbols("x")
    F, q = sp.Function("F")(x), sp.Function("q")(x)
    bm, bp = _sympy_bias(F, q, x)
    combo = sp.simplify((1 - F) * bm + F * bp)
    f, f1, f2 = sp.diff(F, x), sp.diff(F, x, 2), sp.diff(F, x, 3)
    q1, q2 = sp.diff(q, x), sp.diff(q, x, 2)
    closed = (3 * q * q2 * f + 2 * q * q1 * f1 + q * q * f2 - 2 * q1 ** 2 * f) / q ** 2
    assert sp.simplify(combo - closed) == 0


def _exact_mean(te, fam, qd, x, h, t, k):
    # E of the combined estimator by quadrature of the kernel against true g
    q, q1 = float(qd.q(x)), float(qd.q1(x))
    g = lambda v: float(true_g(v, fam.cdf, qd))
    out = 0.0
    for c, s, wt in ((x, 1.0, t), (x + 1, -1.0, 1 - t)):
        dg = quad(lambda v: k.eval_deriv((c - v) / h) * g(v), c - h, c + h)[0] / h ** 2
        gg = quad(lambda v: k.eval((c - v) / h) * g(v), c - h, c + h)[0] / h
        out += wt * s * (dg / q - q1 * gg / q ** 2)
    return out


def test_expectation_expansion_is_second_order():
    fam = beta(2, 2)
    qd = analytic_density(truncnorm(0.5, 0.3))
    k = biweight()
    te = TheoreticalExpansion.from_family(fam, qd, k)
    x, t = 0.4, 0.35
    errs = []
    for h in (0.08, 0.04):
        exact = _exact_mean(te, fam, qd, x, h, t, k)
        errs.append(abs(exact - float(te.expectation(x, t, h))))
        # leading term explains the bias to within O(h^4)
        assert (exact - float(fam.pdf(x))) / h ** 2 == pytest.approx(
            0.5 * k.moment2 * float(expansion_bias(te, x, t)), rel=0.05)
    assert errs[0] / errs[1] > 10  # remainder shrinks like h^4


def test_variance_constants():
    fam = beta(2, 2)
    qd = analytic_density(truncnorm(0.5, 0.3))
    te = TheoreticalExpansion.from_family(fam, qd)
    x = 0.3
    F, q = float(fam.cdf(x)), float(qd.q(x))
    assert float(te.var_const_minus(x)) == pytest.approx(F * 15 / 7 / q)
    assert float(te.var_const_plus(x)) == pytest.approx((1 - F) * 15 / 7 / q)
    t = 1 - F
    assert float(te.var_const(x, t)) == pytest.approx(F * (1 - F) * 15 / 7 / q)
    # 1 - F minimises t^2 F + (1 - t)^2 (1 - F)
    ts = np.linspace(0, 1, 1001)
    assert ts[np.argmin([float(te.var_const(x, s)) for s in ts])] == pytest.approx(t, abs=1e-3)
    assert float(te.cdf_variance(x, 0.5, 100, 0.1)) == pytest.approx(
        0.25 * 5 / 7 / (q * 100 * 0.1))
