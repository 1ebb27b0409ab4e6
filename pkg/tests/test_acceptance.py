"""Acceptance criteria at full scale.

Each test prints one PASS/FAIL line and attaches it to the report so the
terminal summary lists every criterion.  Predictions are recomputed here
from closed forms and scipy distributions, not read from the report.
"""

import functools
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy import stats

from cskde.verify import VerifyConfig, verify_theorem

pytestmark = pytest.mark.slow

SEED = 0
R, R1, MU2 = 5 / 7, 15 / 7, 1 / 7
TN = stats.truncnorm(-0.5 / 0.3, 0.5 / 0.3, loc=0.5, scale=0.3)


def F22(x):
    return 3 * x * x - 2 * x ** 3


@functools.lru_cache(maxsize=None)
def check(name):
    return verify_theorem(name, VerifyConfig(profile="full", master_seed=SEED))


def crit(name, label):
    (c,) = [c for c in check(name).criteria if c.label == label]
    return c


def report(record_property, number, title, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'} {title}: {detail}"
    print(line)
    record_property("acceptance", line)
    return ok


def test_c01_kernel_functionals(record_property):
    errs = {lab: abs(crit("kernel-functionals", lab).observed - val)
            for lab, val in (("moment2", 1 / 7), ("sq_norm", 5 / 7), ("deriv_sq_norm", 15 / 7))}
    ok = max(errs.values()) <= 1e-10
    assert report(record_property, 1, "kernel functionals", ok,
                  f"max |quadrature - closed form| = {max(errs.values()):.2e} (tol 1e-10)")


def test_c02_transformation_law(record_property):
    c = crit("transform-law", "ks_distance")
    tol = 1.5 * 1.63 / np.sqrt(100000)
    ok = c.observed < tol
    assert report(record_property, 2, "transformation law", ok,
                  f"KS = {c.observed:.5f} (tol {tol:.5f})")


def test_c03_uniform_reduction(record_property):
    a = crit("uniform-reduction", "f_minus_equals_g_deriv").observed
    b = crit("uniform-reduction", "f_plus_equals_minus_g_deriv_shifted").observed
    ok = max(a, b) <= 4 * np.finfo(float).eps
    assert report(record_property, 3, "uniform-deconvolution reduction", ok,
                  f"max relative deviation {max(a, b):.1e}")


def test_c04_variance_law(record_property):
    bad, worst = [], 0.0
    for x in (0.25, 0.5, 0.75):
        F = F22(x)
        for name, t in (("f_minus", 1.0), ("f_plus", 0.0), ("combined t=0.3", 0.3),
                        ("combined t=1-F", 1 - F)):
            pred = (t * t * F + (1 - t) ** 2 * (1 - F)) * R1
            obs = crit("thm-variance", f"nh3_var {name} x={x:g}").observed
            dev = obs / pred - 1
            worst = max(worst, abs(dev))
            if abs(dev) > 0.15:
                bad.append(f"{name} x={x:g} ratio {obs / pred:.3f}")
    assert report(record_property, 4, "variance law", not bad,
                  f"worst |ratio - 1| = {worst:.3f} (tol 0.15)"
                  + (f"; out of tolerance: {', '.join(bad)}" if bad else ""))


def test_c05_bias_order(record_property):
    c = crit("thm-bias", "bias_ratio h/(h/2)")
    ok = 3 <= c.observed <= 5
    assert report(record_property, 5, "bias order h^2", ok,
                  f"bias(h)/bias(h/2) = {c.observed:.3f} +- {c.se:.3f} (range [3, 5])")


def test_c06_optimal_weight_variance(record_property):
    bad, worst = [], 0.0
    for x in (0.25, 0.5, 0.75):
        F = F22(x)
        pred = F * (1 - F) * R1 / TN.pdf(x)
        obs = crit("thm-normality", f"nh3_var f_final x={x:g}").observed
        worst = max(worst, abs(obs / pred - 1))
        if abs(obs / pred - 1) > 0.15:
            bad.append(f"x={x:g} ratio {obs / pred:.3f}")
    assert report(record_property, 6, "optimal-weight variance", not bad,
                  f"worst |ratio - 1| = {worst:.3f} (tol 0.15)"
                  + (f"; out of tolerance: {', '.join(bad)}" if bad else ""))


def test_c07_asymptotic_normality(record_property):
    sk = [c.observed for c in check("thm-normality").criteria if c.label.startswith("|skew")]
    ku = [c.observed for c in check("thm-normality").criteria if c.label.startswith("|excess")]
    ok = max(sk) < 0.25 and max(ku) < 0.5
    assert report(record_property, 7, "asymptotic normality", ok,
                  f"max |skewness| {max(sk):.3f} (< 0.25), max |excess kurtosis| "
                  f"{max(ku):.3f} (< 0.5), known and estimated q")


def test_c08_cdf_estimator(record_property):
    pred = (0.25 * F22(0.5) + 0.25 * (1 - F22(0.5))) * R / TN.pdf(0.5)
    obs = crit("thm-cdf", "nh_var F_half x=0.5 n=10000").observed
    mono = crit("thm-cdf", "mse strictly decreasing in n")
    mse = mono.detail["mse"]
    ok = abs(obs / pred - 1) <= 0.15 and all(a > b for a, b in zip(mse, mse[1:]))
    assert report(record_property, 8, "CDF estimator", ok,
                  f"nh Var ratio {obs / pred:.3f} (tol 0.15); MSE over n=1e3,1e4,1e5: "
                  + ", ".join(f"{m:.2e}" for m in mse))


def test_c09_beta_reference_bandwidth(record_property):
    h = crit("beta-reference", "selected h n=10000")
    a = crit("beta-reference", "alpha_hat n=100000").observed
    b = crit("beta-reference", "beta_hat n=100000").observed
    h_ok = 0.42 <= h.observed <= 0.46
    ab_ok = abs(a - 2) <= 0.1 and abs(b - 2) <= 0.1
    assert report(record_property, 9, "Beta-reference bandwidth", h_ok and ab_ok,
                  f"h = {h.observed:.4f} (range [0.42, 0.46]; MISE minimiser for the true "
                  f"Beta(2,2) is {h.detail['true_beta_h_opt']:.4f}); alpha_hat {a:.3f}, "
                  f"beta_hat {b:.3f} (2 +- 0.1)")


def test_c10_section5_ise(record_property):
    win = crit("ise-dominance", "fraction ISE(f_final) < ISE(f_minus), ISE(f_plus)").observed
    med = crit("ise-dominance", "median ISE(f_final)").observed
    ok = win >= 0.8 and med < 0.02
    assert report(record_property, 10, "ISE dominance", ok,
                  f"final beats both in {win:.0%} of runs (>= 80%), median ISE {med:.4f} "
                  "(< 0.02)")


def test_c11_unknown_q(record_property):
    c = crit("thm-unknown-q", "fraction sup|f_unknown_q - f_known_q| < 0.1")
    ok = c.observed >= 0.9
    assert report(record_property, 11, "unknown-q agreement", ok,
                  f"{c.observed:.0%} of runs with sup difference < 0.1 (>= 90%), "
                  f"median sup {c.detail['median_sup']:.4f}")


def test_c12_warp(record_property):
    g = crit("warp", "max|warp g - direct g| / max g (bin h/20)").observed
    f = crit("warp", "max|warp f_final - direct| / max f_final (bin h/20)").observed
    r = crit("warp", "g error ratio bin h/20 vs h/40").observed
    ok = max(g, f) <= 0.01 and r >= 3.5
    assert report(record_property, 12, "WARPing fidelity", ok,
                  f"relative max error g {g:.1e}, f_final {f:.1e} (<= 1%); halving ratio "
                  f"{r:.2f} (>= 3.5)")


def test_c13_determinism(record_property, tmp_path):
    outs = []
    for threads in ("1", "4"):
        path = tmp_path / f"r{threads}.json"
        env = dict(os.environ, CSKDE_THREADS=threads)
        r = subprocess.run([sys.executable, "-m", "cskde", "verify", "all", "--profile",
                            "quick", "--seed", "0", "--out", str(path)],
                           env=env, capture_output=True, text=True)
        assert r.returncode in (0, 3), r.stderr
        outs.append(path.read_bytes())
    ok = outs[0] == outs[1]
    assert report(record_property, 13, "determinism", ok,
                  f"quick-profile reports with CSKDE_THREADS=1 and 4 identical: {ok} "
                  f"({len(outs[0])} bytes)")
