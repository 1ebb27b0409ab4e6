import numpy as np
import pytest
import sympy as sp
from scipy import stats
from scipy.integrate import quad

from cskde.families import beta, parse_family, truncnorm, uniform

FAMILIES = [uniform(), beta(2, 2), beta(0.7, 3.5), beta(5, 1.5), truncnorm(0.5, 0.3),
            truncnorm(0.2, 0.15)]


@pytest.mark.parametrize("fam", FAMILIES, ids=str)
def test_pdf_integrates_to_one(fam):
    assert quad(lambda x: float(fam.pdf(x)), 0, 1, limit=200)[0] == pytest.approx(1, abs=1e-8)


@pytest.mark.parametrize("fam", FAMILIES, ids=str)
def test_cdf_matches_scipy(fam):
    x = np.linspace(0.01, 0.99, 50)
    if fam.kind == "uniform":
        ref = x
    elif fam.kind == "beta":
        ref = stats.beta(*fam.params).cdf(x)
    else:
        mu, s = fam.params
        ref = stats.truncnorm((0 - mu) / s, (1 - mu) / s, loc=mu, scale=s).cdf(x)
    np.testing.assert_allclose(fam.cdf(x), ref, atol=1e-12)
    assert fam.cdf(-0.5) == 0 and fam.cdf(1.5) == 1


@pytest.mark.parametrize("a,b", [(2, 2), (0.7, 3.5), (5, 1.5), (3, 4)])
def test_beta_derivatives_against_sympy(a, b):
    x = sp.symbols("x")
    dens = x ** (a - 1) * (1 - x) ** (b - 1) / sp.beta(a, b)
    fam = beta(a, b)
    pts = [0.2, 0.45, 0.8]
    for order in range(4):
        expr = sp.diff(dens, x, order)
        ref = [float(expr.subs(x, p).evalf(30)) for p in pts]
        np.testing.assert_allclose(fam.pdf(np.array(pts), order), ref, rtol=1e-10, atol=1e-12)


def test_truncnorm_derivatives_against_sympy():
    mu, s = 0.5, 0.3
    x = sp.symbols("x")
    fam = truncnorm(mu, s)
    mass = float(stats.norm.cdf((1 - mu) / s) - stats.norm.cdf(-mu / s))
    dens = sp.exp(-(x - mu) ** 2 / (2 * s * s)) / (sp.sqrt(2 * sp.pi) * s * mass)
    for order in range(4):
        expr = sp.diff(dens, x, order)
        for p in (0.1, 0.5, 0.77):
            assert float(fam.pdf(p, order)) == pytest.approx(float(expr.subs(x, p)), rel=1e-10)


@pytest.mark.parametrize("fam", FAMILIES, ids=str)
def test_mean_and_variance(fam):
    m = quad(lambda x: x * float(fam.pdf(x)), 0, 1, limit=200)[0]
    v = quad(lambda x: (x - m) ** 2 * float(fam.pdf(x)), 0, 1, limit=200)[0]
    assert fam.mean() == pytest.approx(m, abs=1e-9)
    assert fam.var() == pytest.approx(v, abs=1e-9)


def test_zero_outside_support():
    for fam in FAMILIES:
        assert float(fam.pdf(-0.1)) == 0 and float(fam.pdf(1.1)) == 0


def test_parse_family():
    assert parse_family("beta:2,2") == beta(2, 2)
    assert parse_family("truncnorm:0.5,0.3") == truncnorm(0.5, 0.3)
    assert parse_family("uniform") == uniform()
    assert str(beta(2, 2)) == "beta:2,2"
    for bad in ("beta:2", "gamma:1,1", "beta:x,1", "beta:-1,2", "truncnorm:0.5,0"):
        with pytest.raises(ValueError):
            parse_family(bad)
