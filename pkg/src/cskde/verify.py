"""Monte Carlo and numerical checks of the estimators' stated properties.

Each check returns a :class:`CheckResult` holding one :class:`Criterion` per
gated comparison (observed value, prediction, tolerance and, where the
observation is random, a Monte Carlo standard error).  Reports contain no
timings or host details, so the JSON bytes depend only on the configuration
and seed.

Two profiles exist.  ``"full"`` uses the acceptance sample sizes;
``"quick"`` shrinks every check to ``n = 2000`` and at most 200
replications.  Quick runs keep the full tolerances, so statistical checks
that need large samples can fail there; the profile exists for smoke tests
and determinism checks.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, stats

from .bandwidth import h_opt, mise_expansion, mise_functionals, moment_estimates, beta_mom
from .bandwidth import reference_bandwidth
from .density import TheoreticalExpansion, default_grid
from .families import Family, beta, truncnorm, uniform
from .io import dumps_json
from .kernels import biweight, kernel_functionals
from .observation import analytic_density, uniform_density
from .pipeline import KernelSummer, estimate_curves
from .qestimate import estimated_observation_density
from .simulation import (ScenarioConfig, build_warp_grid, generate_css, replicate,
                         run_scenario, warp_g_hat, warp_g_hat_deriv)
from .transform import transform, true_g

__all__ = [
    "Criterion",
    "CheckResult",
    "VerificationReport",
    "VerifyConfig",
    "CHECKS",
    "PROFILES",
    "verify_theorem",
    "verify_all",
]

VAR_TOL = 0.15
SKEW_MAX = 0.25
KURT_MAX = 0.5
BIAS_RATIO = (3.0, 5.0)
KS_FACTOR = 1.5 * 1.63
BETA_H_RANGE = (0.42, 0.46)
BETA_PARAM_TOL = 0.1
ISE_WIN_FRAC = 0.8
ISE_MEDIAN_MAX = 0.02
UNKNOWN_Q_SUP = 0.1
UNKNOWN_Q_FRAC = 0.9
WARP_REL = 0.01
WARP_HALVING = 3.5
FUNCTIONAL_TOL = 1e-10


@dataclass(frozen=True)
class Criterion:
    """One gated comparison.

    ``kind`` says how ``observed`` is judged: ``"rel"`` (relative error to
    ``predicted`` within ``tolerance``), ``"abs"`` (absolute error),
    ``"max"`` (observed at most ``tolerance``), ``"min"`` (at least),
    ``"range"`` (inside ``tolerance = [lo, hi]``) or ``"true"``.
    """

    label: str
    observed: object
    predicted: object
    tolerance: object
    kind: str
    passed: bool
    se: Optional[float] = None
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {"label": self.label, "observed": self.observed, "predicted": self.predicted,
             "tolerance": self.tolerance, "kind": self.kind, "passed": self.passed}
        if self.se is not None:
            d["se"] = self.se
        if self.detail:
            d["detail"] = self.detail
        return d


def _crit(label, observed, predicted, tolerance, kind, se=None, **detail) -> Criterion:
    if isinstance(observed, (bool, np.bool_)):
        obs = bool(observed)
    elif isinstance(observed, (float, np.floating, int, np.integer)):
        obs = float(observed)
    else:
        obs = observed
    if kind == "rel":
        ok = abs(obs / predicted - 1.0) <= tolerance
    elif kind == "abs":
        ok = abs(obs - predicted) <= tolerance
    elif kind == "max":
        ok = obs <= tolerance
    elif kind == "min":
        ok = obs >= tolerance
    elif kind == "range":
        ok = tolerance[0] <= obs <= tolerance[1]
    elif kind == "true":
        ok = bool(obs)
    else:
        raise ValueError(kind)
    return Criterion(label, obs, predicted, tolerance, kind, bool(ok),
                     None if se is None else float(se), detail)


@dataclass(frozen=True)
class CheckResult:
    name: str
    params: dict
    criteria: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "params": self.params,
                "criteria": [c.as_dict() for c in self.criteria]}


@dataclass(frozen=True)
class VerificationReport:
    profile: str
    master_seed: int
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {"profile": self.profile, "master_seed": self.master_seed,
                "passed": self.passed, "checks": [c.as_dict() for c in self.checks]}

    def to_json(self) -> str:
        return dumps_json(self.as_dict())


@dataclass(frozen=True)
class VerifyConfig:
    """Profile, seed and optional overrides of ``n`` and replication count.

    ``workers`` only changes wall-clock time, never the report.
    """

    profile: str = "full"
    master_seed: int = 0
    n: Optional[int] = None
    reps: Optional[int] = None
    workers: Optional[int] = None

    def params(self, name: str) -> dict:
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")
        p = dict(PROFILES[self.profile][name])
        if self.n is not None and "n" in p:
            p["n"] = int(self.n)
        if self.reps is not None and "reps" in p:
            p["reps"] = int(self.reps)
        return p

    def seed_for(self, name: str) -> int:
        ss = np.random.SeedSequence([int(self.master_seed), zlib.crc32(name.encode())])
        return int(ss.generate_state(1, np.uint64)[0])


# -- helpers -----------------------------------------------------------------

def _var_se(v, m):
    # normal-theory standard error of a sample variance
    return v * np.sqrt(2.0 / (m - 1))


def _exact_variance(x_family: Family, qd, x, h, n, t, kernel):
    """Finite-sample variance of ``t f_minus + (1 - t) f_plus`` by quadrature."""
    q, q1 = float(qd.q(np.array(x))), float(qd.q1(np.array(x)))

    def g(v):
        return float(true_g(np.array(v), x_family.cdf, qd))

    def z(v, centre, sign):
        u = (centre - v) / h
        return sign * (kernel.eval_deriv(u) / (h * h * q) - q1 * kernel.eval(u) / (h * q * q))

    m1 = m2 = 0.0
    for centre, sign, wt in ((x, 1.0, t), (x + 1.0, -1.0, 1.0 - t)):
        if wt == 0.0:
            continue
        lo, hi = centre - h, centre + h
        m1 += wt * integrate.quad(lambda v: z(v, centre, sign) * g(v), lo, hi, limit=200)[0]
        m2 += wt * wt * integrate.quad(lambda v: z(v, centre, sign) ** 2 * g(v), lo, hi,
                                       limit=200)[0]
    # windows are disjoint for h < 1/2, so no cross moment enters m2
    return (m2 - m1 * m1) / n


def _scenario(n, reps, seed, x_family, q_family, **kw) -> ScenarioConfig:
    return ScenarioConfig(n=n, reps=reps, x_family=x_family, q_family=q_family,
                          master_seed=seed, **kw)


# -- checks ------------------------------------------------------------------

def check_kernel_functionals(p, cfg: VerifyConfig):
    k = biweight()
    quad = kernel_functionals((k.eval, k.eval_deriv))
    out = []
    for name, stored, num in zip(("moment2", "sq_norm", "deriv_sq_norm"),
                                 (k.moment2, k.sq_norm, k.deriv_sq_norm), quad):
        out.append(_crit(name, num, stored, FUNCTIONAL_TOL, "abs"))
    return out


def check_transform_law(p, cfg: VerifyConfig):
    n = p["n"]
    sc = _scenario(n, 1, cfg.seed_for("transform-law"), beta(2, 2), truncnorm(0.5, 0.3))
    v = np.sort(transform(generate_css(sc, 0)).values)
    qd = analytic_density(sc.q_family)
    grid = np.linspace(0.0, 2.0, 400001)
    dens = true_g(grid, sc.x_family.cdf, qd)
    G = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    Gv = np.interp(v, grid, G)
    i = np.arange(1, n + 1)
    ks = float(max(np.max(i / n - Gv), np.max(Gv - (i - 1) / n)))
    return [_crit("ks_distance", ks, 0.0, KS_FACTOR / np.sqrt(n), "max",
                  total_mass=float(G[-1]))]


def check_uniform_reduction(p, cfg: VerifyConfig):
    sc = _scenario(p["n"], 1, cfg.seed_for("uniform-reduction"), beta(2, 2), uniform())
    v = transform(generate_css(sc, 0)).values
    x = default_grid()
    h = p["h"]
    k = biweight()
    cur = estimate_curves(v, x, h, h, uniform_density(), k)
    summer = KernelSummer(v, k)
    _, dg = summer(x, h)
    _, dgr = summer(x + 1.0, h)
    scale = float(np.max(np.abs(dg)))
    dm = float(np.max(np.abs(cur["f_minus"] - dg))) / scale
    dp = float(np.max(np.abs(cur["f_plus"] + dgr))) / scale
    eps = 4 * np.finfo(float).eps
    return [_crit("f_minus_equals_g_deriv", dm, 0.0, eps, "max"),
            _crit("f_plus_equals_minus_g_deriv_shifted", dp, 0.0, eps, "max")]


def _left_right_replicates(sc: ScenarioConfig, x, h, qd, kernel, workers):
    q, q1 = qd.q(x), qd.q1(x)

    def job(rep):
        v = transform(generate_css(sc, rep)).values
        s = KernelSummer(v, kernel)
        g, dg = s(x, h)
        gr, dgr = s(x + 1.0, h)
        fm = dg / q - q1 * g / (q * q)
        fp = -(dgr / q - q1 * gr / (q * q))
        return fm, fp

    res = replicate(job, sc.reps, workers)
    return np.array([r[0] for r in res]), np.array([r[1] for r in res])


def check_thm_variance(p, cfg: VerifyConfig):
    n, M, h = p["n"], p["reps"], p["h"]
    xs = np.array(p["x"])
    k = biweight()
    sc = _scenario(n, M, cfg.seed_for("thm-variance"), beta(2, 2), uniform())
    qd = uniform_density()
    te = TheoreticalExpansion.from_family(sc.x_family, qd, k)
    fm, fp = _left_right_replicates(sc, xs, h, qd, k, cfg.workers)
    scale = n * h ** 3
    F = sc.x_family.cdf(xs)
    out = []
    for j, x in enumerate(xs):
        for t_label, t in (("t=1", 1.0), ("t=0", 0.0), ("t=0.3", 0.3),
                           ("t=1-F", float(1.0 - F[j]))):
            est = t * fm[:, j] + (1.0 - t) * fp[:, j]
            v = float(np.var(est, ddof=1))
            pred = float(te.var_const(x, t))
            exact = _exact_variance(sc.x_family, qd, float(x), h, n, t, k) * scale
            name = {"t=1": "f_minus", "t=0": "f_plus"}.get(t_label, f"combined {t_label}")
            out.append(_crit(f"nh3_var {name} x={x:g}", v * scale, pred, VAR_TOL, "rel",
                             se=_var_se(v, M) * scale, t=t, finite_sample_exact=exact))
    return out


def check_thm_bias(p, cfg: VerifyConfig):
    n, M, h, x = p["n"], p["reps"], p["h"], p["x"]
    k = biweight()
    sc = _scenario(n, M, cfg.seed_for("thm-bias"), beta(2, 2), uniform())
    qd = uniform_density()
    te = TheoreticalExpansion.from_family(sc.x_family, qd, k)
    xs = np.array([x])
    t = float(1.0 - sc.x_family.cdf(x))
    f = float(sc.x_family.pdf(x))
    # same samples at both bandwidths (common random numbers)
    a_m, a_p = _left_right_replicates(sc, xs, h, qd, k, cfg.workers)
    b_m, b_p = _left_right_replicates(sc, xs, h / 2, qd, k, cfg.workers)
    d1 = (t * a_m + (1 - t) * a_p)[:, 0] - f
    d2 = (t * b_m + (1 - t) * b_p)[:, 0] - f
    r = float(d1.mean() / d2.mean())
    se = float(np.std(d1 - r * d2, ddof=1) / np.sqrt(M) / abs(d2.mean()))
    theory = [float(te.expectation(x, t, hh) - f) for hh in (h, h / 2)]
    return [_crit("bias_ratio h/(h/2)", r, 4.0, list(BIAS_RATIO), "range", se=se,
                  bias_h=float(d1.mean()), bias_half=float(d2.mean()),
                  theory_bias_h=theory[0], theory_bias_half=theory[1])]


def _moments_criteria(label, z):
    z = np.asarray(z, dtype=float)
    sk = float(stats.skew(z))
    ku = float(stats.kurtosis(z))
    m = z.size
    return [
        _crit(f"|skewness| {label}", abs(sk), 0.0, SKEW_MAX, "max", se=np.sqrt(6.0 / m)),
        _crit(f"|excess kurtosis| {label}", abs(ku), 0.0, KURT_MAX, "max",
              se=np.sqrt(24.0 / m)),
    ]


def check_thm_normality(p, cfg: VerifyConfig):
    n, M = p["n"], p["reps"]
    h = n ** -0.2
    xs = np.array(p["x"])
    k = biweight()
    sc = _scenario(n, M, cfg.seed_for("thm-normality"), beta(2, 2), truncnorm(0.5, 0.3),
                   h1=h, h2=h, x_grid=xs, estimate_q=True)
    qd = analytic_density(sc.q_family)
    te = TheoreticalExpansion.from_family(sc.x_family, qd, k)
    F = sc.x_family.cdf(xs)
    finals, unknown = _stack(sc, k, cfg.workers)
    out = []
    scale = n * h ** 3
    for j, x in enumerate(xs):
        v = float(np.var(finals[:, j], ddof=1))
        pred = float(te.var_const(x, 1.0 - F[j]))
        exact = _exact_variance(sc.x_family, qd, float(x), h, n, float(1.0 - F[j]), k) * scale
        out.append(_crit(f"nh3_var f_final x={x:g}", v * scale, pred, VAR_TOL, "rel",
                         se=_var_se(v, M) * scale, finite_sample_exact_fixed_t=exact))
    for j, x in enumerate(xs):
        out += _moments_criteria(f"f_final x={x:g}", finals[:, j])
    for j, x in enumerate(xs):
        out += _moments_criteria(f"f_final_unknown_q x={x:g}", unknown[:, j])
    return out


def _stack(sc: ScenarioConfig, kernel, workers):
    def job(rep):
        s = generate_css(sc, rep)
        qs = [analytic_density(sc.q_family),
              estimated_observation_density(s.times, sc.htilde, kernel)]
        r = estimate_curves(transform(s).values, sc.x_grid, sc.h1, sc.h2, qs, kernel)
        return r[0]["f_final"], r[1]["f_final"]

    res = replicate(job, sc.reps, workers)
    return np.array([r[0] for r in res]), np.array([r[1] for r in res])


def check_thm_cdf(p, cfg: VerifyConfig):
    M, x = p["reps"], p["x"]
    k = biweight()
    qd = analytic_density(truncnorm(0.5, 0.3))
    te = TheoreticalExpansion.from_family(beta(2, 2), qd, k)
    xs = np.array([x])
    F = float(beta(2, 2).cdf(x))
    out = []
    mses = []
    for n in p["n_sequence"]:
        h2 = n ** -0.2
        sc = _scenario(n, M, cfg.seed_for(f"thm-cdf-{n}"), beta(2, 2), truncnorm(0.5, 0.3))

        def job(rep, sc=sc, h2=h2):
            v = transform(generate_css(sc, rep)).values
            s = KernelSummer(v, k)
            g = s.level(xs, h2)
            gr = s.level(xs + 1.0, h2)
            qx = qd.q(xs)
            return float((0.5 * (g / qx) + 0.5 * (1.0 - gr / qx))[0])

        est = np.array(replicate(job, M, cfg.workers))
        mses.append(float(np.mean((est - F) ** 2)))
        if n == p["n"]:
            v = float(np.var(est, ddof=1))
            pred = float(te.cdf_variance(x, 0.5, 1, 1.0))
            out.append(_crit(f"nh_var F_half x={x:g} n={n}", v * n * h2, pred, VAR_TOL, "rel",
                             se=_var_se(v, M) * n * h2))
    dec = all(a > b for a, b in zip(mses, mses[1:]))
    out.append(_crit("mse strictly decreasing in n", dec, True, None, "true",
                     n=list(p["n_sequence"]), mse=mses))
    return out


def check_beta_reference(p, cfg: VerifyConfig):
    k = biweight()
    qd = uniform_density()
    sc = _scenario(p["n"], 1, cfg.seed_for("beta-reference"), beta(2, 2), uniform())
    v = transform(generate_css(sc, 0)).to_unit().values
    rep = reference_bandwidth(v, qd, k)
    n = p["n"]
    funcs = mise_functionals(beta(2, 2), qd, k)
    grid = np.exp(np.linspace(np.log(0.01), 0.0, 200))
    grid_min = float(grid[np.argmin(mise_expansion(grid, funcs, n, k))])
    out = [_crit(f"selected h n={n}", rep.h, 32.0 ** (1 / 7) * n ** (-1 / 7),
                 list(BETA_H_RANGE), "range", method=rep.method,
                 alpha=rep.params.alpha if rep.params else None,
                 beta=rep.params.beta if rep.params else None,
                 true_beta_h_opt=h_opt(funcs, n, k), mise_grid_argmin=grid_min)]
    sc2 = _scenario(p["n_params"], 1, cfg.seed_for("beta-reference-params"), beta(2, 2),
                    uniform())
    v2 = transform(generate_css(sc2, 0)).to_unit().values
    bp = beta_mom(moment_estimates(v2, qd.qbar))
    out.append(_crit(f"alpha_hat n={p['n_params']}", bp.alpha, 2.0, BETA_PARAM_TOL, "abs"))
    out.append(_crit(f"beta_hat n={p['n_params']}", bp.beta, 2.0, BETA_PARAM_TOL, "abs"))
    return out


def check_ise_dominance(p, cfg: VerifyConfig):
    sc = _scenario(p["n"], p["reps"], cfg.seed_for("ise-dominance"), beta(2, 2),
                   truncnorm(0.5, 0.3), h1=0.22, h2=0.16)
    rep = run_scenario(sc, biweight(), cfg.workers)
    fi, fm, fp = rep.ise["f_final"], rep.ise["f_minus"], rep.ise["f_plus"]
    win = float(np.mean((fi < fm) & (fi < fp)))
    return [
        _crit("fraction ISE(f_final) < ISE(f_minus), ISE(f_plus)", win, None, ISE_WIN_FRAC,
              "min", failures=len(rep.failures)),
        _crit("median ISE(f_final)", float(np.median(fi)), None, ISE_MEDIAN_MAX, "max",
              median_ise_f_minus=float(np.median(fm)), median_ise_f_plus=float(np.median(fp))),
    ]


def check_thm_unknown_q(p, cfg: VerifyConfig):
    x = default_grid()
    x = x[(x >= 0.1) & (x <= 0.9)]
    sc = _scenario(p["n"], p["reps"], cfg.seed_for("thm-unknown-q"), beta(2, 2),
                   truncnorm(0.5, 0.3), h1=0.22, h2=0.16, x_grid=x)
    known, est = _stack(sc, biweight(), cfg.workers)
    sup = np.max(np.abs(est - known), axis=1)
    frac = float(np.mean(sup < UNKNOWN_Q_SUP))
    return [_crit(f"fraction sup|f_unknown_q - f_known_q| < {UNKNOWN_Q_SUP:g}", frac, None,
                  UNKNOWN_Q_FRAC, "min", median_sup=float(np.median(sup)),
                  max_sup=float(np.max(sup)))]


def check_warp(p, cfg: VerifyConfig):
    k = biweight()
    h = p["h"]
    sc = _scenario(p["n"], 1, cfg.seed_for("warp"), beta(2, 2), uniform())
    v = transform(generate_css(sc, 0)).values
    x = np.concatenate([default_grid(), default_grid() + 1.0])
    s = KernelSummer(v, k)
    direct, direct_d = s(x, h)
    errs, errs_d = [], []
    for factor in (20, 40):
        grid = build_warp_grid(v, h / factor)
        errs.append(float(np.max(np.abs(warp_g_hat(grid, k, h, x) - direct))))
        errs_d.append(float(np.max(np.abs(warp_g_hat_deriv(grid, k, h, x) - direct_d))))
    xg = default_grid()
    fd = estimate_curves(v, xg, h, h, uniform_density(), k)["f_final"]
    fw = estimate_curves(v, xg, h, h, uniform_density(), k, engine="warp")["f_final"]
    dmax = float(np.max(np.abs(direct)))
    return [
        _crit("max|warp g - direct g| / max g (bin h/20)", errs[0] / dmax, 0.0, WARP_REL, "max"),
        _crit("max|warp f_final - direct| / max f_final (bin h/20)",
              float(np.max(np.abs(fw - fd)) / np.max(np.abs(fd))), 0.0, WARP_REL, "max"),
        _crit("g error ratio bin h/20 vs h/40", errs[0] / errs[1], None, WARP_HALVING, "min",
              deriv_error_ratio=errs_d[0] / errs_d[1],
              deriv_rel_error_h20=errs_d[0] / float(np.max(np.abs(direct_d)))),
    ]


CHECKS: dict = {
    "kernel-functionals": check_kernel_functionals,
    "transform-law": check_transform_law,
    "uniform-reduction": check_uniform_reduction,
    "thm-variance": check_thm_variance,
    "thm-bias": check_thm_bias,
    "thm-normality": check_thm_normality,
    "thm-cdf": check_thm_cdf,
    "beta-reference": check_beta_reference,
    "ise-dominance": check_ise_dominance,
    "thm-unknown-q": check_thm_unknown_q,
    "warp": check_warp,
}

_FULL = {
    "kernel-functionals": {},
    "transform-law": {"n": 100000},
    "uniform-reduction": {"n": 10000, "h": 0.2},
    "thm-variance": {"n": 10000, "reps": 1000, "h": 0.2, "x": [0.25, 0.5, 0.75]},
    "thm-bias": {"n": 100000, "reps": 500, "h": 0.3, "x": 0.5},
    "thm-normality": {"n": 10000, "reps": 1000, "x": [0.25, 0.5, 0.75]},
    "thm-cdf": {"n": 10000, "reps": 1000, "x": 0.5, "n_sequence": [1000, 10000, 100000]},
    "beta-reference": {"n": 10000, "n_params": 100000},
    "ise-dominance": {"n": 10000, "reps": 50},
    "thm-unknown-q": {"n": 100000, "reps": 100},
    "warp": {"n": 10000, "h": 0.22},
}

_QUICK = {
    "kernel-functionals": {},
    "transform-law": {"n": 2000},
    "uniform-reduction": {"n": 2000, "h": 0.2},
    "thm-variance": {"n": 2000, "reps": 200, "h": 0.2, "x": [0.25, 0.5, 0.75]},
    "thm-bias": {"n": 2000, "reps": 200, "h": 0.3, "x": 0.5},
    "thm-normality": {"n": 2000, "reps": 200, "x": [0.25, 0.5, 0.75]},
    "thm-cdf": {"n": 2000, "reps": 200, "x": 0.5, "n_sequence": [200, 2000, 20000]},
    "beta-reference": {"n": 2000, "n_params": 20000},
    "ise-dominance": {"n": 2000, "reps": 50},
    "thm-unknown-q": {"n": 2000, "reps": 50},
    "warp": {"n": 2000, "h": 0.22},
}

PROFILES = {"full": _FULL, "quick": _QUICK}


def verify_theorem(name: str, cfg: Optional[VerifyConfig] = None) -> CheckResult:
    """Run one named check.

    Raises
    ------
    KeyError
        For an unknown check name.
    """
    cfg = cfg or VerifyConfig()
    if name not in CHECKS:
        raise KeyError(f"unknown check {name!r}; choose from {', '.join(CHECKS)}")
    p = cfg.params(name)
    crits = CHECKS[name](p, cfg)
    return CheckResult(name, p, tuple(crits))


def verify_all(cfg: Optional[VerifyConfig] = None, names=None,
               progress: Optional[Callable[[CheckResult], None]] = None) -> VerificationReport:
    """Run ``names`` (default: every check) in a fixed order."""
    cfg = cfg or VerifyConfig()
    results = []
    for name in names or list(CHECKS):
        r = verify_theorem(name, cfg)
        if progress is not None:
            progress(r)
        results.append(r)
    return VerificationReport(cfg.profile, int(cfg.master_seed), tuple(results))
