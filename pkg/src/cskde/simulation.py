"""Samplers, seeded replications and the Monte Carlo scenario driver.

Every random draw comes from a generator keyed by
``(master_seed, rep_index, stream_label)``, so a replication produces the
same numbers no matter which worker runs it or in what order.
"""

from __future__ import annotations

import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid

from .bandwidth import BetaParams
from .density import TheoreticalExpansion, default_grid
from .errors import CSKDEError
from .families import Family, beta, parse_family, truncnorm
from .kernels import Kernel, biweight
from .observation import analytic_density
from ._kernelsum import kernel_sums
from .pipeline import WarpGrid, build_warp_grid, estimate_curves
from .qestimate import estimated_observation_density
from .transform import CurrentStatusSample, transform

__all__ = [
    "rng_for",
    "worker_count",
    "replicate",
    "sample_beta",
    "sample_truncnorm",
    "sample_family",
    "ScenarioConfig",
    "section5_config",
    "generate_css",
    "WarpGrid",
    "build_warp_grid",
    "warp_g_hat",
    "warp_g_hat_deriv",
    "ScenarioReport",
    "run_scenario",
    "ise",
]


# -- seeding and parallel replication ---------------------------------------

def rng_for(master_seed: int, rep_index: int, label: str) -> np.random.Generator:
    """Independent generator for one (replication, stream) pair."""
    key = zlib.crc32(label.encode("utf-8"))
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(rep_index), key))
    return np.random.Generator(np.random.PCG64(ss))


def worker_count(workers: Optional[int] = None) -> int:
    """Explicit ``workers``, else ``CSKDE_THREADS``, else the CPU count."""
    if workers is None:
        env = os.environ.get("CSKDE_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def replicate(fn: Callable[[int], object], reps: int, workers: Optional[int] = None) -> list:
    """``[fn(0), ..., fn(reps - 1)]`` computed on a thread pool, in index order."""
    w = min(worker_count(workers), max(1, reps))
    if w == 1:
        return [fn(i) for i in range(reps)]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(fn, range(reps)))


# -- samplers ----------------------------------------------------------------

def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_beta(p, n: int, seed) -> np.ndarray:
    """``n`` i.i.d. Beta draws; ``p`` is a :class:`BetaParams` or ``(a, b)``."""
    a, b = (p.alpha, p.beta) if isinstance(p, BetaParams) else p
    return _rng(seed).beta(a, b, size=int(n))


def _norm_cdf(z):
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def sample_truncnorm(mu: float, sigma: float, n: int, seed) -> np.ndarray:
    """Normal(mu, sigma^2) conditioned on [0, 1], by rejection.

    Raises
    ------
    ValueError
        If ``sigma <= 0`` or the acceptance probability is below 1e-6.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    acc = _norm_cdf((1.0 - mu) / sigma) - _norm_cdf(-mu / sigma)
    if acc < 1e-6:
        raise ValueError(f"acceptance probability {acc:.3g} too small for rejection sampling")
    rng = _rng(seed)
    n = int(n)
    out = np.empty(n)
    filled = 0
    while filled < n:
        need = n - filled
        draw = rng.normal(mu, sigma, size=int(need / acc * 1.1) + 16)
        draw = draw[(draw >= 0.0) & (draw <= 1.0)][:need]
        out[filled:filled + draw.size] = draw
        filled += draw.size
    return out


def sample_family(fam: Family, n: int, seed) -> np.ndarray:
    rng = _rng(seed)
    if fam.kind == "uniform":
        return rng.random(int(n))
    if fam.kind == "beta":
        return sample_beta(fam.params, n, rng)
    return sample_truncnorm(*fam.params, n, rng)


# -- scenarios ---------------------------------------------------------------

@dataclass
class ScenarioConfig:
    """One Monte Carlo experiment.

    ``q_family`` doubles as the known observation density handed to the
    estimators.  ``htilde=None`` with ``estimate_q`` uses the normal-reference
    ``n^(-1/7)`` rule per replication.
    """

    n: int
    reps: int
    x_family: Family = field(default_factory=lambda: beta(2, 2))
    q_family: Family = field(default_factory=lambda: truncnorm(0.5, 0.3))
    h1: float = 0.22
    h2: float = 0.16
    htilde: Optional[float] = None
    x_grid: np.ndarray = field(default_factory=default_grid)
    master_seed: int = 0
    estimate_q: bool = False
    engine: str = "direct"
    bin_factor: float = 20.0
    ise_range: tuple = (0.05, 0.95)

    def __post_init__(self):
        if isinstance(self.x_family, str):
            self.x_family = parse_family(self.x_family)
        if isinstance(self.q_family, str):
            self.q_family = parse_family(self.q_family)
        self.x_grid = np.asarray(self.x_grid, dtype=float)
        if self.n < 2 or self.reps < 1:
            raise ValueError("need n >= 2 and reps >= 1")
        for name in ("h1", "h2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.htilde is not None and not self.htilde > 0:
            raise ValueError("htilde must be positive")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["x_family"] = str(self.x_family)
        d["q_family"] = str(self.q_family)
        d["x_grid"] = {"start": float(self.x_grid[0]), "stop": float(self.x_grid[-1]),
                       "num": int(self.x_grid.size)}
        d["ise_range"] = list(self.ise_range)
        return d


def section5_config(reps: int = 1, master_seed: int = 0, **kw) -> ScenarioConfig:
    """The published simulated example: Beta(2,2) events, N(0.5, 0.3^2) on [0,1]."""
    base = dict(n=10000, reps=reps, x_family=beta(2, 2), q_family=truncnorm(0.5, 0.3),
                h1=0.22, h2=0.16, master_seed=master_seed)
    base.update(kw)
    return ScenarioConfig(**base)


def generate_css(cfg: ScenarioConfig, rep_index: int, with_truth: bool = False):
    """Draw one current status sample; ``delta = 1{x <= t}``.

    With ``with_truth`` also return the hidden event times.
    """
    x = sample_family(cfg.x_family, cfg.n, rng_for(cfg.master_seed, rep_index, "x"))
    t = sample_family(cfg.q_family, cfg.n, rng_for(cfg.master_seed, rep_index, "t"))
    s = CurrentStatusSample(t, (x <= t).astype(np.int8))
    return (s, x) if with_truth else s


# -- WARPing -----------------------------------------------------------------

def _check_bins(grid: WarpGrid, h: float):
    if grid.bin_width > h:
        raise ValueError(f"bin width {grid.bin_width:g} exceeds bandwidth {h:g}")


def warp_g_hat(grid: WarpGrid, kernel: Kernel, h: float, x):
    """Binned kernel estimate ``(1/nh) sum_b count_b w((x - c_b)/h)``."""
    _check_bins(grid, h)
    keep = grid.counts > 0
    (s,) = kernel_sums(x, grid.points[keep], h, (kernel.eval,),
                       weights=grid.counts[keep].astype(float))
    return s / (grid.n * h)


def warp_g_hat_deriv(grid: WarpGrid, kernel: Kernel, h: float, x):
    _check_bins(grid, h)
    keep = grid.counts > 0
    (s,) = kernel_sums(x, grid.points[keep], h, (kernel.eval_deriv,),
                       weights=grid.counts[keep].astype(float))
    return s / (grid.n * h * h)


# -- scenario driver ---------------------------------------------------------

def ise(x, est, truth, lo: float = 0.05, hi: float = 0.95) -> float:
    """Trapezoid integrated squared error over grid points in ``[lo, hi]``."""
    x = np.asarray(x)
    m = (x >= lo - 1e-12) & (x <= hi + 1e-12)
    return float(trapezoid((np.asarray(est)[m] - np.asarray(truth)[m]) ** 2, x[m]))


def _one_replication(cfg: ScenarioConfig, kernel: Kernel, rep: int):
    s = generate_css(cfg, rep)
    v = transform(s).values
    qs = [analytic_density(cfg.q_family)]
    if cfg.estimate_q:
        qs.append(estimated_observation_density(s.times, cfg.htilde, kernel))
    res = estimate_curves(v, cfg.x_grid, cfg.h1, cfg.h2, qs, kernel,
                          cfg.engine, cfg.bin_factor)
    curves = dict(res[0])
    if cfg.estimate_q:
        curves.update({k + "_unknown_q": val for k, val in res[1].items()})
    return curves


@dataclass
class ScenarioReport:
    """Aggregated output of :func:`run_scenario`.

    ``mean``, ``var`` and ``bias`` map curve names to arrays over the grid;
    ``ise`` maps density-curve names to per-replication ISE values;
    ``first`` holds the curves of replication 0 (or the first success).
    """

    config: dict
    x: np.ndarray
    truth: dict
    theory: dict
    mean: dict
    var: dict
    bias: dict
    ise: dict
    first: dict
    failures: list
    n_ok: int

    def as_dict(self) -> dict:
        def arr(d):
            return {k: np.asarray(v).tolist() for k, v in d.items()}

        return {
            "config": self.config, "x": self.x.tolist(), "truth": arr(self.truth),
            "theory": arr(self.theory), "mean": arr(self.mean), "var": arr(self.var),
            "bias": arr(self.bias), "ise": arr(self.ise), "first": arr(self.first),
            "failures": self.failures, "n_ok": self.n_ok,
        }

    def curve_rows(self, which: str = "first"):
        """Header and rows for a CSV with one line per grid point."""
        src = self.first if which == "first" else self.mean
        names = list(src)
        header = ["x", "f_true", "F_true"] + names
        rows = [[self.x[i], self.truth["f"][i], self.truth["F"][i]]
                + [src[k][i] for k in names] for i in range(self.x.size)]
        return header, rows


def run_scenario(cfg: ScenarioConfig, kernel: Optional[Kernel] = None,
                 workers: Optional[int] = None) -> ScenarioReport:
    """Replicate the estimators ``cfg.reps`` times and aggregate per grid point.

    A replication raising a package error is recorded in ``failures`` and
    left out of the aggregates.
    """
    kernel = kernel or biweight()
    x = cfg.x_grid

    def job(rep):
        try:
            return _one_replication(cfg, kernel, rep)
        except CSKDEError as exc:
            return exc

    results = replicate(job, cfg.reps, workers)
    failures = [{"rep": i, "error": f"{type(r).__name__}: {r}"}
                for i, r in enumerate(results) if isinstance(r, Exception)]
    ok = [r for r in results if not isinstance(r, Exception)]

    f_true = cfg.x_family.pdf(x)
    F_true = cfg.x_family.cdf(x)
    qd = analytic_density(cfg.q_family)
    te = TheoreticalExpansion.from_family(cfg.x_family, qd, kernel)
    h1 = cfg.h1
    theory = {
        "f_final_mean": f_true + 0.5 * h1 * h1 * kernel.moment2 * te.reduced(x),
        "f_final_var": te.var_const(x, 1.0 - F_true) / (cfg.n * h1 ** 3),
        "f_minus_var": te.var_const_minus(x) / (cfg.n * h1 ** 3),
        "f_plus_var": te.var_const_plus(x) / (cfg.n * h1 ** 3),
        "F_half_var": te.cdf_variance(x, 0.5, cfg.n, cfg.h2),
    }
    mean, var, bias, ises = {}, {}, {}, {}
    if ok:
        for name in ok[0]:
            stack = np.stack([r[name] for r in ok])
            mean[name] = stack.mean(axis=0)
            var[name] = stack.var(axis=0, ddof=1) if len(ok) > 1 else np.zeros(x.size)
            truth = F_true if name.startswith("F_") else f_true
            bias[name] = mean[name] - truth
            if name.startswith("f_"):
                lo, hi = cfg.ise_range
                ises[name] = np.array([ise(x, r[name], f_true, lo, hi) for r in ok])
    return ScenarioReport(
        config=cfg.as_dict(), x=x, truth={"f": f_true, "F": F_true, "q": qd.q(x)},
        theory=theory, mean=mean, var=var, bias=bias, ise=ises,
        first=ok[0] if ok else {}, failures=failures, n_ok=len(ok),
    )
