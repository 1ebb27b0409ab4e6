"""Bandwidth selection for the final density estimator.

The asymptotic MISE of the final estimator is

    MISE(h) = h^4/4 mu2^2 int B(x)^2 dx + R(w') / (n h^3) int F(1-F)/q dx

with ``B`` the combined bias term at the variance-optimal weight.  Its
minimiser is ``h = [3 R(w') int F(1-F)/q / (mu2^2 int B^2)]^(1/7) n^(-1/7)``.
The reference selector fits a Beta law to the event times by the method of
moments on the transformed sample and evaluates that formula for it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .density import TheoreticalExpansion
from .errors import BetaFitInfeasible, DegenerateBandwidth
from .families import Family, beta as beta_family
from .kernels import Kernel, biweight
from .observation import Q_FLOOR, ObservationDensity
from .transform import TransformedSample

__all__ = [
    "BetaParams",
    "MomentEstimates",
    "BandwidthReport",
    "BandwidthFallbackWarning",
    "moment_estimates",
    "beta_mom",
    "mise_functionals",
    "mise_expansion",
    "h_opt",
    "reference_bandwidth",
    "rule_of_thumb",
    "TRIM",
]

TRIM = 1e-3


class BandwidthFallbackWarning(UserWarning):
    """The Beta reference failed and the rule of thumb was used instead."""


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"Beta parameters must be positive, got {self.alpha}, {self.beta}")

    def family(self) -> Family:
        return beta_family(self.alpha, self.beta)


@dataclass(frozen=True)
class MomentEstimates:
    """Moment estimates of the event time: mean ``A``, second moment ``B``, variance ``C``."""

    A: float
    B: float
    C: float


def _values(V):
    if isinstance(V, TransformedSample):
        V = V.to_unit().values
    return np.asarray(V, dtype=float)


def moment_estimates(V, qbar) -> MomentEstimates:
    """Unbiased moment estimates of the event time from transformed values.

    ``V / qbar(V)`` has mean ``E X + 1/2`` and ``V^2 / qbar(V)`` has mean
    ``E X^2 + E X + 1/3``.

    Parameters
    ----------
    V : TransformedSample or array_like
        Unit-window transformed values.
    qbar : callable
        Wrapped observation density ``q(v) + q(v - 1)``.

    Raises
    ------
    ValueError
        If ``qbar`` is at or below the floor at any data point; the message
        lists the offending indices.
    """
    v = _values(V)
    qb = np.asarray(qbar(v), dtype=float)
    bad = np.flatnonzero(~(qb > Q_FLOOR))
    if bad.size:
        raise ValueError(f"qbar below floor at indices {bad[:20].tolist()}"
                         + (" ..." if bad.size > 20 else ""))
    A = float(np.mean(v / qb)) - 0.5
    B = float(np.mean(v * v / qb)) - A - 1.0 / 3.0
    return MomentEstimates(A, B, B - A * A)


def beta_mom(m: MomentEstimates) -> BetaParams:
    """Method-of-moments Beta fit.

    Raises
    ------
    BetaFitInfeasible
        If the mean is outside (0, 1), the variance is not positive, or the
        variance is too large for any Beta law.
    """
    A, C = m.A, m.C
    if not 0.0 < A < 1.0:
        raise BetaFitInfeasible(f"mean estimate {A:.6g} outside (0, 1)")
    if not C > 0.0:
        raise BetaFitInfeasible(f"variance estimate {C:.6g} not positive")
    k = A * (1.0 - A) / C - 1.0
    if not k > 0.0:
        raise BetaFitInfeasible(f"variance {C:.6g} too large for a Beta law with mean {A:.6g}")
    return BetaParams(A * k, (1.0 - A) * k)


def _quad(fn, a, b):
    val, _ = integrate.quad(fn, a, b, limit=400, epsabs=1e-13, epsrel=1e-11)
    return val


@dataclass(frozen=True)
class MiseFunctionals:
    """Integrals entering the MISE expansion.

    ``bias_sq = int B^2``, ``bias_cross = int B C``, ``corr_sq = int C^2`` with
    ``C = f q''/q`` the extra bias from an estimated ``q``; ``var = int F(1-F)/q``.
    """

    bias_sq: float
    var: float
    bias_cross: float = 0.0
    corr_sq: float = 0.0


def mise_functionals(x_family: Family, q: ObservationDensity, kernel: Optional[Kernel] = None,
                     delta: float = TRIM, with_q_correction: bool = False) -> MiseFunctionals:
    """Integrate the bias and variance ingredients over ``[delta, 1 - delta]``."""
    te = TheoreticalExpansion.from_family(x_family, q, kernel)
    lo, hi = delta, 1.0 - delta

    def B(x):
        return float(te.reduced(np.array(x)))

    bias_sq = _quad(lambda x: B(x) ** 2, lo, hi)
    var = _quad(lambda x: float(te.F(x) * (1.0 - te.F(x)) / q.q(np.array(x))), lo, hi)
    cross = corr = 0.0
    if with_q_correction:
        def C(x):
            x = np.array(x)
            return float(te.f(x) * q.q2(x) / q.q(x))

        cross = _quad(lambda x: B(x) * C(x), lo, hi)
        corr = _quad(lambda x: C(x) ** 2, lo, hi)
    return MiseFunctionals(bias_sq, var, cross, corr)


def mise_expansion(h, funcs: MiseFunctionals, n: int, kernel: Optional[Kernel] = None,
                   htilde: Optional[float] = None):
    """Leading-order MISE at bandwidth ``h`` (array-friendly).

    With ``htilde`` the squared bias becomes ``int (h^2 B - htilde^2 C)^2``.
    """
    kernel = kernel or biweight()
    h = np.asarray(h, dtype=float)
    m2 = kernel.moment2
    if htilde is None:
        sq = h ** 4 * funcs.bias_sq
    else:
        ht2 = htilde * htilde
        sq = h ** 4 * funcs.bias_sq - 2 * h * h * ht2 * funcs.bias_cross + ht2 * ht2 * funcs.corr_sq
    return 0.25 * m2 * m2 * sq + kernel.deriv_sq_norm * funcs.var / (n * h ** 3)


def h_opt(funcs: MiseFunctionals, n: int, kernel: Optional[Kernel] = None,
          htilde: Optional[float] = None) -> float:
    """Bandwidth minimising :func:`mise_expansion`.

    Closed form without ``htilde``; a bounded one-dimensional search on
    ``log h`` otherwise.

    Raises
    ------
    DegenerateBandwidth
        If the squared-bias integral vanishes (the expansion has no interior
        minimum) or either integral is not finite and positive.
    """
    kernel = kernel or biweight()
    num = 3.0 * kernel.deriv_sq_norm * funcs.var
    den = kernel.moment2 ** 2 * funcs.bias_sq
    if not (np.isfinite(num) and num > 0):
        raise DegenerateBandwidth(f"variance integral {funcs.var!r} is not positive")
    if not (np.isfinite(den) and den > 1e-12 * max(1.0, num)):
        raise DegenerateBandwidth(
            f"squared-bias integral {funcs.bias_sq!r} is zero: the reference "
            "density has no curvature, use a fixed bandwidth or the rule of thumb")
    closed = (num / den) ** (1.0 / 7.0) * float(n) ** (-1.0 / 7.0)
    if htilde is None:
        return float(closed)
    res = optimize.minimize_scalar(
        lambda lh: float(mise_expansion(np.exp(lh), funcs, n, kernel, htilde)),
        bounds=(np.log(closed) - 5.0, np.log(closed) + 5.0), method="bounded",
        options={"xatol": 1e-10},
    )
    return float(np.exp(res.x))


def rule_of_thumb(V, n: Optional[int] = None) -> float:
    """``0.5 * sd(V) * n^(-1/7)``."""
    v = _values(V)
    n = v.size if n is None else n
    return 0.5 * float(np.std(v, ddof=1)) * float(n) ** (-1.0 / 7.0)


@dataclass(frozen=True)
class BandwidthReport:
    h: float
    method: str
    params: Optional[BetaParams] = None
    moments: Optional[MomentEstimates] = None
    functionals: Optional[MiseFunctionals] = None
    htilde: Optional[float] = None
    warnings: tuple = field(default_factory=tuple)

    def as_dict(self) -> dict:
        d = {"h": self.h, "method": self.method, "htilde": self.htilde,
             "warnings": list(self.warnings)}
        if self.params is not None:
            d["alpha"] = self.params.alpha
            d["beta"] = self.params.beta
        if self.moments is not None:
            d["moments"] = {"A": self.moments.A, "B": self.moments.B, "C": self.moments.C}
        if self.functionals is not None:
            f = self.functionals
            d["bias_integral"] = f.bias_sq
            d["variance_integral"] = f.var
            if self.htilde is not None:
                d["bias_cross_integral"] = f.bias_cross
                d["q_correction_integral"] = f.corr_sq
        return d


def reference_bandwidth(V, q: ObservationDensity, kernel: Optional[Kernel] = None,
                        n: Optional[int] = None, moment_q: Optional[ObservationDensity] = None,
                        delta: float = TRIM, fallback: bool = True) -> BandwidthReport:
    """Beta-reference plug-in bandwidth.

    Parameters
    ----------
    V : TransformedSample or array_like
    q : ObservationDensity
        Supplies ``q, q', q''`` for the bias term.  When it is an estimate,
        the extra ``-htilde^2 f q''/q`` bias is included with ``q.htilde``.
    n : int, optional
        Sample size in the ``n^(-1/7)`` factor (defaults to ``len(V)``).
    moment_q : ObservationDensity, optional
        Density used for the moment step (defaults to ``q``); lets an
        estimated ``q`` use a level bandwidth there.
    fallback : bool
        On an infeasible fit or a degenerate bias integral, return the rule
        of thumb with a warning instead of raising.
    """
    kernel = kernel or biweight()
    v = _values(V)
    n = v.size if n is None else int(n)
    moment_q = moment_q or q
    notes = []
    mom = params = funcs = None
    htilde = q.htilde if q.mode == "estimated" else None
    try:
        mom = moment_estimates(v, moment_q.qbar)
        params = beta_mom(mom)
        funcs = mise_functionals(params.family(), q, kernel, delta,
                                 with_q_correction=htilde is not None)
        h = h_opt(funcs, n, kernel, htilde)
        return BandwidthReport(h, "beta-reference", params, mom, funcs, htilde, tuple(notes))
    except (BetaFitInfeasible, DegenerateBandwidth) as exc:
        if not fallback:
            raise
        msg = f"beta reference failed ({exc}); using rule of thumb"
        warnings.warn(msg, BandwidthFallbackWarning, stacklevel=2)
        notes.append(msg)
        return BandwidthReport(rule_of_thumb(v, n), "rule-of-thumb", params, mom, funcs,
                               htilde, tuple(notes))
