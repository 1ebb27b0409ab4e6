"""Kernel estimators of the event-time density from transformed current status data.

The transformed values have density ``g``.  On the unit window two inversion
formulas recover the event-time density ``f`` from ``g`` near ``x`` (the
*left* estimator) or near ``x + 1`` (the *right* estimator).  Their convex
combination with weight ``1 - F(x)`` minimises the leading variance term; the
final estimator plugs in a smoothed estimate of ``F``.

All estimators here work on the unit window: data in [0, 2], evaluation
points in (0, 1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid

from ._kernelsum import kernel_sums
from .families import Family
from .kernels import Kernel, biweight
from .observation import ObservationDensity, check_floor
from .transform import TransformedSample

__all__ = [
    "GEstimate",
    "WideBandwidthWarning",
    "default_grid",
    "g_hat",
    "g_hat_deriv",
    "f_minus",
    "f_plus",
    "f_combined",
    "optimal_t",
    "f_final",
    "clip_and_renormalize",
    "TheoreticalExpansion",
    "expansion_bias",
    "reduced_bias",
]


class WideBandwidthWarning(UserWarning):
    """Bandwidth of 1/2 or more: kernel windows at x and x + 1 overlap."""


def default_grid(m: int = 401) -> np.ndarray:
    """Equispaced interior grid on [0.0025, 0.9975]."""
    return np.linspace(0.0025, 0.9975, m)


def _interior(x):
    x = np.asarray(x, dtype=float)
    if np.any(~((x > 0.0) & (x < 1.0))):
        raise ValueError("density estimates are defined for 0 < x < 1 only")
    return x


@dataclass(frozen=True, eq=False)
class GEstimate:
    """Kernel estimate of the density of the transformed values.

    Parameters
    ----------
    data : TransformedSample or array_like
        Transformed values on the unit window (use ``to_unit()`` first for a
        general window).
    h : float
        Bandwidth.
    kernel : Kernel
    """

    data: object
    h: float
    kernel: Kernel = field(default_factory=biweight)

    def __post_init__(self):
        if isinstance(self.data, TransformedSample):
            if tuple(self.data.support) != (0.0, 1.0):
                raise ValueError("GEstimate needs unit-window data; call to_unit() first")
            values = self.data.values
        else:
            values = self.data
        v = np.sort(np.asarray(values, dtype=float))
        if v.size == 0:
            raise ValueError("empty sample")
        if not self.h > 0:
            raise ValueError(f"bandwidth must be positive, got {self.h}")
        if self.h >= 0.5:
            warnings.warn(
                f"bandwidth {self.h:g} >= 1/2: windows at x and x+1 overlap",
                WideBandwidthWarning, stacklevel=3,
            )
        v.setflags(write=False)
        object.__setattr__(self, "_sorted", v)

    @property
    def n(self) -> int:
        return self._sorted.size

    @property
    def wide_bandwidth(self) -> bool:
        return self.h >= 0.5

    def values_and_slopes(self, x):
        """``(g_nh(x), g'_nh(x))`` from one pass over the data."""
        h, n = self.h, self.n
        s0, s1 = kernel_sums(x, self._sorted, h,
                             (self.kernel.eval, self.kernel.eval_deriv))
        return s0 / (n * h), s1 / (n * h * h)

    def __call__(self, x):
        h = self.h
        (s0,) = kernel_sums(x, self._sorted, h, (self.kernel.eval,))
        return s0 / (self.n * h)

    def deriv(self, x):
        h = self.h
        (s1,) = kernel_sums(x, self._sorted, h, (self.kernel.eval_deriv,))
        return s1 / (self.n * h * h)


def g_hat(e: GEstimate, x):
    """``(1 / nh) sum_i w((x - v_i) / h)``."""
    return e(x)


def g_hat_deriv(e: GEstimate, x):
    """``(1 / nh^2) sum_i w'((x - v_i) / h)``."""
    return e.deriv(x)


def _invert(g, dg, qx, q1x):
    return dg / qx - q1x * g / (qx * qx)


def f_minus(e: GEstimate, q: ObservationDensity, x):
    """Left estimator ``g'(x)/q(x) - q'(x) g(x)/q(x)^2``.

    Raises
    ------
    DegenerateObservationDensity
        Where ``q(x)`` is at or below the floor.
    """
    x = _interior(x)
    qx = check_floor(q.q(x), x)
    g, dg = e.values_and_slopes(x)
    return _invert(g, dg, qx, q.q1(x))


def f_plus(e: GEstimate, q: ObservationDensity, x):
    """Right estimator ``-(g'(x+1)/q(x) - q'(x) g(x+1)/q(x)^2)``."""
    x = _interior(x)
    qx = check_floor(q.q(x), x)
    g, dg = e.values_and_slopes(x + 1.0)
    return -_invert(g, dg, qx, q.q1(x))


def f_combined(e: GEstimate, q: ObservationDensity, x, t):
    """``t f_minus + (1 - t) f_plus`` for a fixed or pointwise weight ``t``."""
    t = np.asarray(t, dtype=float)
    return t * f_minus(e, q, x) + (1.0 - t) * f_plus(e, q, x)


def optimal_t(Fx):
    """Variance-minimising weight ``1 - F(x)``; estimates are not clamped."""
    return 1.0 - np.asarray(Fx, dtype=float)


def f_final(e: GEstimate, q: ObservationDensity, x, Fhat: Optional[Callable] = None,
            h2: Optional[float] = None, clamp: bool = False):
    """Final estimator ``(1 - Fhat) f_minus + Fhat f_plus``.

    Parameters
    ----------
    Fhat : callable, optional
        Estimate of the event-time CDF.  Defaults to the half-and-half
        smoothed estimator built from the same sample with bandwidth ``h2``.
    h2 : float, optional
        Bandwidth for the default ``Fhat``; ``n ** (-1/5)`` when omitted.
    clamp : bool
        Clip the weight ``1 - Fhat(x)`` into [0, 1].  Off by default.
    """
    x = _interior(x)
    if Fhat is None:
        from .cdf import CdfEstimate

        Fhat = CdfEstimate(e._sorted, h2 if h2 is not None else e.n ** -0.2,
                           e.kernel, q, t_rule=0.5)
    t = optimal_t(Fhat(x))
    if clamp:
        t = np.clip(t, 0.0, 1.0)
    return f_combined(e, q, x, t)


def clip_and_renormalize(x_grid, values):
    """Set negative values to zero and rescale to unit trapezoid mass on the grid."""
    y = np.clip(np.asarray(values, dtype=float), 0.0, None)
    mass = trapezoid(y, x_grid)
    if mass <= 0:
        raise ValueError("estimate has no positive mass on the grid")
    return y / mass


@dataclass(frozen=True)
class TheoreticalExpansion:
    """Leading bias and variance terms for known ``F`` and ``q``.

    Build with :meth:`from_family`.  The separate left/right bias terms
    need ``q'''``; :meth:`reduced` and the variance terms do not, so an
    estimated ``q`` works for those.
    """

    F: Callable
    f: Callable
    f1: Callable
    f2: Callable
    q: ObservationDensity
    kernel: Kernel = field(default_factory=biweight)

    @classmethod
    def from_family(cls, x_family: Family, q: ObservationDensity,
                    kernel: Optional[Kernel] = None):
        return cls(
            F=x_family.cdf,
            f=lambda x: x_family.pdf(x, 0),
            f1=lambda x: x_family.pdf(x, 1),
            f2=lambda x: x_family.pdf(x, 2),
            q=q,
            kernel=kernel or biweight(),
        )

    def _parts(self, x):
        x = np.asarray(x, dtype=float)
        q3 = self.q.q3(x) if self.q.q3 is not None else np.full(x.shape, np.nan)
        return (self.F(x), self.f(x), self.f1(x), self.f2(x),
                self.q.q(x), self.q.q1(x), self.q.q2(x), q3)

    # -- g derivatives from g = F q on (0,1) and g(x+1) = (1 - F(x)) q(x) --
    def g_derivs(self, x):
        """``(g''(x), g'''(x), g''(x+1), g'''(x+1))`` for 0 < x < 1."""
        F, f, f1, f2, q, q1, q2, q3 = self._parts(x)
        g2 = f1 * q + 2 * f * q1 + F * q2
        g3 = f2 * q + 3 * f1 * q1 + 3 * f * q2 + F * q3
        S = 1.0 - F
        r2 = -f1 * q - 2 * f * q1 + S * q2
        r3 = -f2 * q - 3 * f1 * q1 - 3 * f * q2 + S * q3
        return g2, g3, r2, r3

    def bminus_from_g(self, x):
        g2, g3, _, _ = self.g_derivs(x)
        q, q1 = self.q.q(x), self.q.q1(x)
        return g3 / q - q1 * g2 / q ** 2

    def bplus_from_g(self, x):
        _, _, r2, r3 = self.g_derivs(x)
        q, q1 = self.q.q(x), self.q.q1(x)
        return -r3 / q + q1 * r2 / q ** 2

    def bias_bminus(self, x):
        F, f, f1, f2, q, q1, q2, q3 = self._parts(x)
        return (q * q3 * F + 3 * q * q2 * f + 2 * q * q1 * f1 + q * q * f2
                - q1 * q2 * F - 2 * q1 * q1 * f) / q ** 2

    def bias_bplus(self, x):
        F, f, f1, f2, q, q1, q2, q3 = self._parts(x)
        S = 1.0 - F
        return (-q * q3 * S + 3 * q * q2 * f + 2 * q * q1 * f1 + q * q * f2
                + q1 * q2 * S - 2 * q1 * q1 * f) / q ** 2

    def reduced(self, x):
        """``(1 - F) b_minus + F b_plus`` in closed form (no third derivative of q)."""
        _, f, f1, f2, q, q1, q2, _ = self._parts(x)
        return (3 * q * q2 * f + 2 * q * q1 * f1 + q * q * f2 - 2 * q1 * q1 * f) / q ** 2

    def var_const_minus(self, x):
        return self.F(x) * self.kernel.deriv_sq_norm / self.q.q(x)

    def var_const_plus(self, x):
        return (1.0 - self.F(x)) * self.kernel.deriv_sq_norm / self.q.q(x)

    def var_const(self, x, t):
        F = self.F(x)
        return (t * t * F + (1 - t) ** 2 * (1 - F)) * self.kernel.deriv_sq_norm / self.q.q(x)

    def expectation(self, x, t, h):
        """Leading-order mean of the combined estimator with weight ``t``."""
        return self.f(x) + 0.5 * h * h * self.kernel.moment2 * expansion_bias(self, x, t)

    def variance(self, x, t, n, h):
        return self.var_const(x, t) / (n * h ** 3)

    def cdf_expectation(self, x, t, h):
        g2, _, r2, _ = self.g_derivs(x)
        return self.F(x) + 0.5 * h * h * self.kernel.moment2 * (t * g2 - (1 - t) * r2) / self.q.q(x)

    def cdf_variance(self, x, t, n, h):
        F = self.F(x)
        return (t * t * F + (1 - t) ** 2 * (1 - F)) * self.kernel.sq_norm / (self.q.q(x) * n * h)


def expansion_bias(te: TheoreticalExpansion, x, t):
    """Bias bracket ``t b_minus(x) + (1 - t) b_plus(x)``."""
    t = np.asarray(t, dtype=float)
    return t * te.bias_bminus(x) + (1.0 - t) * te.bias_bplus(x)


def reduced_bias(te: TheoreticalExpansion, x):
    """Bias bracket at the variance-optimal weight ``t = 1 - F(x)``."""
    return te.reduced(x)
