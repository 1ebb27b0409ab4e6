"""Kernel estimators of the event-time distribution function.

``F(x) = g(x) / q(x) = 1 - g(x + 1) / q(x)`` on the unit window; plugging in
the kernel estimate of ``g`` gives a left and a right estimator.  A fixed
convex combination (default half-and-half) is consistent in mean square and
serves as the weight estimate inside :func:`cskde.density.f_final`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .density import GEstimate
from .kernels import Kernel, biweight
from .observation import ObservationDensity, check_floor

__all__ = [
    "CdfEstimate",
    "F_minus",
    "F_plus",
    "F_combined",
    "CouplingDiagnostics",
    "validate_bandwidth_coupling",
]


def _closed_unit(x):
    x = np.asarray(x, dtype=float)
    if np.any(~((x >= 0.0) & (x <= 1.0))):
        raise ValueError("CDF estimates are defined on [0, 1] only")
    return x


@dataclass(frozen=True, eq=False)
class CdfEstimate:
    """Smoothed CDF estimator with bandwidth ``h2`` and fixed weight ``t_rule``.

    Calling the instance returns the combined estimate.  Values are not
    clamped to [0, 1].
    """

    data: object
    h2: float
    kernel: Kernel = field(default_factory=biweight)
    q: ObservationDensity = None
    t_rule: float = 0.5

    def __post_init__(self):
        if self.q is None:
            raise ValueError("CdfEstimate needs an observation density q")
        if not 0.0 <= self.t_rule <= 1.0:
            raise ValueError(f"t_rule must lie in [0, 1], got {self.t_rule}")
        object.__setattr__(self, "_g", GEstimate(self.data, self.h2, self.kernel))

    @property
    def g(self) -> GEstimate:
        return self._g

    def __call__(self, x):
        return F_combined(self, x)


def F_minus(c: CdfEstimate, x):
    """``g_nh(x) / q(x)``."""
    x = _closed_unit(x)
    qx = check_floor(c.q.q(x), x)
    return c.g(x) / qx


def F_plus(c: CdfEstimate, x):
    """``1 - g_nh(x + 1) / q(x)``."""
    x = _closed_unit(x)
    qx = check_floor(c.q.q(x), x)
    return 1.0 - c.g(x + 1.0) / qx


def F_combined(c: CdfEstimate, x):
    t = c.t_rule
    return t * F_minus(c, x) + (1.0 - t) * F_plus(c, x)


@dataclass(frozen=True)
class CouplingDiagnostics:
    """Checks on the density bandwidth ``h1`` and the CDF bandwidth ``h2``.

    ``h1_ok`` asks for ``h1 >= n^(-9/35)``, the smallest order for which the
    plug-in CDF error stays negligible when ``h2`` has its optimal order.
    ``h2_ok`` asks for ``h2`` within a factor ``h2_factor`` of ``n^(-1/5)``.
    """

    n: int
    h1: float
    h2: float
    h1_threshold: float
    h2_reference: float
    h2_factor: float
    h1_ok: bool
    h2_ok: bool

    @property
    def ok(self) -> bool:
        return self.h1_ok and self.h2_ok

    def messages(self) -> list[str]:
        out = []
        if not self.h1_ok:
            out.append(f"h1={self.h1:g} is below n^(-9/35)={self.h1_threshold:.4g}; "
                       "plug-in CDF error may dominate the density bias")
        if not self.h2_ok:
            out.append(f"h2={self.h2:g} is more than a factor {self.h2_factor:g} "
                       f"away from n^(-1/5)={self.h2_reference:.4g}")
        return out


def validate_bandwidth_coupling(h1: float, h2: float, n: int,
                                h2_factor: float = 3.0) -> CouplingDiagnostics:
    if not (h1 > 0 and h2 > 0):
        raise ValueError("bandwidths must be positive")
    thr = float(n) ** (-9.0 / 35.0)
    ref = float(n) ** (-0.2)
    return CouplingDiagnostics(
        n=int(n), h1=float(h1), h2=float(h2),
        h1_threshold=thr, h2_reference=ref, h2_factor=h2_factor,
        h1_ok=h1 >= thr,
        h2_ok=ref / h2_factor <= h2 <= ref * h2_factor,
    )
