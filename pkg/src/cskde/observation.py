"""The observation-time density ``q`` and its derivatives.

An :class:`ObservationDensity` bundles ``q, q', q'', q'''`` as callables on
the unit window.  Analytic instances come from :mod:`cskde.families`;
kernel-estimated ones from :func:`cskde.qestimate.estimated_observation_density`.
Estimators only see the callables, so both modes share every downstream
code path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateObservationDensity
from .families import Family, parse_family

__all__ = [
    "Q_FLOOR",
    "ObservationDensity",
    "analytic_density",
    "uniform_density",
    "check_floor",
]

Q_FLOOR = 1e-8


@dataclass(frozen=True)
class ObservationDensity:
    """Observation-time density with derivatives, zero outside [0, 1].

    Attributes
    ----------
    q, q1, q2 : callable
        Density and its first two derivatives.
    q3 : callable or None
        Third derivative; analytic mode only (needed by the bias formulas).
    mode : {"analytic", "estimated"}
    htilde : float or None
        Kernel bandwidth of an estimated density.
    name : str
    """

    q: Callable
    q1: Callable
    q2: Callable
    q3: Optional[Callable] = None
    mode: str = "analytic"
    htilde: Optional[float] = None
    name: str = ""

    def __call__(self, x):
        return self.q(x)

    def qbar(self, v):
        """Wrapped density ``q(v) + q(v - 1)`` of the transformed values' window."""
        v = np.asarray(v, dtype=float)
        return self.q(v) + self.q(v - 1.0)


def analytic_density(family) -> ObservationDensity:
    """Known observation density from a :class:`Family` or its string form."""
    fam = parse_family(family) if isinstance(family, str) else family
    if not isinstance(fam, Family):
        raise TypeError(f"expected a Family or spec string, got {family!r}")
    return ObservationDensity(
        q=lambda x: fam.pdf(x, 0),
        q1=lambda x: fam.pdf(x, 1),
        q2=lambda x: fam.pdf(x, 2),
        q3=lambda x: fam.pdf(x, 3),
        mode="analytic",
        name=str(fam),
    )


def uniform_density() -> ObservationDensity:
    return analytic_density(Family("uniform"))


def check_floor(qx, x, floor: float = Q_FLOOR):
    """Raise :class:`DegenerateObservationDensity` where ``q(x) <= floor``."""
    qx = np.asarray(qx, dtype=float)
    bad = ~(qx > floor)
    if np.any(bad):
        xb = np.broadcast_to(np.asarray(x, dtype=float), qx.shape)
        raise DegenerateObservationDensity(xb[bad], qx[bad], floor)
    return qx
