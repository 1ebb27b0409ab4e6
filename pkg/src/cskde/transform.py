"""Current status samples and their transformation to uniform-deconvolution form.

A record ``(t, delta)`` with ``delta = 1{x <= t}`` becomes ``v = t`` when the
event has happened and ``v = t + (b - a)`` when it has not.  On the unit
window the transformed values have density ``qbar(v) (F(v) - F(v - 1))`` with
``qbar(v) = q(v) + q(v - 1)``, a weighted uniform-deconvolution density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = [
    "CurrentStatusSample",
    "TransformedSample",
    "transform",
    "untransform",
    "true_g",
]


@dataclass(frozen=True)
class CurrentStatusSample:
    """Observation times ``times`` with status indicators ``statuses``.

    ``statuses[i] == 1`` means the event had occurred by ``times[i]``.
    All times must lie in the observation window ``support = (a, b)``.
    """

    times: np.ndarray
    statuses: np.ndarray
    support: tuple = (0.0, 1.0)

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        d = np.asarray(self.statuses)
        a, b = map(float, self.support)
        if not a < b:
            raise DataError(f"support must satisfy a < b, got {self.support}")
        if t.ndim != 1 or d.shape != t.shape:
            raise DataError("times and statuses must be 1-d arrays of equal length")
        if t.size == 0:
            raise DataError("empty sample")
        bad = np.flatnonzero((d != 0) & (d != 1))
        if bad.size:
            raise DataError(f"status values must be 0 or 1 (rows {bad[:10].tolist()})")
        bad = np.flatnonzero(~((t >= a) & (t <= b)))
        if bad.size:
            raise DataError(f"times outside [{a}, {b}] (rows {bad[:10].tolist()})")
        t.setflags(write=False)
        d = d.astype(np.int8)
        d.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "statuses", d)
        object.__setattr__(self, "support", (a, b))

    def __len__(self):
        return self.times.size

    def to_unit(self) -> "CurrentStatusSample":
        """Rescale the window to [0, 1]."""
        a, b = self.support
        if (a, b) == (0.0, 1.0):
            return self
        return CurrentStatusSample((self.times - a) / (b - a), self.statuses, (0.0, 1.0))


@dataclass(frozen=True)
class TransformedSample:
    """Transformed values ``v`` in ``[a, 2b - a]``; remembers the window."""

    values: np.ndarray
    support: tuple = (0.0, 1.0)

    def __len__(self):
        return self.values.size

    def to_unit(self) -> "TransformedSample":
        a, b = self.support
        if (a, b) == (0.0, 1.0):
            return self
        return TransformedSample((self.values - a) / (b - a), (0.0, 1.0))


def transform(s: CurrentStatusSample) -> TransformedSample:
    """Map each ``(t, delta)`` to ``t`` (delta = 1) or ``t + b - a`` (delta = 0)."""
    a, b = s.support
    v = np.where(s.statuses == 1, s.times, s.times + (b - a))
    v.setflags(write=False)
    return TransformedSample(v, s.support)


def untransform(ts: TransformedSample) -> CurrentStatusSample:
    """Inverse of :func:`transform`; values above ``b`` had ``delta = 0``.

    ``(a, 0)`` and ``(b, 1)`` both map to ``b``; that value is read back as
    ``(b, 1)``.  The collision has probability zero for continuous times.
    """
    a, b = ts.support
    v = np.asarray(ts.values, dtype=float)
    late = v > b
    return CurrentStatusSample(np.where(late, v - (b - a), v), (~late).astype(np.int8), (a, b))


def true_g(v, F, q):
    """Density of the transformed values on the unit window.

    Parameters
    ----------
    v : array_like
    F : callable
        Event-time CDF, equal to 0 below 0 and 1 above 1.
    q : callable
        Observation-time density, zero outside [0, 1].
    """
    v = np.asarray(v, dtype=float)
    qbar = q(v) + q(v - 1.0)
    g = qbar * (F(v) - F(v - 1.0))
    return np.where((v >= 0.0) & (v <= 2.0), g, 0.0)
