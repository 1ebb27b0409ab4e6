"""All estimator curves from one pass of kernel sums.

:func:`estimate_curves` computes ``g`` and ``g'`` at ``x`` and ``x + 1`` once
per bandwidth and assembles the left, right and final density estimates and
the CDF estimates with exactly the arithmetic of :mod:`cskde.density` and
:mod:`cskde.cdf`.  Kernel sums come either from the raw data or from a
binned (WARP) approximation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kernelsum import kernel_sums
from .kernels import Kernel, biweight
from .observation import ObservationDensity, check_floor

__all__ = ["WarpGrid", "build_warp_grid", "KernelSummer", "estimate_curves"]


@dataclass(frozen=True)
class WarpGrid:
    """Binned sample on ``[origin, origin + len(counts) * bin_width]``.

    With ``method="linear"`` each datum splits its unit mass between the two
    neighbouring nodes ``origin + k * bin_width`` in proportion to proximity,
    so ``counts`` holds fractional weights.  With ``method="simple"`` each
    datum counts once in its bin and sits at the bin centre.
    """

    origin: float
    bin_width: float
    counts: np.ndarray
    method: str = "linear"

    @property
    def n(self) -> int:
        return int(round(float(self.counts.sum())))

    @property
    def points(self) -> np.ndarray:
        """Locations carrying the weights in ``counts``."""
        k = np.arange(self.counts.size)
        if self.method == "linear":
            return self.origin + k * self.bin_width
        return self.origin + (k + 0.5) * self.bin_width


def build_warp_grid(values, bin_width: float, origin: float = 0.0,
                    upper: float = 2.0, method: str = "linear") -> WarpGrid:
    """Bin ``values`` (assumed in ``[origin, upper]``) with spacing ``bin_width``."""
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    v = np.asarray(values, dtype=float)
    nb = int(np.ceil((upper - origin) / bin_width - 1e-12))
    pos = (v - origin) / bin_width
    if method == "simple":
        idx = np.clip(np.floor(pos).astype(np.int64), 0, nb - 1)
        return WarpGrid(float(origin), float(bin_width),
                        np.bincount(idx, minlength=nb), "simple")
    if method != "linear":
        raise ValueError(f"unknown binning method {method!r}")
    pos = np.clip(pos, 0.0, float(nb))
    idx = np.minimum(np.floor(pos).astype(np.int64), nb - 1)
    frac = pos - idx
    counts = (np.bincount(idx, 1.0 - frac, minlength=nb + 1)
              + np.bincount(idx + 1, frac, minlength=nb + 1))
    return WarpGrid(float(origin), float(bin_width), counts, "linear")


class KernelSummer:
    """Normalised kernel sums ``(1/(n h^(k+1))) sum w^(k)((x - v)/h)``.

    ``engine="direct"`` sums over the sorted data; ``engine="warp"`` sums
    over binned points weighted by their counts.
    """

    def __init__(self, values, kernel: Kernel, engine: str = "direct",
                 bin_width: Optional[float] = None, binning: str = "linear"):
        self.kernel = kernel
        self.engine = engine
        v = np.sort(np.asarray(values, dtype=float))
        self.n = v.size
        if engine == "direct":
            self._pts, self._wts = v, None
        elif engine == "warp":
            if bin_width is None:
                raise ValueError("warp engine needs a bin width")
            grid = build_warp_grid(v, bin_width, method=binning)
            keep = grid.counts > 0
            self._pts = grid.points[keep]
            self._wts = grid.counts[keep].astype(float)
            self.grid = grid
        else:
            raise ValueError(f"unknown engine {engine!r}")

    def __call__(self, x, h):
        """``(g(x), g'(x))`` at bandwidth ``h``."""
        s0, s1 = kernel_sums(x, self._pts, h, (self.kernel.eval, self.kernel.eval_deriv),
                             weights=self._wts)
        n = self.n
        return s0 / (n * h), s1 / (n * h * h)

    def level(self, x, h):
        (s0,) = kernel_sums(x, self._pts, h, (self.kernel.eval,), weights=self._wts)
        return s0 / (self.n * h)


def _combine(g, dg, gr, dgr, g2, g2r, qx, q1x, t_rule=0.5):
    # same operation order as density.f_minus/f_plus/f_final and cdf.F_*
    fm = dg / qx - q1x * g / (qx * qx)
    fp = -(dgr / qx - q1x * gr / (qx * qx))
    Fm = g2 / qx
    Fp = 1.0 - g2r / qx
    Fh = t_rule * Fm + (1.0 - t_rule) * Fp
    t = 1.0 - Fh
    ff = t * fm + (1.0 - t) * fp
    return {"f_minus": fm, "f_plus": fp, "f_final": ff,
            "F_minus": Fm, "F_plus": Fp, "F_half": Fh}


def estimate_curves(values, x, h1: float, h2: float, q, kernel: Optional[Kernel] = None,
                    engine: str = "direct", bin_factor: float = 20.0):
    """Left/right/final density and left/right/half CDF estimates on ``x``.

    Parameters
    ----------
    values : array_like
        Unit-window transformed values.
    x : array_like
        Evaluation points in (0, 1).
    q : ObservationDensity or sequence of them
        With a sequence, one result dict per density is returned; the kernel
        sums are shared.
    engine : {"direct", "warp"}
    bin_factor : float
        Bin width is ``min(h1, h2) / bin_factor`` for the warp engine.
    """
    kernel = kernel or biweight()
    x = np.asarray(x, dtype=float)
    if np.any(~((x > 0.0) & (x < 1.0))):
        raise ValueError("evaluation points must lie in (0, 1)")
    summer = KernelSummer(values, kernel, engine,
                          None if engine == "direct" else min(h1, h2) / bin_factor)
    g, dg = summer(x, h1)
    gr, dgr = summer(x + 1.0, h1)
    g2 = summer.level(x, h2)
    g2r = summer.level(x + 1.0, h2)
    many = not isinstance(q, ObservationDensity)
    out = []
    for qq in (q if many else [q]):
        qx = check_floor(qq.q(x), x)
        out.append(_combine(g, dg, gr, dgr, g2, g2r, qx, qq.q1(x)))
    return out if many else out[0]
