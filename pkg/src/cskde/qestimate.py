"""Kernel estimation of the observation-time density and the unknown-q estimator."""

from __future__ import annotations

import warnings
from typing import Optional

import numpy as np

from ._kernelsum import kernel_sums
from .cdf import CdfEstimate
from .density import GEstimate, f_final
from .errors import KernelCapabilityError
from .kernels import Kernel, biweight, normal_reference_constant
from .observation import ObservationDensity
from .transform import CurrentStatusSample, transform

__all__ = [
    "q_hat",
    "q_hat_derivs",
    "default_htilde",
    "default_level_bandwidth",
    "estimated_observation_density",
    "f_final_unknown_q",
    "HtildeScalingWarning",
]


class HtildeScalingWarning(UserWarning):
    """The q bandwidth is far from the n^(-1/7) order the theory assumes."""


def _sorted_times(T):
    t = np.sort(np.asarray(T, dtype=float))
    if t.size == 0:
        raise ValueError("empty sample")
    return t


def q_hat(T, htilde: float, kernel: Kernel, x):
    """``(1 / n htilde) sum_k w((x - T_k) / htilde)``; no support restriction."""
    t = _sorted_times(T)
    (s,) = kernel_sums(x, t, htilde, (kernel.eval,))
    return s / (t.size * htilde)


def q_hat_derivs(T, htilde: float, kernel: Kernel, x):
    """Kernel estimates ``(q'(x), q''(x))``.

    Raises
    ------
    KernelCapabilityError
        If the kernel has no second derivative.
    """
    if kernel.second_deriv is None:
        raise KernelCapabilityError(f"kernel {kernel.name!r} has no second derivative")
    t = _sorted_times(T)
    n = t.size
    s1, s2 = kernel_sums(x, t, htilde, (kernel.eval_deriv, kernel.second_deriv))
    return s1 / (n * htilde ** 2), s2 / (n * htilde ** 3)


def _sample_sd(T):
    T = np.asarray(T, dtype=float)
    return float(np.std(T, ddof=1)) if T.size > 1 else 0.0


def default_htilde(T, kernel: Optional[Kernel] = None) -> float:
    """Normal-reference constant times the sample SD of ``T`` times ``n^(-1/7)``."""
    kernel = kernel or biweight()
    T = np.asarray(T, dtype=float)
    sd = _sample_sd(T)
    if not sd > 0:
        raise ValueError("observation times have zero spread")
    return normal_reference_constant(kernel) * sd * T.size ** (-1.0 / 7.0)


def default_level_bandwidth(T, kernel: Optional[Kernel] = None) -> float:
    """Same rule with ``n^(-1/5)``; used where only ``q`` itself is needed."""
    kernel = kernel or biweight()
    T = np.asarray(T, dtype=float)
    sd = _sample_sd(T)
    if not sd > 0:
        raise ValueError("observation times have zero spread")
    return normal_reference_constant(kernel) * sd * T.size ** -0.2


def _check_htilde(htilde, n):
    ratio = htilde / n ** (-1.0 / 7.0)
    if ratio > 5.0 or ratio < 0.2:
        warnings.warn(
            f"htilde={htilde:g} is {ratio:.3g} x n^(-1/7); the unknown-q theory "
            "assumes that order", HtildeScalingWarning, stacklevel=3,
        )


def estimated_observation_density(T, htilde: Optional[float] = None,
                                  kernel: Optional[Kernel] = None) -> ObservationDensity:
    """Kernel-estimated ``q, q', q''`` restricted to the unit window.

    The restriction mirrors the known support of ``q``: outside [0, 1] the
    functions return zero, so ``qbar(v) = q(v) + q(v - 1)`` never mixes in
    kernel mass spilled across an edge.
    """
    kernel = kernel or biweight()
    t = _sorted_times(T)
    if htilde is None:
        htilde = default_htilde(t, kernel)
    _check_htilde(htilde, t.size)
    n = t.size
    funcs = [kernel.eval, kernel.eval_deriv]
    if kernel.second_deriv is not None:
        funcs.append(kernel.second_deriv)
    scale = (n * htilde, n * htilde ** 2, n * htilde ** 3)

    def make(k):
        def fn(x):
            x = np.asarray(x, dtype=float)
            vals = kernel_sums(x, t, htilde, (funcs[k],))[0] / scale[k]
            return np.where((x >= 0.0) & (x <= 1.0), vals, 0.0)
        return fn

    def missing(x):
        raise KernelCapabilityError(f"kernel {kernel.name!r} has no second derivative")

    return ObservationDensity(
        q=make(0), q1=make(1), q2=make(2) if len(funcs) == 3 else missing,
        q3=None, mode="estimated", htilde=float(htilde), name="estimate",
    )


def f_final_unknown_q(s: CurrentStatusSample, h: float, htilde: Optional[float],
                      h2: float, kernel: Optional[Kernel], x):
    """Final density estimate with ``q`` replaced by its kernel estimate.

    The same estimated ``q`` is used in both the inversion and the plug-in
    CDF weight.
    """
    kernel = kernel or biweight()
    s = s.to_unit()
    qe = estimated_observation_density(s.times, htilde, kernel)
    v = transform(s)
    e = GEstimate(v, h, kernel)
    Fhat = CdfEstimate(v, h2, kernel, qe, t_rule=0.5)
    return f_final(e, qe, x, Fhat=Fhat)
