"""Compactly supported kernels and the functionals used in bias/variance terms.

Every kernel used by the estimators must be a continuously differentiable,
symmetric probability density supported on [-1, 1].  The biweight is the only
built-in; other kernels go through :func:`make_kernel`, which checks those
conditions once so the estimators never have to.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import KernelValidationError

__all__ = [
    "Kernel",
    "biweight",
    "kernel_functionals",
    "condition_w_violations",
    "make_kernel",
    "get_kernel",
    "normal_reference_constant",
]

ArrayFunc = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Kernel:
    """A kernel ``w`` on [-1, 1] with its derivative(s) and functionals.

    Attributes
    ----------
    name : str
    eval : callable
        ``w(u)``, vectorised, zero for ``|u| > 1``.
    eval_deriv : callable
        ``w'(u)``.
    second_deriv : callable or None
        ``w''(u)``; only needed to estimate the second derivative of the
        observation density.
    moment2, sq_norm, deriv_sq_norm : float
        ``int u^2 w``, ``int w^2`` and ``int w'^2``.
    """

    name: str
    eval: ArrayFunc
    eval_deriv: ArrayFunc
    second_deriv: Optional[ArrayFunc]
    moment2: float
    sq_norm: float
    deriv_sq_norm: float

    def __call__(self, u):
        return self.eval(u)


def _biweight(u):
    u = np.asarray(u, dtype=float)
    s = 1.0 - u * u
    return np.where(np.abs(u) <= 1.0, 0.9375 * s * s, 0.0)


def _biweight_d1(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, -3.75 * u * (1.0 - u * u), 0.0)


def _biweight_d2(u):
    # jumps to 0 at |u| = 1; value inside is -(15/4)(1 - 3u^2)
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) < 1.0, -3.75 * (1.0 - 3.0 * u * u), 0.0)


def biweight() -> Kernel:
    """The biweight kernel ``w(u) = (15/16)(1 - u^2)^2`` on [-1, 1]."""
    return Kernel(
        name="biweight",
        eval=_biweight,
        eval_deriv=_biweight_d1,
        second_deriv=_biweight_d2,
        moment2=1.0 / 7.0,
        sq_norm=5.0 / 7.0,
        deriv_sq_norm=15.0 / 7.0,
    )


def _quad(fn, **kw):
    # points=[0] handles kernels with a kink at the origin
    val, _ = integrate.quad(
        lambda u: float(fn(np.array(u))), -1.0, 1.0,
        points=[0.0], epsabs=1e-14, epsrel=1e-13, limit=200, **kw,
    )
    return val


def kernel_functionals(k) -> tuple[float, float, float]:
    """Compute ``(int u^2 w, int w^2, int w'^2)`` by adaptive quadrature.

    ``k`` may be a :class:`Kernel` or a pair ``(w, w')`` of callables.

    Raises
    ------
    KernelValidationError
        If ``w`` does not integrate to one within 1e-6.
    """
    if isinstance(k, Kernel):
        w, dw = k.eval, k.eval_deriv
    else:
        w, dw = k
    mass = _quad(w)
    if abs(mass - 1.0) > 1e-6:
        raise KernelValidationError(f"kernel integrates to {mass!r}, not 1")
    moment2 = _quad(lambda u: u * u * w(u))
    sq_norm = _quad(lambda u: w(u) ** 2)
    deriv_sq_norm = _quad(lambda u: dw(u) ** 2)
    return moment2, sq_norm, deriv_sq_norm


def condition_w_violations(w: ArrayFunc, dw: ArrayFunc, n_grid: int = 4001) -> list[str]:
    """List the ways ``(w, w')`` fails the kernel requirements (empty if none).

    Checks non-negativity, vanishing outside [-1, 1], symmetry, unit mass,
    agreement of ``w'`` with finite differences of ``w``, and continuity of
    ``w'`` (including ``w'(+-1) = 0``, since ``w'`` is zero outside).
    """
    problems = []
    u = np.linspace(-1.0, 1.0, n_grid)
    wu = np.asarray(w(u), dtype=float)
    if np.any(wu < -1e-14):
        problems.append("negative values")
    outside = np.array([-3.0, -1.5, -1.0 - 1e-9, 1.0 + 1e-9, 1.5, 3.0])
    if np.any(np.asarray(w(outside)) != 0.0):
        problems.append("nonzero outside [-1, 1]")
    if np.max(np.abs(wu - np.asarray(w(-u)))) > 1e-12:
        problems.append("not symmetric")
    mass = _quad(w)
    if abs(mass - 1.0) > 1e-6:
        problems.append(f"integrates to {mass:.8g}")

    eps = 1e-6
    interior = u[1:-1]
    fd = (np.asarray(w(interior + eps)) - np.asarray(w(interior - eps))) / (2 * eps)
    dwu = np.asarray(dw(interior), dtype=float)
    # skip points straddling a kink, they are caught by the continuity test
    smooth = np.abs(fd - dwu) < 1e-3 * (1.0 + np.abs(dwu))
    if np.mean(smooth) < 0.99:
        problems.append("derivative does not match w")

    edges = np.array([-1.0, 1.0])
    if np.any(np.abs(np.asarray(w(edges))) > 1e-12):
        problems.append("w does not vanish at the support edges")
    if np.any(np.abs(np.asarray(dw(edges))) > 1e-8):
        problems.append("w' does not vanish at the support edges")
    # a jump in w' does not shrink when the grid is refined
    coarse = np.max(np.abs(np.diff(np.asarray(dw(np.linspace(-1.0, 1.0, 2001))))))
    fine = np.max(np.abs(np.diff(np.asarray(dw(np.linspace(-1.0, 1.0, 20001))))))
    if coarse > 1e-12 and fine > 0.5 * coarse:
        problems.append("w' is discontinuous")
    return problems


def make_kernel(name: str, w: ArrayFunc, dw: ArrayFunc,
                d2w: Optional[ArrayFunc] = None) -> Kernel:
    """Build a validated kernel from user callables.

    Raises
    ------
    KernelValidationError
        If any requirement in :func:`condition_w_violations` fails.
    """
    problems = condition_w_violations(w, dw)
    if problems:
        raise KernelValidationError(f"kernel {name!r}: " + "; ".join(problems))
    m2, r, r1 = kernel_functionals((w, dw))
    return Kernel(name, w, dw, d2w, m2, r, r1)


_REGISTRY = {"biweight": biweight}


def get_kernel(name: str = "biweight") -> Kernel:
    try:
        return _REGISTRY[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; available: {sorted(_REGISTRY)}") from None


def normal_reference_constant(k: Kernel) -> float:
    """Normal-reference constant ``(8 sqrt(pi) R(w) / (3 mu2^2))^(1/5)``.

    Equals 2.78 for the biweight; multiply by a scale estimate and a power
    of ``n`` to get a bandwidth.
    """
    return (8.0 * np.sqrt(np.pi) * k.sq_norm / (3.0 * k.moment2 ** 2)) ** 0.2
