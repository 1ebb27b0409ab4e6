"""Analytic distributions on [0, 1]: uniform, Beta and truncated normal.

These serve two roles: the event-time law ``F`` (with density derivatives up
to second order for bias formulas) and a known observation-time density ``q``
(derivatives up to third order).  Densities and derivatives vanish outside
[0, 1] so that shifted evaluations such as ``q(v - 1)`` behave.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = ["Family", "parse_family", "uniform", "beta", "truncnorm"]

_SQRT2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class Family:
    """A named parametric distribution supported on [0, 1].

    Parameters
    ----------
    kind : {"uniform", "beta", "truncnorm"}
    params : tuple of float
        ``()`` for uniform, ``(a, b)`` for Beta, ``(mu, sigma)`` for the
        normal conditioned on [0, 1] (``sigma`` is a standard deviation).
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind == "uniform":
            if self.params:
                raise ValueError("uniform takes no parameters")
        elif self.kind == "beta":
            a, b = self.params
            if not (a > 0 and b > 0):
                raise ValueError(f"Beta parameters must be positive, got {self.params}")
        elif self.kind == "truncnorm":
            mu, sigma = self.params
            if not sigma > 0:
                raise ValueError(f"sigma must be positive, got {sigma}")
        else:
            raise ValueError(f"unknown family {self.kind!r}")

    def __str__(self):
        if not self.params:
            return self.kind
        return f"{self.kind}:" + ",".join(f"{p:g}" for p in self.params)

    # -- truncated normal helpers -------------------------------------------
    def _tn_mass(self):
        mu, sigma = self.params
        return special.ndtr((1.0 - mu) / sigma) - special.ndtr(-mu / sigma)

    def pdf(self, x, order: int = 0):
        """Density (``order = 0``) or its ``order``-th derivative, order <= 3."""
        x = np.asarray(x, dtype=float)
        inside = (x >= 0.0) & (x <= 1.0)
        if self.kind == "uniform":
            val = np.full(x.shape, 1.0 if order == 0 else 0.0)
        elif self.kind == "beta":
            val = _beta_pdf_deriv(np.clip(x, 1e-300, 1 - 1e-16), *self.params, order)
        else:
            mu, sigma = self.params
            z = (x - mu) / sigma
            phi = np.exp(-0.5 * z * z) / (_SQRT2PI * sigma * self._tn_mass())
            # d^k/dx^k phi(z) = (-1)^k He_k(z) phi(z) / sigma^k
            herm = (np.ones_like(z), z, z * z - 1.0, z ** 3 - 3.0 * z)[order]
            val = (-1.0) ** order * herm * phi / sigma ** order
        return np.where(inside, val, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, 0.0, 1.0)
        if self.kind == "uniform":
            val = xc
        elif self.kind == "beta":
            val = special.betainc(*self.params, xc)
        else:
            mu, sigma = self.params
            val = (special.ndtr((xc - mu) / sigma) - special.ndtr(-mu / sigma)) / self._tn_mass()
        return np.where(x < 0.0, 0.0, np.where(x > 1.0, 1.0, val))

    def mean(self) -> float:
        if self.kind == "uniform":
            return 0.5
        if self.kind == "beta":
            a, b = self.params
            return a / (a + b)
        from scipy.integrate import quad
        return quad(lambda t: t * float(self.pdf(t)), 0.0, 1.0)[0]

    def var(self) -> float:
        if self.kind == "uniform":
            return 1.0 / 12.0
        if self.kind == "beta":
            a, b = self.params
            return a * b / ((a + b) ** 2 * (a + b + 1))
        from scipy.integrate import quad
        m = self.mean()
        return quad(lambda t: (t - m) ** 2 * float(self.pdf(t)), 0.0, 1.0)[0]


def _beta_pdf_deriv(x, a, b, order):
    f = np.exp((a - 1) * np.log(x) + (b - 1) * np.log1p(-x) - special.betaln(a, b))
    if order == 0:
        return f
    # f' = f L with L the log-derivative; differentiate the product repeatedly
    L = (a - 1) / x - (b - 1) / (1 - x)
    if order == 1:
        return f * L
    L1 = -(a - 1) / x ** 2 - (b - 1) / (1 - x) ** 2
    if order == 2:
        return f * (L * L + L1)
    L2 = 2 * (a - 1) / x ** 3 - 2 * (b - 1) / (1 - x) ** 3
    if order == 3:
        return f * (L ** 3 + 3 * L * L1 + L2)
    raise ValueError("derivative order must be 0..3")


def uniform() -> Family:
    return Family("uniform")


def beta(a: float, b: float) -> Family:
    return Family("beta", (float(a), float(b)))


def truncnorm(mu: float, sigma: float) -> Family:
    return Family("truncnorm", (float(mu), float(sigma)))


def parse_family(spec: str) -> Family:
    """Parse ``"uniform"``, ``"beta:a,b"`` or ``"truncnorm:mu,sigma"``."""
    name, _, rest = spec.strip().partition(":")
    name = name.lower()
    try:
        params = tuple(float(p) for p in rest.split(",")) if rest else ()
    except ValueError:
        raise ValueError(f"bad family parameters in {spec!r}") from None
    if name == "uniform":
        return uniform() if not params else Family("uniform", params)
    if name in ("beta", "truncnorm") and len(params) != 2:
        raise ValueError(f"{name} needs two parameters, got {spec!r}")
    return Family(name, params)
