"""Analytic reference distributions.

Each law exposes ``cdf``, ``density``, ``ppf``, ``mean`` and
``partial_mean(x) = integral of y f(y) dy over (-inf, x]``; the last one
lets :func:`birkhoff_lab.statistics.wasserstein1` integrate exactly.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special


class ReferenceLaw:
    name = "law"
    support = (-np.inf, np.inf)

    def cdf(self, x):
        raise NotImplementedError

    def density(self, x):
        raise NotImplementedError

    def partial_mean(self, x):
        raise NotImplementedError

    def mean(self) -> float:
        return float(self.partial_mean(self.support[1]))

    def ppf(self, q):
        """Quantile function by vectorized bisection on the support."""
        q = np.asarray(q, dtype=float)
        lo = np.full(q.shape, float(self.support[0]))
        hi = np.full(q.shape, float(self.support[1]))
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < q
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def describe(self) -> dict:
        return {"kind": self.name}

    def __repr__(self):
        return f"{type(self).__name__}()"


class Exp1(ReferenceLaw):
    """Exponential law with mean 1."""

    name = "Exp1"
    support = (0.0, np.inf)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-np.maximum(x, 0.0)), 0.0)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, np.exp(-np.maximum(x, 0.0)), 0.0)

    def ppf(self, q):
        return -np.log1p(-np.asarray(q, dtype=float))

    def partial_mean(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        with np.errstate(invalid="ignore"):
            tail = np.where(np.isinf(x), 0.0, (1.0 + x) * np.exp(-x))
        return 1.0 - tail

    def mean(self):
        return 1.0


class Beta(ReferenceLaw):
    name = "Beta"
    support = (0.0, 1.0)

    def __init__(self, a: float, b: float):
        if a <= 0 or b <= 0:
            raise ValueError("Beta parameters must be positive")
        self.a = float(a)
        self.b = float(b)

    def cdf(self, x):
        return special.betainc(self.a, self.b, np.clip(np.asarray(x, dtype=float), 0.0, 1.0))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0) & (x <= 1)
        xc = np.clip(x, 0.0, 1.0)
        with np.errstate(divide="ignore"):
            logf = (
                special.xlogy(self.a - 1, xc)
                + special.xlog1py(self.b - 1, -xc)
                - special.betaln(self.a, self.b)
            )
        return np.where(inside, np.exp(logf), 0.0)

    def ppf(self, q):
        return special.betaincinv(self.a, self.b, np.asarray(q, dtype=float))

    def partial_mean(self, x):
        xc = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return self.a / (self.a + self.b) * special.betainc(self.a + 1, self.b, xc)

    def mean(self):
        return self.a / (self.a + self.b)

    def variance(self):
        s = self.a + self.b
        return self.a * self.b / (s * s * (s + 1))

    def describe(self):
        return {"kind": self.name, "a": self.a, "b": self.b}

    def __repr__(self):
        return f"Beta({self.a:g}, {self.b:g})"


class QuarterCircle(ReferenceLaw):
    """Density ``sqrt(4 - x^2) / pi`` on ``[0, 2]``."""

    name = "QuarterCircle"
    support = (0.0, 2.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 2.0)
        return (0.5 * x * np.sqrt(4.0 - x * x) + 2.0 * np.arcsin(0.5 * x)) / math.pi

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0) & (x <= 2)
        return np.where(inside, np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / math.pi, 0.0)

    def partial_mean(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 2.0)
        return (8.0 - (4.0 - x * x) ** 1.5) / (3.0 * math.pi)

    def mean(self):
        return 8.0 / (3.0 * math.pi)


class SquaredQuarterCircle(ReferenceLaw):
    """Image of the quarter-circle law under ``x -> x^2``.

    Density ``sqrt(x (4 - x)) / (2 pi x)``, supported on ``[0, 4]``.
    """

    name = "SquaredQuarterCircle"
    support = (0.0, 4.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 4.0)
        return QuarterCircle().cdf(np.sqrt(x))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0) & (x <= 4)
        xc = np.where(inside, x, 1.0)
        return np.where(inside, np.sqrt(xc * (4.0 - xc)) / (2.0 * math.pi * xc), 0.0)

    def ppf(self, q):
        return QuarterCircle().ppf(q) ** 2

    def partial_mean(self, x):
        u = np.clip(np.asarray(x, dtype=float), 0.0, 4.0) - 2.0
        area = 0.5 * u * np.sqrt(np.clip(4.0 - u * u, 0.0, None)) + 2.0 * np.arcsin(0.5 * u) + math.pi
        return area / (2.0 * math.pi)

    def mean(self):
        return 1.0


class UniformInterval(ReferenceLaw):
    name = "UniformInterval"

    def __init__(self, lo: float = 0.0, hi: float = 1.0):
        if not hi > lo:
            raise ValueError("need lo < hi")
        self.lo = float(lo)
        self.hi = float(hi)
        self.support = (self.lo, self.hi)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.lo) & (x <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    def ppf(self, q):
        return self.lo + np.asarray(q, dtype=float) * (self.hi - self.lo)

    def partial_mean(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        return (x * x - self.lo * self.lo) / (2.0 * (self.hi - self.lo))

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def scaled(self, c: float) -> "UniformInterval":
        if c <= 0:
            raise ValueError("scale must be positive")
        return UniformInterval(c * self.lo, c * self.hi)

    def describe(self):
        return {"kind": self.name, "lo": self.lo, "hi": self.hi}

    def __repr__(self):
        return f"UniformInterval({self.lo:g}, {self.hi:g})"
