"""Distances between samples and reference laws, spectra, mixing, moments."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats as _sstats

from birkhoff_lab import kernels
from birkhoff_lab.core import (
    CorruptedStateError,
    EmpiricalDistribution,
    SampleBatch,
    check_doubly_stochastic,
    seeded_stream,
)
from birkhoff_lab.laws import Exp1, QuarterCircle, ReferenceLaw, SquaredQuarterCircle

MIXING_THRESHOLD = 0.25


class SVDError(RuntimeError):
    pass


@dataclass
class DistanceReport:
    statistic: str
    value: float
    sample_sizes: Tuple[int, ...]
    grid: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "value": self.value,
            "sample_sizes": list(self.sample_sizes),
            "grid": self.grid,
            "details": self.details,
        }


def _as_empirical(sample) -> EmpiricalDistribution:
    if isinstance(sample, EmpiricalDistribution):
        return sample
    return EmpiricalDistribution(sample)


def ks_distance(sample, law: ReferenceLaw) -> float:
    """One-sample Kolmogorov-Smirnov statistic, both one-sided jumps."""
    s = _as_empirical(sample)
    x = s.values
    N = s.count
    F = law.cdf(x)
    k = np.arange(1, N + 1)
    d_plus = np.max(k / N - F)
    d_minus = np.max(F - (k - 1) / N)
    return float(max(d_plus, d_minus, 0.0))


def ks_two_sample(x, y) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    xs = _as_empirical(x).values
    ys = _as_empirical(y).values
    grid = np.concatenate([xs, ys])
    fx = np.searchsorted(xs, grid, side="right") / xs.size
    fy = np.searchsorted(ys, grid, side="right") / ys.size
    return float(np.max(np.abs(fx - fy)))


def kolmogorov_quantile(alpha: float, N: int) -> float:
    """Asymptotic ``1 - alpha`` quantile of the one-sample KS statistic."""
    return float(_sstats.kstwobign.isf(alpha) / math.sqrt(N))


def _tv_edges(s: EmpiricalDistribution, law: ReferenceLaw, bins: int, lo, hi) -> np.ndarray:
    if lo is None:
        lo = law.support[0] if np.isfinite(law.support[0]) else float(law.ppf(1e-4))
        lo = min(lo, s.values[0])
    if hi is None:
        hi = float(law.ppf(0.9999))
    hi = max(hi, s.values[-1])
    if not hi > lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, bins + 1)


def _law_masses(law, edges):
    cdf = law.cdf(edges)
    return np.diff(cdf), float(cdf[0] + (1.0 - cdf[-1]))


def tv_binned(sample, law: ReferenceLaw, bins: int = 64, lo=None, hi=None) -> float:
    """Half the L1 distance between binned empirical and law masses.

    Law mass falling outside the grid counts as mismatch, so the value is a
    lower bound on the total variation distance up to sampling noise.
    """
    if bins < 2:
        raise ValueError("need at least 2 bins")
    s = _as_empirical(sample)
    edges = _tv_edges(s, law, bins, lo, hi)
    counts, _ = np.histogram(s.values, edges)
    emp = counts / s.count
    mass, outside = _law_masses(law, edges)
    value = 0.5 * (np.abs(emp - mass).sum() + outside)
    return float(min(max(value, 0.0), 1.0))


def tv_binned_with_error(
    sample, law: ReferenceLaw, bins: int = 64, lo=None, hi=None, resamples: int = 200, seed: int = 0
) -> Tuple[float, float]:
    """``tv_binned`` and a multinomial-bootstrap standard error."""
    s = _as_empirical(sample)
    value = tv_binned(s, law, bins, lo, hi)
    edges = _tv_edges(s, law, bins, lo, hi)
    counts, _ = np.histogram(s.values, edges)
    mass, outside = _law_masses(law, edges)
    rng = seeded_stream(seed, 7)
    boot = rng.multinomial(s.count, counts / s.count, size=resamples) / s.count
    vals = 0.5 * (np.abs(boot - mass).sum(axis=1) + outside)
    return value, float(vals.std(ddof=1))


def tv_binned_two_sample_2d(xy_a: np.ndarray, xy_b: np.ndarray, bins: int = 6) -> float:
    """Binned TV between two bivariate samples.

    Each axis is cut at pooled quantiles, so every marginal bin holds about
    the same mass.
    """
    xy_a = np.asarray(xy_a, dtype=float)
    xy_b = np.asarray(xy_b, dtype=float)
    pooled = np.concatenate([xy_a, xy_b])
    q = np.linspace(0, 1, bins + 1)[1:-1]
    ex = np.quantile(pooled[:, 0], q)
    ey = np.quantile(pooled[:, 1], q)

    def cells(xy):
        ix = np.searchsorted(ex, xy[:, 0], side="right")
        iy = np.searchsorted(ey, xy[:, 1], side="right")
        return np.bincount(ix * bins + iy, minlength=bins * bins) / xy.shape[0]

    return float(0.5 * np.abs(cells(xy_a) - cells(xy_b)).sum())


def wasserstein1(sample, law: ReferenceLaw) -> float:
    """Exact ``integral |ECDF - F|`` between a sample and a law.

    Written in quantile form, ``sum_k integral over u in ((k-1)/N, k/N] of
    |x_(k) - Q(u)| du``, and each piece is evaluated in closed form through
    the law's partial mean, so no quadrature error enters.
    """
    s = _as_empirical(sample)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return _wasserstein1_exact(s, law)


def _wasserstein1_exact(s: EmpiricalDistribution, law: ReferenceLaw) -> float:
    x = s.values
    N = s.count
    u = np.arange(N + 1) / N
    q = law.ppf(u)
    q[0] = law.support[0]
    q[-1] = law.support[1]
    pm = law.partial_mean(q)
    pm[0] = 0.0
    pm[-1] = law.mean()
    c = np.clip(law.cdf(x), u[:-1], u[1:])
    qc = law.ppf(c)
    pmc = law.partial_mean(qc)
    # c at a piece boundary must reuse the boundary's partial mean
    pmc = np.where(c <= u[:-1], pm[:-1], np.where(c >= u[1:], pm[1:], pmc))
    below = x * (c - u[:-1]) - (pmc - pm[:-1])
    above = (pm[1:] - pmc) - x * (u[1:] - c)
    total = np.sum(np.maximum(below, 0.0) + np.maximum(above, 0.0))
    return float(total)


def wasserstein1_two_sample(x, y) -> float:
    return float(_sstats.wasserstein_distance(_as_empirical(x).values, _as_empirical(y).values))


def centered(M: np.ndarray) -> np.ndarray:
    """``sqrt(n) (M - 1/n)``."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    return math.sqrt(n) * (M - 1.0 / n)


def singular_values(M: np.ndarray, check: bool = True) -> EmpiricalDistribution:
    """Singular values of ``sqrt(n) (M - 1/n)`` in ascending order."""
    M = np.asarray(M, dtype=float)
    if check:
        report = check_doubly_stochastic(M, 1e-8)
        if not report:
            raise CorruptedStateError(
                f"not doubly stochastic (violation {report.max_violation:.3g} at {report.location})"
            )
    try:
        sv = np.linalg.svd(centered(M), compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SVDError(f"LAPACK gesdd did not converge for n={M.shape[0]}: {exc}") from exc
    return EmpiricalDistribution(sv)


def spectral_test(batch: SampleBatch, check: bool = True) -> DistanceReport:
    """Pooled singular values of a batch against the quarter-circle law.

    The squared values are compared with the squared law as well. When every
    sample value lies in ``[0, 2]`` the map ``x -> x^2`` is 4-Lipschitz there,
    so the squared distance is at most 4 times the plain one; values beyond
    2 void that bound.
    """
    pooled = np.concatenate([singular_values(M, check).values for M in batch.matrices])
    sigma = EmpiricalDistribution(pooled)
    w1 = wasserstein1(sigma, QuarterCircle())
    w1_sq = wasserstein1(sigma.map(np.square), SquaredQuarterCircle())
    return DistanceReport(
        "Wasserstein1",
        w1,
        (sigma.count,),
        {"law": "QuarterCircle"},
        {
            "squared_value": w1_sq,
            "squared_law": "SquaredQuarterCircle",
            "ks": ks_distance(sigma, QuarterCircle()),
            "matrices": batch.count,
            "n": batch.n,
        },
    )


@dataclass
class MixingReport:
    n: int
    d: list
    row_mean: list
    mixing_time: Optional[int]

    def to_dict(self) -> dict:
        return {"n": self.n, "d": self.d, "row_mean": self.row_mean, "mixing_time": self.mixing_time}


def mixing_profile(M: np.ndarray, t_max: int, threshold: float = MIXING_THRESHOLD) -> MixingReport:
    """Distance to uniform after ``t`` steps of the chain with kernel ``M``.

    ``d[t-1] = max_i (1/2) sum_j |(M^t)_ij - 1/n|``; ``row_mean`` holds the
    same row distances averaged over ``i`` instead of maximized.
    """
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    P = M.copy()
    d, row_mean = [], []
    for t in range(1, t_max + 1):
        if t > 1:
            P = P @ M
        rows = 0.5 * np.abs(P - 1.0 / n).sum(axis=1)
        d.append(float(min(rows.max(), 1.0)))
        row_mean.append(float(rows.mean()))
    hit = [t for t, v in enumerate(d, start=1) if v <= threshold]
    return MixingReport(n, d, row_mean, hit[0] if hit else None)


def max_entry_stat(batch: SampleBatch, epsilon: float) -> float:
    """Fraction of matrices with ``max n X_ij > (2 + epsilon) log n``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    n = batch.n
    level = (2.0 + epsilon) * math.log(n) / n
    return float(np.mean(batch.matrices.reshape(batch.count, -1).max(axis=1) > level))


@dataclass(frozen=True)
class MomentSpec:
    """Entries (0-based ``(i, j)``) and the power each is raised to."""

    positions: Tuple[Tuple[int, int], ...]
    exponents: Tuple[int, ...]

    def __post_init__(self):
        pos = tuple((int(i), int(j)) for i, j in self.positions)
        exps = tuple(int(a) for a in self.exponents)
        if len(pos) != len(exps) or not pos:
            raise ValueError("positions and exponents must have equal nonzero length")
        if len(set(pos)) != len(pos):
            raise ValueError("positions must be distinct")
        if any(a < 1 for a in exps):
            raise ValueError("exponents must be >= 1")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "exponents", exps)


def joint_moments(batch: SampleBatch, spec: MomentSpec) -> Tuple[float, float]:
    """Monte Carlo mean of ``prod_k (n X_{i_k j_k})^alpha_k`` and its standard error."""
    n = batch.n
    if any(not (0 <= i < n and 0 <= j < n) for i, j in spec.positions):
        raise ValueError(f"positions out of range for n={n}")
    prod = np.ones(batch.count)
    for (i, j), a in zip(spec.positions, spec.exponents):
        prod *= (n * batch.matrices[:, i, j]) ** a
    se = float(prod.std(ddof=1) / math.sqrt(prod.size)) if prod.size > 1 else float("nan")
    return float(prod.mean()), se


def energy_distance(X: np.ndarray, Y: np.ndarray) -> float:
    """V-statistic energy distance ``2 E|X-Y| - E|X-X'| - E|Y-Y'|``."""
    X = np.ascontiguousarray(np.asarray(X, dtype=float).reshape(len(X), -1))
    Y = np.ascontiguousarray(np.asarray(Y, dtype=float).reshape(len(Y), -1))
    xy = kernels.mean_pair_distance(X, Y)
    xx = kernels.mean_pair_distance(X, X)
    yy = kernels.mean_pair_distance(Y, Y)
    return float(max(2.0 * xy - xx - yy, 0.0))


def max_abs_correlation(V: np.ndarray) -> Tuple[float, bool]:
    """Largest off-diagonal ``|corr|`` among columns; flag zero variance."""
    sd = V.std(axis=0)
    if np.any(sd == 0):
        return float("nan"), True
    C = np.corrcoef(V, rowvar=False)
    off = C[~np.eye(C.shape[0], dtype=bool)]
    return float(np.abs(off).max()) if off.size else 0.0, False


def submatrix_independence_test(batch: SampleBatch, k: int, seed: int = 0, references: int = 3) -> DistanceReport:
    """Dependence inside the leading ``k x k`` block, rescaled by ``n``.

    ``value`` is the largest pairwise ``|corr|``. ``details`` adds the
    energy distance to an equal-size iid Exp(1) sample and the energy
    distance between two iid Exp(1) samples; each is the median over
    ``references`` independent reference draws.
    """
    n = batch.n
    if k < 1 or k > n:
        raise ValueError("need 1 <= k <= n")
    notes = []
    if k * k > n or k > math.sqrt(n) / max(math.log(n), 1.0):
        notes.append(f"k={k} is outside the small-block regime for n={n}")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    V = n * batch.matrices[:, :k, :k].reshape(batch.count, k * k)
    corr, degenerate = max_abs_correlation(V)
    energy, self_energy = [], []
    for r in range(references):
        ref = seeded_stream(seed, 1000 + 2 * r).standard_exponential(V.shape)
        other = seeded_stream(seed, 1001 + 2 * r).standard_exponential(V.shape)
        energy.append(energy_distance(V, ref))
        self_energy.append(energy_distance(other, ref))
    return DistanceReport(
        "max_abs_correlation",
        corr,
        (batch.count,),
        {"k": k},
        {
            "degenerate": degenerate,
            "energy": float(np.median(energy)),
            "reference_energy": float(np.median(self_energy)),
            "notes": notes,
        },
    )


def lag_autocorrelation(x: np.ndarray, lag: int = 1) -> float:
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    v = x.var()
    if v == 0 or lag >= x.size:
        return float("nan")
    return float((x[lag:] * x[:-lag]).mean() / v)


def exp1_tail(level: float) -> float:
    return math.exp(-level)


def dirichlet_entry_tail(n: int, epsilon: float) -> float:
    """``P(n Y > (2 + eps) log n)`` for ``Y ~ Beta(1, n - 1)``."""
    x = (2.0 + epsilon) * math.log(n) / n
    return (1.0 - x) ** (n - 1) if x < 1 else 0.0


__all__ = [
    "DistanceReport",
    "MixingReport",
    "MomentSpec",
    "SVDError",
    "centered",
    "dirichlet_entry_tail",
    "energy_distance",
    "joint_moments",
    "ks_distance",
    "ks_two_sample",
    "lag_autocorrelation",
    "max_entry_stat",
    "mixing_profile",
    "singular_values",
    "spectral_test",
    "submatrix_independence_test",
    "tv_binned",
    "tv_binned_two_sample_2d",
    "tv_binned_with_error",
    "wasserstein1",
    "wasserstein1_two_sample",
]
