"""Volumes of Birkhoff and transportation polytopes.

Volume here is the Lebesgue measure of the free block: the image of the
polytope under ``X -> (X_ij)`` for ``i < m``, ``j < n``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import signal

from birkhoff_lab import kernels
from birkhoff_lab.core import MarginSpec, seeded_stream

MC_MAX_FREE_DIM = 20
INCLUSION_EXCLUSION_MAX_TERMS = 12
CONVOLUTION_STEPS = 1 << 16


@dataclass
class VolumeEstimate:
    """``std_error`` is the standard error of ``log_volume`` (delta method)."""

    log_volume: float
    std_error: float
    method: str
    proposals: int = 0
    accepted: int = 0
    spec: Optional[MarginSpec] = None
    box_log_volume: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def volume(self) -> float:
        return math.exp(self.log_volume)

    @property
    def volume_std_error(self) -> float:
        return self.volume * self.std_error

    def to_dict(self) -> dict:
        return {
            "log_volume": self.log_volume,
            "std_error": self.std_error,
            "method": self.method,
            "proposals": self.proposals,
            "accepted": self.accepted,
            "spec": self.spec.to_dict() if self.spec is not None else None,
        }


def complete_margins(x: np.ndarray, spec: MarginSpec) -> np.ndarray:
    """Fill in the last row and column of ``(..., m-1, n-1)`` free blocks."""
    a, b = spec.row_sums, spec.col_sums
    m, n = spec.shape
    lead = x.shape[:-2]
    full = np.empty(lead + (m, n))
    full[..., : m - 1, : n - 1] = x
    full[..., : m - 1, n - 1] = a[: m - 1] - x.sum(axis=-1)
    full[..., m - 1, :] = b - full[..., : m - 1, :].sum(axis=-2)
    return full


def mc_volume(
    spec: MarginSpec,
    proposals: int,
    seed: int,
    stream_index: int = 0,
    chunk: int = 1 << 17,
) -> VolumeEstimate:
    """Rejection estimate of the free-block volume of ``p(a, b)``.

    Free entries are drawn uniformly in the box ``prod [0, min(a_i, b_j)]``
    and accepted when the completed matrix is nonnegative.
    """
    m, n = spec.shape
    dim = spec.free_dim
    if dim > MC_MAX_FREE_DIM:
        raise ValueError(f"free dimension {dim} exceeds the rejection limit {MC_MAX_FREE_DIM}")
    if proposals < 1:
        raise ValueError("proposals must be positive")
    if dim == 0:
        return VolumeEstimate(0.0, 0.0, "rejection", proposals, proposals, spec)
    box = np.minimum.outer(spec.row_sums[: m - 1], spec.col_sums[: n - 1])
    log_box = float(np.log(box).sum())
    stream = seeded_stream(seed, stream_index)
    accepted = 0
    done = 0
    while done < proposals:
        size = min(chunk, proposals - done)
        x = stream.random((size, m - 1, n - 1)) * box
        accepted += int(kernels.transport_accept(x, spec.row_sums, spec.col_sums).sum(dtype=np.int64))
        done += size
    if accepted == 0:
        raise RuntimeError(f"no proposal accepted out of {proposals}")
    p = accepted / proposals
    rel_se = math.sqrt((1.0 - p) / (p * proposals))
    return VolumeEstimate(math.log(p) + log_box, rel_se, "rejection", proposals, accepted, spec, log_box)


def canfield_mckay_birkhoff(n: int) -> float:
    """Asymptotic log-volume of the Birkhoff polytope (``o(1)`` set to 0)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    ln = math.log(n)
    return -(n - 1) * ln - (n - 0.5) * math.log(2 * math.pi) - (n - 1) ** 2 * ln + 1.0 / 3.0 + n * n


def canfield_mckay_rect(m: int, n: int, total: Optional[float] = None) -> float:
    """Asymptotic log-volume of ``m x n`` matrices with constant margins.

    The formula is for row sums 1 and column sums ``m/n`` (total ``m``);
    another ``total`` is reached by homogeneity, adding
    ``(m-1)(n-1) log(total/m)``.
    """
    if m < 2 or n < 2:
        raise ValueError("m and n must be >= 2")
    value = (
        -0.5 * (n - 1) * math.log(m)
        - 0.5 * (m - 1) * math.log(n)
        - 0.5 * (m + n - 1) * math.log(2 * math.pi)
        - (m - 1) * (n - 1) * math.log(n)
        + 1.0 / 3.0
        + m * n
        - (m - n) ** 2 / (12.0 * m * n)
    )
    if total is not None:
        value += (m - 1) * (n - 1) * math.log(total / m)
    return value


def _density_inclusion_exclusion(a: np.ndarray, r: np.ndarray, with_error: bool = False):
    """Exact-summed formula; ``with_error`` adds a rounding bound per point."""
    m = a.size
    if m == 1:
        f = np.where((r >= 0) & (r <= a[0]), 1.0 / a[0], 0.0)
        return (f, np.zeros(r.shape)) if with_error else f
    shifts = []
    signs = []
    for size in range(m + 1):
        for subset in itertools.combinations(range(m), size):
            shifts.append(float(sum(a[list(subset)])))
            signs.append(-1.0 if size % 2 else 1.0)
    shifts = np.array(shifts)
    signs = np.array(signs)
    norm = math.factorial(m - 1) * float(np.prod(a))
    out = np.empty(r.shape)
    err = np.empty(r.shape)
    for idx, x in np.ndenumerate(r):
        terms = signs * np.maximum(x - shifts, 0.0) ** (m - 1)
        out[idx] = math.fsum(terms) / norm
        # each power carries up to m relative roundings before the exact sum
        err[idx] = 2 * m * np.finfo(float).eps * float(np.abs(terms).sum()) / norm
    out = np.maximum(out, 0.0)
    return (out, err) if with_error else out


def _density_convolution(a: np.ndarray, r: np.ndarray) -> np.ndarray:
    t = float(a.sum())
    h = t / CONVOLUTION_STEPS
    dens = None
    for ai in a:
        # whole cells plus a fractional last cell keep the exact width a_i
        width = ai / h
        k = int(width)
        frac = width - k
        piece = np.ones(k + (frac > 0))
        if frac > 0:
            piece[-1] = frac
        piece /= width
        dens = piece if dens is None else signal.fftconvolve(dens, piece)
    centers = (np.arange(dens.size) + 0.5 * a.size) * h
    return np.interp(r, centers, dens / h, left=0.0, right=0.0)


def uniform_sum_density(bounds: Sequence[float], r) -> np.ndarray:
    """Density at ``r`` of a sum of independent ``U[0, a_i]``.

    Up to 12 terms the piecewise-polynomial inclusion-exclusion formula is
    evaluated with exact summation; longer sums fall back to a grid
    convolution with step ``t / 2^16``.
    """
    a = np.asarray(bounds, dtype=float).ravel()
    if a.size == 0 or np.any(a <= 0):
        raise ValueError("bounds must be a nonempty vector of positive values")
    r_arr = np.asarray(r, dtype=float)
    t = float(a.sum())
    inside = (r_arr >= 0) & (r_arr <= t)
    if a.size <= INCLUSION_EXCLUSION_MAX_TERMS:
        f = _density_inclusion_exclusion(a, np.atleast_1d(r_arr)).reshape(r_arr.shape)
    else:
        f = _density_convolution(a, r_arr)
    f = np.where(inside, f, 0.0)
    return f if f.ndim else float(f)


@dataclass
class MaxAtHalfReport:
    ok: bool
    argmax: float
    half: float
    cell: float
    log_concave: bool
    max_second_difference: float

    def __bool__(self):
        return self.ok

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_max_at_half(bounds: Sequence[float], grid: int = 101, rel_tie: float = 1e-12) -> MaxAtHalfReport:
    """Check that the uniform-sum density peaks at half the total mass.

    Passes when some grid maximizer lies within one grid cell of ``t/2``
    and the interior second differences of ``log f`` are all ``<= 1e-9``.
    Values within ``rel_tie`` of the top, or within the float rounding
    bound of the density formula, count as maximizers, so a flat top is
    a tie rather than noise.
    """
    if grid < 3:
        raise ValueError("grid must be >= 3")
    a = np.asarray(bounds, dtype=float)
    t = float(a.sum())
    r = np.linspace(0.0, t, grid)
    if a.size <= INCLUSION_EXCLUSION_MAX_TERMS:
        f, err = _density_inclusion_exclusion(a, r, with_error=True)
    else:
        f = uniform_sum_density(a, r)
        err = np.full(r.shape, 1e-6 * f.max())
    cell = t / (grid - 1)
    k = int(f.argmax())
    top = f[k]
    maximizers = r[f >= top * (1.0 - rel_tie) - err - err[k]]
    nearest = maximizers[np.argmin(np.abs(maximizers - t / 2))]
    peak_ok = abs(nearest - t / 2) <= cell * (1 + 1e-12)
    inner = f[1:-1]
    positive = inner > 0
    if positive.sum() >= 3:
        logs = np.log(inner[positive])
        second = logs[2:] - 2 * logs[1:-1] + logs[:-2]
        worst = float(second.max())
    else:
        worst = float("-inf")
    concave = worst <= 1e-9
    return MaxAtHalfReport(bool(peak_ok and concave), float(nearest), t / 2, cell, bool(concave), worst)


@dataclass
class MaximalityReport:
    m: int
    n: int
    constant: VolumeEstimate
    trials: list
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "constant": self.constant.to_dict(),
            "trials": self.trials,
            "violations": self.violations,
        }


def perturbed_margins(m: int, n: int, total: float, rng: np.random.Generator, concentration: float = 50.0) -> MarginSpec:
    """Symmetric-Dirichlet perturbation of constant margins at fixed total."""
    rows = total * rng.dirichlet(np.full(m, concentration))
    cols = total * rng.dirichlet(np.full(n, concentration))
    cols *= rows.sum() / cols.sum()
    return MarginSpec(rows, cols)


def verify_constant_margin_maximality(
    m: int,
    n: int,
    trials: int,
    seed: int,
    proposals: int = 10**6,
    concentration: float = 50.0,
    sigmas: float = 3.0,
) -> MaximalityReport:
    """Compare random margins against constant margins of the same total.

    A trial is a violation when its volume exceeds the constant-margin
    volume by more than ``sigmas`` combined standard errors.
    """
    if (m - 1) * (n - 1) > 9:
        raise ValueError("(m-1)(n-1) must be <= 9")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    total = float(m)
    const = mc_volume(MarginSpec.constant(m, n, total), proposals, seed, stream_index=0)
    rng = seeded_stream(seed, 10**6)
    rows, violations = [], []
    for k in range(trials):
        spec = perturbed_margins(m, n, total, rng, concentration)
        est = mc_volume(spec, proposals, seed, stream_index=k + 1)
        slack = sigmas * math.hypot(est.volume_std_error, const.volume_std_error)
        excess = est.volume - const.volume
        row = {
            "trial": k,
            "row_sums": spec.row_sums.tolist(),
            "col_sums": spec.col_sums.tolist(),
            "volume": est.volume,
            "std_error": est.volume_std_error,
            "excess_sigma": excess / math.hypot(est.volume_std_error, const.volume_std_error),
        }
        rows.append(row)
        if excess > slack:
            violations.append(row)
    return MaximalityReport(m, n, const, rows, violations)


def radon_nikodym_ratio(r: int, n: int) -> float:
    """Asymptotic bound ``e^{r/2}`` on the density of ``r`` rows against
    independent uniform rows."""
    if not 1 <= r < n:
        raise ValueError("need 1 <= r < n")
    return math.exp(r / 2.0)


def binned_density_ratio(x, y, bins: int = 40, lo: float = 0.0, hi: Optional[float] = None, min_count: int = 100):
    """Histogram ratio ``p_x / p_y`` on bins where both counts reach ``min_count``.

    Returns ``(max_ratio, ratios, edges, mask)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if hi is None:
        hi = float(np.quantile(np.concatenate([x, y]), 0.999))
    edges = np.linspace(lo, hi, bins + 1)
    cx, _ = np.histogram(x, edges)
    cy, _ = np.histogram(y, edges)
    mask = (cx >= min_count) & (cy >= min_count)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = (cx / x.size) / (cy / y.size)
    best = float(ratios[mask].max()) if mask.any() else float("nan")
    return best, ratios, edges, mask
