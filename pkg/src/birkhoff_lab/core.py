"""Domain types, invariant checkers and seeded randomness.

Matrices are plain ``numpy.ndarray`` objects of shape ``(n, n)``; a batch
of samples is a ``(count, n, n)`` array held by :class:`SampleBatch`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from birkhoff_lab.kernels import compensated_sums

CLAMP_TOL = 1e-12
COMPENSATED_ABOVE = 64


class CorruptedStateError(ValueError):
    """A matrix holds values that no valid computation could produce."""


class RepairError(RuntimeError):
    """Sinkhorn repair did not reach the requested tolerance."""

    def __init__(self, message: str, violation: float):
        super().__init__(message)
        self.violation = violation


class SamplerId(enum.IntEnum):
    GIBBS = 1
    REJECTION = 2
    VERTEX_MIXTURE = 3
    IID_EXPONENTIAL = 4
    DIRICHLET_ROWS = 5


@dataclass(frozen=True)
class MarginSpec:
    """Row sums ``a_i`` and column sums ``b_j`` of a transportation polytope."""

    row_sums: np.ndarray
    col_sums: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.row_sums, dtype=float).copy()
        cols = np.asarray(self.col_sums, dtype=float).copy()
        if rows.ndim != 1 or cols.ndim != 1 or rows.size < 1 or cols.size < 1:
            raise ValueError("margins must be nonempty vectors")
        if np.any(rows <= 0) or np.any(cols <= 0) or not (
            np.all(np.isfinite(rows)) and np.all(np.isfinite(cols))
        ):
            raise ValueError("margins must be finite and strictly positive")
        t = rows.sum()
        if abs(t - cols.sum()) > 1e-12 * t:
            raise ValueError(
                f"row total {t!r} and column total {cols.sum()!r} differ"
            )
        rows.flags.writeable = False
        cols.flags.writeable = False
        object.__setattr__(self, "row_sums", rows)
        object.__setattr__(self, "col_sums", cols)

    @classmethod
    def constant(cls, m: int, n: int, total: Optional[float] = None) -> "MarginSpec":
        """Constant margins ``t/m`` and ``t/n`` (``t`` defaults to ``m``)."""
        t = float(m if total is None else total)
        return cls(np.full(m, t / m), np.full(n, t / n))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.row_sums.size, self.col_sums.size

    @property
    def total(self) -> float:
        return float(self.row_sums.sum())

    @property
    def free_dim(self) -> int:
        m, n = self.shape
        return (m - 1) * (n - 1)

    def scaled(self, factor: float) -> "MarginSpec":
        return MarginSpec(self.row_sums * factor, self.col_sums * factor)

    def to_dict(self) -> dict:
        return {"row_sums": self.row_sums.tolist(), "col_sums": self.col_sums.tolist()}


@dataclass(frozen=True)
class SampleBatch:
    """Samples of one sampler run together with their provenance."""

    matrices: np.ndarray
    sampler_id: SamplerId
    seed: int
    burn_in: int = 0
    spacing: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2] or mats.shape[0] < 1:
            raise ValueError(f"expected a (count, n, n) array, got {mats.shape}")
        mats = np.ascontiguousarray(mats)
        mats.flags.writeable = False
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "sampler_id", SamplerId(self.sampler_id))

    @property
    def n(self) -> int:
        return self.matrices.shape[1]

    @property
    def count(self) -> int:
        return self.matrices.shape[0]

    def __len__(self):
        return self.count

    def __iter__(self):
        return iter(self.matrices)

    def entries(self, i: int, j: int) -> np.ndarray:
        """Entry ``(i, j)`` (0-based) of every matrix."""
        return self.matrices[:, i, j]

    @staticmethod
    def concatenate(batches) -> "SampleBatch":
        batches = list(batches)
        first = batches[0]
        for b in batches[1:]:
            if (b.n, b.sampler_id, b.seed) != (first.n, first.sampler_id, first.seed):
                raise ValueError("batches differ in n, sampler or seed")
        return SampleBatch(
            np.concatenate([b.matrices for b in batches]),
            first.sampler_id,
            first.seed,
            first.burn_in,
            first.spacing,
            dict(first.extra),
        )


class EmpiricalDistribution:
    """Sorted sample with ECDF and quantile accessors."""

    def __init__(self, values):
        v = np.sort(np.asarray(values, dtype=float).ravel())
        if v.size == 0:
            raise ValueError("empirical distribution needs at least one value")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite sample value")
        v.flags.writeable = False
        self.values = v

    @property
    def count(self) -> int:
        return self.values.size

    def __len__(self):
        return self.count

    def ecdf(self, x):
        """Fraction of the sample ``<= x``."""
        return np.searchsorted(self.values, x, side="right") / self.count

    def quantile(self, q):
        """Left-continuous inverse of the ECDF."""
        q = np.asarray(q, dtype=float)
        idx = np.clip(np.ceil(q * self.count).astype(int) - 1, 0, self.count - 1)
        return self.values[idx]

    def mean(self) -> float:
        return float(self.values.mean())

    def map(self, fn) -> "EmpiricalDistribution":
        return EmpiricalDistribution(fn(self.values))

    def __repr__(self):
        return f"EmpiricalDistribution(count={self.count})"


def margin_sums(M: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Row and column sums; compensated summation above n = 64."""
    M = np.ascontiguousarray(M, dtype=float)
    if max(M.shape) > COMPENSATED_ABOVE:
        return compensated_sums(M)
    return M.sum(axis=1), M.sum(axis=0)


@dataclass(frozen=True)
class StochasticityReport:
    ok: bool
    max_violation: float
    location: Tuple[str, Tuple[int, ...]]
    tol: float

    def __bool__(self):
        return self.ok


def check_doubly_stochastic(M: np.ndarray, tol: float = 1e-9) -> StochasticityReport:
    """Check row/column sums against 1 and entries against ``-tol``.

    The report's ``location`` is ``("row", (i,))``, ``("col", (j,))`` or
    ``("entry", (i, j))`` for the worst offender.

    Raises
    ------
    CorruptedStateError
        If any entry is NaN or infinite.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError(f"expected a nonempty square matrix, got shape {M.shape}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not np.all(np.isfinite(M)):
        bad = np.argwhere(~np.isfinite(M))[0]
        raise CorruptedStateError(f"non-finite entry at {tuple(int(x) for x in bad)}")
    rows, cols = margin_sums(M)
    row_dev = np.abs(rows - 1.0)
    col_dev = np.abs(cols - 1.0)
    neg = -M
    candidates = [
        (float(row_dev.max()), ("row", (int(row_dev.argmax()),))),
        (float(col_dev.max()), ("col", (int(col_dev.argmax()),))),
    ]
    k = int(neg.argmax())
    candidates.append(
        (float(max(neg.flat[k], 0.0)), ("entry", tuple(int(x) for x in np.unravel_index(k, M.shape))))
    )
    worst, loc = max(candidates, key=lambda c: c[0])
    return StochasticityReport(worst <= tol, worst, loc, tol)


def clamp_negatives(M: np.ndarray) -> np.ndarray:
    """Zero out rounding-level negatives in ``[-1e-12, 0)``."""
    M = np.array(M, dtype=float)
    M[(M < 0) & (M >= -CLAMP_TOL)] = 0.0
    return M


def sinkhorn_repair(M: np.ndarray, target_tol: float = 1e-12, max_iters: int = 1000) -> np.ndarray:
    """Restore exact unit margins by alternating row/column normalization.

    Meant for float drift only: the input must already be within 1e-6 of
    doubly stochastic. A matrix that passes at ``target_tol`` is returned
    unchanged.
    """
    A = clamp_negatives(M)
    if np.any(A < 0):
        raise CorruptedStateError(f"negative entry {A.min()!r} beyond clamp tolerance")
    report = check_doubly_stochastic(A, target_tol)
    if report.ok:
        return A
    if report.max_violation > 1e-6:
        raise ValueError(
            f"margin violation {report.max_violation:.3g} too large for drift repair"
        )
    for _ in range(max_iters):
        rows, _ = margin_sums(A)
        A /= rows[:, None]
        _, cols = margin_sums(A)
        A /= cols[None, :]
        report = check_doubly_stochastic(A, target_tol)
        if report.ok:
            return A
    raise RepairError(
        f"sinkhorn repair stalled after {max_iters} iterations "
        f"(violation {report.max_violation:.3g})",
        report.max_violation,
    )


def seeded_stream(seed: int, stream_index: int = 0) -> np.random.Generator:
    """Independent reproducible generator for ``(seed, stream_index)``."""
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(stream_index),))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed for a labelled sub-task."""
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])
