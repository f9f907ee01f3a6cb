"""Samplers for the Birkhoff polytope and the comparison models.

The Gibbs chain resamples a random 2x2 block uniformly given its row and
column sums. Each move consumes exactly three uniforms from the chain's
stream (row pair, column pair, new value), so a chain is reproducible from
``(seed, stream_index)`` and identical under both kernel backends.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from birkhoff_lab import kernels
from birkhoff_lab.core import (
    CorruptedStateError,
    SampleBatch,
    SamplerId,
    check_doubly_stochastic,
    seeded_stream,
    sinkhorn_repair,
)

CHUNK_MOVES = 1 << 16
REJECTION_MAX_N = 5
REJECTION_PROPOSAL_CAP = 10**9
VERTEX_MIXTURE_MAX_N = 8


def default_burn_in(n: int) -> int:
    return 10 * n * n * math.ceil(math.log(n)) if n > 1 else 0


def default_spacing(n: int) -> int:
    return 8 * n * n


def default_repair_period(n: int) -> int:
    return 10 * n * n


@dataclass(frozen=True)
class GibbsConfig:
    """Chain length parameters; ``None`` picks the size-based default."""

    n: int
    burn_in: Optional[int] = None
    spacing: Optional[int] = None
    repair_period: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", default_burn_in(self.n))
        if self.spacing is None:
            object.__setattr__(self, "spacing", default_spacing(self.n))
        if self.repair_period is None:
            object.__setattr__(self, "repair_period", default_repair_period(self.n))
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.spacing < 1:
            raise ValueError("spacing must be >= 1")
        if self.repair_period < 1:
            raise ValueError("repair_period must be >= 1")


@dataclass(frozen=True)
class BlockMove:
    rows: Tuple[int, int]
    cols: Tuple[int, int]
    old_value: float
    new_value: float
    interval: Tuple[float, float]


def decode_pair(u: float, n: int) -> Tuple[int, int]:
    """Map a uniform draw to an unordered pair ``i < i'`` of ``range(n)``."""
    m = n * (n - 1)
    k = min(int(u * m), m - 1)
    i, r = divmod(k, n - 1)
    i2 = r + 1 if r >= i else r
    return (i, i2) if i < i2 else (i2, i)


def feasible_interval(a: float, b: float, c: float, d: float) -> Tuple[float, float]:
    """Range of the new top-left value of block ``(a, b; c, d)``."""
    return max(0.0, a - d), a + min(b, c)


def gibbs_step(M: np.ndarray, stream: np.random.Generator) -> Tuple[np.ndarray, BlockMove]:
    """One block move applied to a copy of ``M``."""
    M = np.array(M, dtype=float, order="C")
    n = M.shape[0]
    if n < 2:
        raise ValueError("a block move needs n >= 2")
    report = check_doubly_stochastic(M, 1e-8)
    if not report:
        raise CorruptedStateError(
            f"input not doubly stochastic (violation {report.max_violation:.3g} at {report.location})"
        )
    u = stream.random((1, 3))
    i, i2 = decode_pair(u[0, 0], n)
    j, j2 = decode_pair(u[0, 1], n)
    old = float(M[i, j])
    interval = feasible_interval(old, M[i, j2], M[i2, j], M[i2, j2])
    if kernels.gibbs_moves(M, u) >= 0:
        raise CorruptedStateError(f"negative feasible interval {interval} in block {(i, i2)}x{(j, j2)}")
    return M, BlockMove((i, i2), (j, j2), old, float(M[i, j]), interval)


def gibbs_chain(
    cfg: GibbsConfig,
    count: int,
    seed: int,
    stream_index: int = 0,
    initial: Optional[np.ndarray] = None,
) -> SampleBatch:
    """Run one chain and keep ``count`` states.

    The first state is kept after ``burn_in + spacing`` moves, then one
    every ``spacing`` moves. Every ``repair_period`` moves the margins are
    checked and, if off by more than 1e-12, restored with
    :func:`sinkhorn_repair`.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    n = cfg.n
    stream = seeded_stream(seed, stream_index)
    if initial is None:
        M = np.full((n, n), 1.0 / n)
    else:
        M = np.array(initial, dtype=float, order="C")
        if M.shape != (n, n):
            raise ValueError(f"initial state has shape {M.shape}, expected {(n, n)}")
    out = np.empty((count, n, n))
    meta = {"stream_index": stream_index, "repair_period": cfg.repair_period, "repairs": 0}
    if n == 1:
        out[:] = 1.0
        return SampleBatch(out, SamplerId.GIBBS, seed, cfg.burn_in, cfg.spacing, meta)

    total = cfg.burn_in + count * cfg.spacing
    next_keep = cfg.burn_in + cfg.spacing
    next_repair = cfg.repair_period
    kept = 0
    done = 0
    buf = np.empty((0, 3))
    pos = 0
    while done < total:
        if pos == buf.shape[0]:
            buf = stream.random((min(CHUNK_MOVES, total - done), 3))
            pos = 0
        step = min(next_keep, next_repair) - done
        step = min(step, buf.shape[0] - pos)
        bad = kernels.gibbs_moves(M, buf[pos:pos + step])
        if bad >= 0:
            raise CorruptedStateError(f"negative feasible interval at move {done + bad}")
        pos += step
        done += step
        if done == next_repair:
            rows, cols = M.sum(axis=1), M.sum(axis=0)
            if max(np.abs(rows - 1.0).max(), np.abs(cols - 1.0).max()) > 1e-12 or M.min() < 0:
                M = sinkhorn_repair(M)
                meta["repairs"] += 1
            next_repair += cfg.repair_period
        if done == next_keep:
            out[kept] = M
            kept += 1
            next_keep += cfg.spacing
    _check_kept(out, 1e-9)
    meta["moves"] = done
    return SampleBatch(out, SamplerId.GIBBS, seed, cfg.burn_in, cfg.spacing, meta)


def _check_kept(out: np.ndarray, tol: float) -> None:
    dev = np.maximum(np.abs(out.sum(axis=2) - 1.0).max(axis=1), np.abs(out.sum(axis=1) - 1.0).max(axis=1))
    dev = np.maximum(dev, -out.min(axis=(1, 2)))
    for k in np.flatnonzero(dev > tol / 2):
        report = check_doubly_stochastic(out[k], tol)
        if not report:
            raise CorruptedStateError(
                f"kept state {k} drifted to {report.max_violation:.3g} at {report.location}"
            )


def complete_free_block(x: np.ndarray) -> np.ndarray:
    """Fill in the last row and column of ``(..., n-1, n-1)`` free blocks."""
    lead = x.shape[:-2]
    k = x.shape[-1]
    full = np.empty(lead + (k + 1, k + 1))
    full[..., :k, :k] = x
    full[..., :k, k] = 1.0 - x.sum(axis=-1)
    full[..., k, :] = 1.0 - full[..., :k, :].sum(axis=-2)
    return full


def rejection_exact(
    n: int,
    count: int,
    seed: int,
    stream_index: int = 0,
    allow_large: bool = False,
    proposal_cap: int = REJECTION_PROPOSAL_CAP,
    chunk: int = 1 << 17,
) -> Tuple[SampleBatch, float]:
    """Exact uniform samples by rejection from the unit cube of free entries.

    Returns the batch and ``accepted / proposed``, an estimate of the volume
    of the free-entry set inside ``[0, 1]^((n-1)^2)``.
    """
    if n < 1 or count < 1:
        raise ValueError("n and count must be positive")
    if n > REJECTION_MAX_N and not allow_large:
        raise ValueError(f"rejection sampling above n={REJECTION_MAX_N} needs allow_large=True")
    if n == 1:
        batch = SampleBatch(np.ones((count, 1, 1)), SamplerId.REJECTION, seed,
                            extra={"proposals": count, "accepted": count})
        return batch, 1.0
    stream = seeded_stream(seed, stream_index)
    ones = np.ones(n)
    kept = []
    have = 0
    proposals = 0
    accepted = 0
    while have < count:
        if proposals >= proposal_cap:
            if accepted == 0:
                raise RuntimeError(f"no acceptances after the proposal cap of {proposal_cap}")
            raise RuntimeError(f"proposal cap {proposal_cap} reached with {accepted} of {count} samples")
        size = min(chunk, proposal_cap - proposals)
        x = stream.random((size, n - 1, n - 1))
        ok = kernels.transport_accept(x, ones, ones).view(bool)
        proposals += size
        accepted += int(ok.sum())
        take = complete_free_block(x[ok][: count - have])
        kept.append(take)
        have += take.shape[0]
    batch = SampleBatch(np.concatenate(kept), SamplerId.REJECTION, seed,
                        extra={"proposals": proposals, "accepted": accepted})
    return batch, accepted / proposals


def permutation_matrices(n: int) -> np.ndarray:
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    P = np.zeros((perms.shape[0], n, n))
    rows = np.arange(n)
    for s, p in enumerate(perms):
        P[s, rows, p] = 1.0
    return P


def vertex_mixture(n: int, count: int, seed: int, stream_index: int = 0, chunk: int = 4096) -> SampleBatch:
    """Convex combinations of all ``n!`` permutation matrices.

    Weights are uniform on the simplex: normalized iid Exp(1) draws.
    """
    if n < 1 or count < 1:
        raise ValueError("n and count must be positive")
    if n > VERTEX_MIXTURE_MAX_N:
        raise ValueError(f"vertex_mixture materializes n! weights; n must be <= {VERTEX_MIXTURE_MAX_N}")
    stream = seeded_stream(seed, stream_index)
    P = permutation_matrices(n).reshape(-1, n * n)
    out = np.empty((count, n * n))
    for start in range(0, count, chunk):
        stop = min(start + chunk, count)
        w = stream.standard_exponential((stop - start, P.shape[0]))
        w /= w.sum(axis=1, keepdims=True)
        out[start:stop] = w @ P
    return SampleBatch(out.reshape(count, n, n), SamplerId.VERTEX_MIXTURE, seed)


def iid_exponential_matrix(n: int, seed: int, stream_index: int = 0) -> np.ndarray:
    """``n x n`` matrix of independent mean-one exponentials."""
    if n < 1:
        raise ValueError("n must be positive")
    return seeded_stream(seed, stream_index).standard_exponential((n, n))


def iid_exponential_batch(n: int, count: int, seed: int, stream_index: int = 0) -> SampleBatch:
    stream = seeded_stream(seed, stream_index)
    return SampleBatch(stream.standard_exponential((count, n, n)), SamplerId.IID_EXPONENTIAL, seed)


def dirichlet_row_matrix(n: int, seed: int, stream_index: int = 0) -> np.ndarray:
    """Rows independent and uniform on the simplex."""
    if n < 1:
        raise ValueError("n must be positive")
    return dirichlet_row_batch(n, 1, seed, stream_index).matrices[0].copy()


def dirichlet_row_batch(n: int, count: int, seed: int, stream_index: int = 0) -> SampleBatch:
    stream = seeded_stream(seed, stream_index)
    e = stream.standard_exponential((count, n, n))
    e /= e.sum(axis=2, keepdims=True)
    return SampleBatch(e, SamplerId.DIRICHLET_ROWS, seed)
