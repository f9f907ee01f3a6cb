"""Binary sample-batch files.

Layout (little-endian): magic ``b"BDSM1"``, u32 n, u64 count, u64 seed,
u32 sampler_id, u64 burn_in, u64 spacing, then ``count * n * n`` float64
values, row-major, one matrix after another.
"""

from __future__ import annotations

import os
import struct
import warnings

import numpy as np

from birkhoff_lab.core import SampleBatch, SamplerId

MAGIC = b"BDSM1"
HEADER = struct.Struct("<5sIQQIQQ")
DRIFT_TOL = 1e-6
_DOUBLY_STOCHASTIC = {SamplerId.GIBBS, SamplerId.REJECTION, SamplerId.VERTEX_MIXTURE}


class BatchFormatError(ValueError):
    """Wrong magic bytes."""


class BatchHeaderError(ValueError):
    """Header missing, short, or with impossible field values."""


class BatchTruncatedError(ValueError):
    """Payload length differs from what the header promises."""

    def __init__(self, expected: int, actual: int):
        super().__init__(f"payload holds {actual} bytes, header promises {expected}")
        self.expected = expected
        self.actual = actual


class BatchDriftWarning(UserWarning):
    pass


def _u64(value: int, name: str) -> int:
    value = int(value)
    if not 0 <= value < 1 << 64:
        raise ValueError(f"{name}={value} does not fit in u64")
    return value


def encode_batch(batch: SampleBatch) -> bytes:
    header = HEADER.pack(
        MAGIC,
        batch.n,
        batch.count,
        _u64(batch.seed, "seed"),
        int(batch.sampler_id),
        _u64(batch.burn_in, "burn_in"),
        _u64(batch.spacing, "spacing"),
    )
    return header + batch.matrices.astype("<f8", copy=False).tobytes(order="C")


def decode_batch(data: bytes) -> SampleBatch:
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise BatchFormatError(f"bad magic {bytes(data[:len(MAGIC)])!r}, expected {MAGIC!r}")
    if len(data) < HEADER.size:
        raise BatchHeaderError(f"header needs {HEADER.size} bytes, file has {len(data)}")
    _, n, count, seed, sampler_id, burn_in, spacing = HEADER.unpack_from(data)
    if n < 1 or count < 1:
        raise BatchHeaderError(f"invalid dimensions n={n}, count={count}")
    try:
        sampler = SamplerId(sampler_id)
    except ValueError:
        raise BatchHeaderError(f"unknown sampler id {sampler_id}") from None
    expected = count * n * n * 8
    actual = len(data) - HEADER.size
    if actual != expected:
        raise BatchTruncatedError(expected, actual)
    mats = np.frombuffer(data, dtype="<f8", offset=HEADER.size).astype(float).reshape(count, n, n)
    batch = SampleBatch(mats, sampler, seed, burn_in, spacing)
    if sampler in _DOUBLY_STOCHASTIC:
        dev = max(
            float(np.abs(mats.sum(axis=2) - 1.0).max()),
            float(np.abs(mats.sum(axis=1) - 1.0).max()),
            float(-mats.min()),
        )
        if not np.isfinite(dev) or dev > DRIFT_TOL:
            warnings.warn(f"batch drifts {dev:.3g} from doubly stochastic", BatchDriftWarning, stacklevel=3)
    return batch


def persist_batch(batch: SampleBatch, path) -> None:
    tmp = f"{os.fspath(path)}.part"
    with open(tmp, "wb") as fh:
        fh.write(encode_batch(batch))
    os.replace(tmp, path)


def load_batch(path) -> SampleBatch:
    with open(path, "rb") as fh:
        return decode_batch(fh.read())
