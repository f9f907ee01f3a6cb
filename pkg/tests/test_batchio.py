import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from birkhoff_lab.batchio import (
    HEADER,
    BatchDriftWarning,
    BatchFormatError,
    BatchHeaderError,
    BatchTruncatedError,
    decode_batch,
    encode_batch,
    load_batch,
    persist_batch,
)
from birkhoff_lab.core import SampleBatch, SamplerId
from birkhoff_lab.samplers import GibbsConfig, gibbs_chain, iid_exponential_batch


def test_header_size():
    assert HEADER.size == 45


def test_round_trip_bit_identical(tmp_path):
    batch = gibbs_chain(GibbsConfig(5, burn_in=100, spacing=13), 7, seed=2**63 + 5)
    path = tmp_path / "b.bdsm"
    persist_batch(batch, path)
    back = load_batch(path)
    assert back.matrices.tobytes() == batch.matrices.tobytes()
    assert (back.seed, back.sampler_id, back.burn_in, back.spacing) == (batch.seed, SamplerId.GIBBS, 100, 13)
    assert not (tmp_path / "b.bdsm.part").exists()


@given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**64 - 1), st.sampled_from(list(SamplerId)))
@settings(max_examples=40, deadline=None)
def test_round_trip_property(n, count, seed, sampler):
    mats = np.random.default_rng(seed % 2**32).random((count, n, n))
    batch = SampleBatch(mats, sampler, seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BatchDriftWarning)
        back = decode_batch(encode_batch(batch))
    assert np.array_equal(back.matrices, batch.matrices)
    assert back.seed == seed and back.sampler_id == sampler


def test_truncated_payload_names_sizes():
    data = encode_batch(gibbs_chain(GibbsConfig(3, burn_in=10, spacing=2), 2, 0))
    with pytest.raises(BatchTruncatedError) as info:
        decode_batch(data[:-20])
    assert info.value.expected == 2 * 9 * 8
    assert info.value.actual == 2 * 9 * 8 - 20
    assert "144" in str(info.value) and "124" in str(info.value)


def test_wrong_magic():
    data = encode_batch(gibbs_chain(GibbsConfig(2, burn_in=1, spacing=1), 1, 0))
    with pytest.raises(BatchFormatError):
        decode_batch(b"XXXXX" + data[5:])


def test_short_header():
    data = encode_batch(gibbs_chain(GibbsConfig(2, burn_in=1, spacing=1), 1, 0))
    with pytest.raises(BatchHeaderError):
        decode_batch(data[:20])


def test_bad_header_fields():
    good = encode_batch(gibbs_chain(GibbsConfig(2, burn_in=1, spacing=1), 1, 0))
    zero_n = good[:5] + (0).to_bytes(4, "little") + good[9:]
    with pytest.raises(BatchHeaderError):
        decode_batch(zero_n)
    bad_sampler = good[:25] + (99).to_bytes(4, "little") + good[29:]
    with pytest.raises(BatchHeaderError):
        decode_batch(bad_sampler)


def test_drift_warns_for_doubly_stochastic_samplers():
    mats = np.full((1, 3, 3), 1 / 3)
    mats[0, 0, 0] += 1e-4
    with pytest.warns(BatchDriftWarning):
        decode_batch(encode_batch(SampleBatch(mats, SamplerId.GIBBS, 0)))


def test_no_drift_warning_for_iid_model():
    batch = iid_exponential_batch(4, 2, 0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        decode_batch(encode_batch(batch))


def test_seed_must_fit():
    batch = SampleBatch(np.ones((1, 1, 1)), SamplerId.GIBBS, -1)
    with pytest.raises(ValueError):
        encode_batch(batch)
