import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from birkhoff_lab.core import CorruptedStateError, SampleBatch, SamplerId, seeded_stream
from birkhoff_lab.laws import Beta, Exp1, QuarterCircle, SquaredQuarterCircle, UniformInterval
from birkhoff_lab.samplers import GibbsConfig, dirichlet_row_batch, gibbs_chain, iid_exponential_batch
from birkhoff_lab.statistics import (
    MomentSpec,
    energy_distance,
    joint_moments,
    kolmogorov_quantile,
    ks_distance,
    ks_two_sample,
    lag_autocorrelation,
    max_abs_correlation,
    max_entry_stat,
    mixing_profile,
    singular_values,
    spectral_test,
    submatrix_independence_test,
    tv_binned,
    tv_binned_two_sample_2d,
    tv_binned_with_error,
    wasserstein1,
    wasserstein1_two_sample,
)

from oracles import jacobi_singular_values, kolmogorov_sf, quarter_circle_moments, tv_to_uniform_rows, w1_by_quadrature

LAWS = [Exp1(), Beta(2.0, 4.0), QuarterCircle(), SquaredQuarterCircle(), UniformInterval(-1.0, 3.0)]


# -- reference laws -----------------------------------------------------------


@pytest.mark.parametrize("law", LAWS, ids=lambda l: type(l).__name__)
def test_law_density_integrates_to_cdf(law):
    lo = law.support[0]
    for x in (0.3, 1.0, 1.7):
        if law.support[0] < x < law.support[1]:
            val, _ = integrate.quad(law.density, lo, x, limit=200)
            assert val == pytest.approx(float(law.cdf(x)), abs=1e-7)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: type(l).__name__)
def test_law_partial_mean_matches_quadrature(law):
    lo = law.support[0]
    for x in (0.5, 1.2, 1.9):
        if law.support[0] < x < law.support[1]:
            val, _ = integrate.quad(lambda y: y * law.density(y), lo, x, limit=200)
            assert float(law.partial_mean(x)) == pytest.approx(val, abs=1e-7)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: type(l).__name__)
def test_law_ppf_inverts_cdf(law):
    q = np.array([0.01, 0.25, 0.5, 0.9, 0.999])
    assert np.allclose(law.cdf(law.ppf(q)), q, atol=1e-10)


def test_quarter_circle_closed_forms():
    qc = QuarterCircle()
    assert qc.mean() == pytest.approx(8 / (3 * math.pi), rel=1e-14)
    # even moments are Catalan numbers
    for k in (1, 2, 3):
        val, _ = integrate.quad(lambda x: x ** (2 * k) * qc.density(x), 0, 2)
        assert val == pytest.approx(quarter_circle_moments(k), rel=1e-8)


def test_squared_law_is_image_of_quarter_circle():
    qc, sq = QuarterCircle(), SquaredQuarterCircle()
    x = np.linspace(0.05, 1.95, 30)
    assert np.allclose(sq.cdf(x * x), qc.cdf(x), atol=1e-13)
    assert sq.mean() == pytest.approx(1.0, rel=1e-12)


def test_beta_moments():
    b = Beta(2.0, 4.0)
    assert b.mean() == pytest.approx(1 / 3)
    assert b.variance() == pytest.approx(2 / 63)


# -- KS -----------------------------------------------------------------------


def test_ks_exact_quantiles():
    N = 1000
    law = Exp1()
    x = law.ppf((np.arange(1, N + 1) - 0.5) / N)
    assert ks_distance(x, law) <= 0.5 / N + 1e-12


def test_ks_point_mass_at_zero():
    assert ks_distance([0.0], Exp1()) == 1.0


def test_kolmogorov_quantile_matches_series():
    q = kolmogorov_quantile(0.05, 10**5) * math.sqrt(10**5)
    assert kolmogorov_sf(q) == pytest.approx(0.05, abs=1e-9)
    assert q == pytest.approx(1.3581, abs=1e-3)


def test_ks_exp_draws_within_kolmogorov_band():
    N = 10**5
    limit = kolmogorov_quantile(0.05, N)
    assert limit == pytest.approx(1.358 / math.sqrt(N), rel=1e-3)
    hits = sum(ks_distance(seeded_stream(40, r).standard_exponential(N), Exp1()) < limit for r in range(40))
    # Binomial(40, 0.95): at least 34 with probability > 0.99
    assert hits >= 34


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=60))
def test_ks_in_unit_interval(xs):
    v = ks_distance(xs, UniformInterval(-1, 1))
    assert 0.0 <= v <= 1.0


def test_ks_two_sample_matches_scipy():
    from scipy.stats import ks_2samp

    rng = np.random.default_rng(3)
    x, y = rng.random(500), rng.random(700) ** 1.1
    assert ks_two_sample(x, y) == pytest.approx(ks_2samp(x, y).statistic, abs=1e-15)


# -- TV -----------------------------------------------------------------------


def test_tv_of_law_sample_is_small():
    x = seeded_stream(2).standard_exponential(10**5)
    assert tv_binned(x, Exp1(), bins=64) < 0.02


def test_tv_constant_zero_sample():
    law = Exp1()
    bins, hi = 64, 12.0
    value = tv_binned(np.zeros(100), law, bins=bins, lo=0.0, hi=hi)
    first_bin = float(law.cdf(hi / bins))
    assert value == pytest.approx(1.0 - first_bin, abs=1e-12)


def test_tv_law_against_its_own_masses_is_zero():
    law = Beta(2.0, 4.0)
    edges = np.linspace(0, 1, 65)
    # a sample that places mass exactly proportional to the law's bin masses
    mass = np.diff(law.cdf(edges))
    counts = np.round(mass * 10**6).astype(int)
    mids = 0.5 * (edges[1:] + edges[:-1])
    sample = np.repeat(mids, counts)
    assert tv_binned(sample, law, bins=64, lo=0.0, hi=1.0) < 1e-5


def test_tv_bootstrap_error_positive_and_deterministic():
    x = seeded_stream(5).standard_exponential(5000)
    a = tv_binned_with_error(x, Exp1(), seed=1)
    b = tv_binned_with_error(x, Exp1(), seed=1)
    assert a == b and a[1] > 0


def test_tv_2d_identical_and_disjoint():
    rng = np.random.default_rng(0)
    xy = rng.random((1000, 2))
    assert tv_binned_two_sample_2d(xy, xy) == 0.0
    assert tv_binned_two_sample_2d(xy, xy + 10.0, bins=4) > 0.9


# -- W1 -----------------------------------------------------------------------


def test_w1_point_mass_at_zero_is_law_mean():
    assert wasserstein1(np.zeros(50), QuarterCircle()) == pytest.approx(8 / (3 * math.pi), rel=1e-12)


def test_w1_exact_quantiles_small():
    N = 2000
    law = QuarterCircle()
    x = law.ppf((np.arange(1, N + 1) - 0.5) / N)
    assert wasserstein1(x, law) <= 2.0 / N


@pytest.mark.parametrize("law,lo,hi", [(QuarterCircle(), -1.0, 3.0), (SquaredQuarterCircle(), -1.0, 5.0), (Exp1(), -1.0, 40.0)])
def test_w1_matches_quadrature(law, lo, hi):
    x = seeded_stream(7).random(300) * 3.0
    assert wasserstein1(x, law) == pytest.approx(w1_by_quadrature(x, law.cdf, lo, hi), abs=2e-5)


def test_w1_two_sample_identical():
    x = np.random.default_rng(0).random(100)
    assert wasserstein1_two_sample(x, x) == 0.0


# -- singular values ------------------------------------------------------------


def test_singular_values_barycenter_zero():
    assert np.allclose(singular_values(np.full((5, 5), 0.2)).values, 0.0, atol=1e-14)


def test_singular_values_identity():
    n = 6
    sv = singular_values(np.eye(n)).values
    assert sv[0] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(sv[1:], math.sqrt(n), rtol=1e-13)


@given(st.floats(0, 1))
def test_singular_values_two_by_two(a):
    M = np.array([[a, 1 - a], [1 - a, a]])
    sv = singular_values(M).values
    assert sv[0] == pytest.approx(0.0, abs=1e-12)
    assert sv[1] == pytest.approx(math.sqrt(2) * abs(2 * a - 1), abs=1e-12)


@pytest.mark.parametrize("n", [3, 8, 20])
def test_singular_values_match_jacobi(n):
    M = gibbs_chain(GibbsConfig(n), 1, seed=n).matrices[0]
    ours = singular_values(M).values
    ref = jacobi_singular_values(math.sqrt(n) * (M - 1.0 / n))
    assert np.allclose(ours, ref, atol=1e-12)


def test_singular_values_check_input():
    with pytest.raises(CorruptedStateError):
        singular_values(np.ones((3, 3)))


def test_spectral_barycenter_batch():
    batch = SampleBatch(np.full((2, 4, 4), 0.25), SamplerId.GIBBS, 0)
    report = spectral_test(batch)
    assert report.value == pytest.approx(8 / (3 * math.pi), rel=1e-12)


def test_spectral_iid_exponential_model():
    n = 256
    E = iid_exponential_batch(n, 20, seed=3).matrices / n
    report = spectral_test(SampleBatch(E, SamplerId.IID_EXPONENTIAL, 3), check=False)
    assert report.value < 0.05
    assert report.details["squared_value"] < 4 * report.value + 1e-12


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_squared_distance_bounded_by_four_times(seed):
    # singular values inside [0, 2], where x -> x^2 is 4-Lipschitz
    sigma = seeded_stream(seed).random(200) * 2.0
    w = wasserstein1(sigma, QuarterCircle())
    w2 = wasserstein1(sigma**2, SquaredQuarterCircle())
    assert w2 <= 4 * w + 1e-12


# -- mixing -------------------------------------------------------------------


def test_mixing_barycenter():
    r = mixing_profile(np.full((5, 5), 0.2), 3)
    assert r.d[0] == pytest.approx(0.0, abs=1e-15)
    assert r.mixing_time == 1


def test_mixing_identity_never_mixes():
    r = mixing_profile(np.eye(2), 5)
    assert r.d == [0.5] * 5
    assert r.mixing_time is None


def test_mixing_matches_loop_oracle():
    M = gibbs_chain(GibbsConfig(7), 1, seed=2).matrices[0]
    r = mixing_profile(M, 3)
    for t in range(1, 4):
        rows = tv_to_uniform_rows(M, t)
        assert r.d[t - 1] == pytest.approx(max(rows), abs=1e-14)
        assert r.row_mean[t - 1] == pytest.approx(sum(rows) / len(rows), abs=1e-14)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_mixing_distance_nonincreasing(seed):
    M = dirichlet_row_batch(6, 1, seed).matrices[0]
    M = M / M.sum(axis=0)  # column-normalize
    M = M / M.sum(axis=1, keepdims=True)
    r = mixing_profile(M, 6)
    assert all(b <= a + 1e-12 for a, b in zip(r.d, r.d[1:]))


def test_dirichlet_row_mean_distance_near_inverse_e():
    n = 128
    batch = dirichlet_row_batch(n, 40, seed=9)
    d1 = np.mean([mixing_profile(M, 1).row_mean[0] for M in batch.matrices])
    # exact expectation for a Dirichlet(1,..,1) row: (1 - 1/n)^n
    assert d1 == pytest.approx((1 - 1 / n) ** n, rel=0.01)
    assert (1 - 1 / n) ** n == pytest.approx(math.exp(-1), rel=0.01)


# -- max entry ----------------------------------------------------------------


def test_max_entry_barycenter_and_identity():
    for n in (2, 8, 30):
        bary = SampleBatch(np.full((1, n, n), 1 / n), SamplerId.GIBBS, 0)
        assert max_entry_stat(bary, 0.5) == 0.0
    for n in (8, 30):
        ident = SampleBatch(np.eye(n)[None], SamplerId.GIBBS, 0)
        assert max_entry_stat(ident, 0.5) == 1.0
    with pytest.raises(ValueError):
        max_entry_stat(bary, 0.0)


# -- moments ------------------------------------------------------------------


def test_moment_spec_validation():
    with pytest.raises(ValueError):
        MomentSpec(((0, 0),), (1, 2))
    with pytest.raises(ValueError):
        MomentSpec(((0, 0), (0, 0)), (1, 1))
    with pytest.raises(ValueError):
        MomentSpec(((0, 0),), (0,))


def test_joint_moments_exact_on_known_batch():
    mats = np.array([[[0.25, 0.75], [0.75, 0.25]], [[0.5, 0.5], [0.5, 0.5]]])
    batch = SampleBatch(mats, SamplerId.GIBBS, 0)
    m, se = joint_moments(batch, MomentSpec(((0, 0), (1, 1)), (1, 2)))
    vals = np.array([(2 * 0.25) * (2 * 0.25) ** 2, 1.0])
    assert m == pytest.approx(vals.mean())
    assert se == pytest.approx(vals.std(ddof=1) / math.sqrt(2))


def test_first_moment_symmetry():
    batch = gibbs_chain(GibbsConfig(10), 4000, seed=12)
    m, se = joint_moments(batch, MomentSpec(((0, 0),), (1,)))
    assert abs(m - 1.0) <= 4 * se


# -- block dependence ---------------------------------------------------------


def test_energy_distance_zero_for_same_sample():
    X = np.random.default_rng(0).random((200, 3))
    assert energy_distance(X, X) == pytest.approx(0.0, abs=1e-12)


def test_energy_distance_matches_scipy_in_1d():
    from scipy.stats import energy_distance as sp_energy

    rng = np.random.default_rng(1)
    x, y = rng.random(300), rng.random(400) + 0.2
    # scipy returns sqrt(2 E|X-Y| - E|X-X'| - E|Y-Y'|)
    assert math.sqrt(energy_distance(x[:, None], y[:, None])) == pytest.approx(sp_energy(x, y), rel=1e-9)


@pytest.mark.filterwarnings("ignore:k=2 is outside")
def test_iid_exponential_block_uncorrelated():
    n = 16
    batch = iid_exponential_batch(n, 10**4, seed=2)
    # rescaled by n, the leading block is n * E / n = E
    report = submatrix_independence_test(SampleBatch(batch.matrices / n, SamplerId.IID_EXPONENTIAL, 2), 2)
    assert report.value < 0.02
    assert report.details["energy"] <= 2 * report.details["reference_energy"]


def test_degenerate_block_flagged():
    batch = SampleBatch(np.full((10, 100, 100), 0.01), SamplerId.GIBBS, 0)
    report = submatrix_independence_test(batch, 2)
    assert report.details["degenerate"]
    assert math.isnan(report.value)


def test_large_block_warns():
    batch = SampleBatch(np.full((10, 9, 9), 1 / 9), SamplerId.GIBBS, 0)
    with pytest.warns(RuntimeWarning, match="regime"):
        report = submatrix_independence_test(batch, 3)
    assert report.details["notes"]


def test_max_abs_correlation_known():
    rng = np.random.default_rng(0)
    a = rng.random(1000)
    V = np.column_stack([a, -a, rng.random(1000)])
    c, degenerate = max_abs_correlation(V)
    assert c == pytest.approx(1.0) and not degenerate


def test_lag_autocorrelation():
    x = np.tile([1.0, -1.0], 50)
    assert lag_autocorrelation(x, 1) == pytest.approx(-1.0)
    assert math.isnan(lag_autocorrelation(np.ones(5), 1))
