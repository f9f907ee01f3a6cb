import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from birkhoff_lab.core import MarginSpec, seeded_stream
from birkhoff_lab.samplers import rejection_exact
from birkhoff_lab.volumes import (
    binned_density_ratio,
    canfield_mckay_birkhoff,
    canfield_mckay_rect,
    complete_margins,
    mc_volume,
    perturbed_margins,
    radon_nikodym_ratio,
    uniform_sum_density,
    verify_constant_margin_maximality,
    verify_max_at_half,
)

from oracles import birkhoff3_volume, irwin_hall_density, uniform_sum_density_numeric


def test_two_by_two_unit_margins_volume_one():
    est = mc_volume(MarginSpec([1.0, 1.0], [1.0, 1.0]), 1000, seed=0)
    assert est.volume == pytest.approx(1.0)
    assert est.std_error == 0.0
    assert est.accepted == est.proposals == 1000


def test_zero_free_dimension():
    est = mc_volume(MarginSpec([2.0], [1.0, 1.0]), 10, seed=0)
    assert est.log_volume == 0.0 and est.std_error == 0.0


def test_mc_volume_n3_matches_grid_oracle():
    oracle = 2 * birkhoff3_volume(800) - birkhoff3_volume(400)
    est = mc_volume(MarginSpec.constant(3, 3), 400000, seed=1)
    assert abs(est.volume - oracle) <= 3 * est.volume_std_error
    assert est.std_error >= 0


def test_mc_volume_scaling_law():
    spec = MarginSpec([1.0, 2.0, 1.5], [1.5, 1.0, 2.0])
    lam = 1.7
    a = mc_volume(spec, 300000, seed=2)
    b = mc_volume(spec.scaled(lam), 300000, seed=3)
    expected = spec.free_dim * math.log(lam)
    assert abs((b.log_volume - a.log_volume) - expected) <= 3 * math.hypot(a.std_error, b.std_error)


def test_mc_volume_m_by_two_matches_uniform_sum_density():
    # for m x 2 margins the free column is a sum constraint on U[0, a_i]
    a = np.array([0.7, 1.1, 0.5])
    r = 0.9
    spec = MarginSpec(a, [r, a.sum() - r])
    est = mc_volume(spec, 400000, seed=4)
    exact = float(np.prod(a)) * uniform_sum_density(a, r)
    assert abs(est.volume - exact) <= 3 * est.volume_std_error


def test_mc_volume_guards():
    with pytest.raises(ValueError):
        mc_volume(MarginSpec.constant(6, 6), 10, 0)
    with pytest.raises(ValueError):
        mc_volume(MarginSpec.constant(3, 3), 0, 0)


def test_complete_margins_round_trip():
    spec = MarginSpec([1.0, 2.0], [0.5, 1.5, 1.0])
    x = np.array([[0.2, 0.3]])
    full = complete_margins(x, spec)
    assert np.allclose(full.sum(axis=1), spec.row_sums)
    assert np.allclose(full.sum(axis=0), spec.col_sums)


def test_rejection_rate_agrees_with_mc_volume():
    _, rate = rejection_exact(3, 20000, seed=5)
    est = mc_volume(MarginSpec.constant(3, 3), 200000, seed=6)
    assert abs(rate - est.volume) < 4 * est.volume_std_error + 0.003


def test_canfield_mckay_birkhoff_n3():
    expected = -6 * math.log(3) - 2.5 * math.log(2 * math.pi) + 1 / 3 + 9
    assert canfield_mckay_birkhoff(3) == pytest.approx(expected, rel=1e-15)
    assert canfield_mckay_birkhoff(3) == pytest.approx(-1.8530330646986872, rel=1e-14)


@pytest.mark.parametrize("n", range(2, 30))
def test_rect_square_equals_birkhoff(n):
    assert canfield_mckay_rect(n, n) == pytest.approx(canfield_mckay_birkhoff(n), abs=1e-9)


@given(st.integers(2, 40), st.integers(2, 40), st.floats(0.1, 50))
def test_rect_transpose_symmetry_and_homogeneity(m, n, t):
    assert canfield_mckay_rect(m, n, total=t) == pytest.approx(canfield_mckay_rect(n, m, total=t), abs=1e-9)
    base = canfield_mckay_rect(m, n)
    assert canfield_mckay_rect(m, n, total=t) - base == pytest.approx((m - 1) * (n - 1) * math.log(t / m), abs=1e-9)


def test_canfield_mckay_guards():
    with pytest.raises(ValueError):
        canfield_mckay_birkhoff(1)
    with pytest.raises(ValueError):
        canfield_mckay_rect(1, 4)


def test_uniform_sum_density_triangle():
    assert uniform_sum_density([1, 1], 1.0) == pytest.approx(1.0)
    assert uniform_sum_density([1, 1], 0.5) == pytest.approx(0.5)
    assert uniform_sum_density([1, 1], 2.5) == 0.0
    assert uniform_sum_density([1, 1], -0.1) == 0.0


def test_uniform_sum_density_symmetric_pinned_by_convolution():
    a = [1.0, 2.0, 3.0]
    f3 = uniform_sum_density(a, 3.0)
    assert f3 == pytest.approx(uniform_sum_density(a, 6.0 - 3.0))
    assert f3 == pytest.approx(float(uniform_sum_density_numeric(a, 3.0)), abs=1e-3)
    # at the center all three ranges overlap fully: 1 / max(a) = 1/3
    assert f3 == pytest.approx(1 / 3, rel=1e-12)


@pytest.mark.parametrize("m", [2, 3, 5, 8, 12, 13, 20])
def test_uniform_sum_density_irwin_hall(m):
    for x in (0.3, m / 3, m / 2):
        rel = 1e-12 if m <= 12 else 1e-6
        assert uniform_sum_density(np.ones(m), x) == pytest.approx(irwin_hall_density(m, x), rel=rel, abs=1e-14)


@given(st.lists(st.floats(0.1, 5.0), min_size=2, max_size=8))
@settings(max_examples=25, deadline=None)
def test_long_sum_branch_agrees_with_exact_branch(bounds):
    from birkhoff_lab.volumes import _density_convolution, _density_inclusion_exclusion

    a = np.array(bounds)
    r = np.linspace(0.1, 0.9, 9) * a.sum()
    exact = _density_inclusion_exclusion(a, r)
    assert np.allclose(_density_convolution(a, r), exact, rtol=1e-5, atol=1e-7 * exact.max())


@given(st.lists(st.floats(0.1, 5.0), min_size=1, max_size=6))
@settings(max_examples=30, deadline=None)
def test_uniform_sum_density_matches_convolution(bounds):
    t = sum(bounds)
    r = np.linspace(0.05 * t, 0.95 * t, 7)
    ours = uniform_sum_density(bounds, r)
    ref = uniform_sum_density_numeric(bounds, r, step=1e-3)
    assert np.allclose(ours, ref, atol=3e-3 * max(1.0, ours.max()))


def test_max_at_half_examples():
    assert verify_max_at_half([1, 1, 1, 1], grid=101)
    plateau = verify_max_at_half([0.1, 5.0], grid=101)
    assert plateau.ok and plateau.log_concave
    assert verify_max_at_half([2.0], grid=11)


@given(st.lists(st.floats(0.05, 6.0), min_size=1, max_size=6))
@settings(max_examples=50, deadline=None)
def test_max_at_half_property(bounds):
    report = verify_max_at_half(bounds)
    assert report.ok
    assert abs(report.argmax - report.half) <= report.cell * (1 + 1e-9)


def test_perturbed_margins_keep_total():
    rng = seeded_stream(0)
    spec = perturbed_margins(3, 4, 3.0, rng)
    assert spec.total == pytest.approx(3.0)
    assert spec.col_sums.sum() == pytest.approx(3.0)


def test_constant_margin_maximality_small():
    report = verify_constant_margin_maximality(3, 3, trials=4, seed=1, proposals=100000)
    assert report.ok
    assert len(report.trials) == 4
    assert report.to_dict()["constant"]["proposals"] == 100000


def test_maximality_guards():
    with pytest.raises(ValueError):
        verify_constant_margin_maximality(5, 5, 1, 0)
    with pytest.raises(ValueError):
        verify_constant_margin_maximality(3, 3, 0, 0)


def test_radon_nikodym_bound():
    assert radon_nikodym_ratio(1, 10) == pytest.approx(1.6487212707, rel=1e-10)
    assert radon_nikodym_ratio(2, 10) == pytest.approx(math.e)
    with pytest.raises(ValueError):
        radon_nikodym_ratio(10, 10)


def test_binned_density_ratio_same_law_near_one():
    rng = np.random.default_rng(0)
    x, y = rng.exponential(size=200000), rng.exponential(size=200000)
    best, ratios, edges, mask = binned_density_ratio(x, y, bins=20, hi=3.0, min_count=1000)
    assert mask.all()
    assert best == pytest.approx(1.0, abs=0.06)
    assert edges.size == 21
