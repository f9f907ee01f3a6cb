"""Exit criteria at full size with the default seed.

Each experiment runs once per module at its default configuration; the
determinism criterion reruns all of them and compares payload bytes.
Run alone with ``pytest -m acceptance -s``.
"""

import math

import pytest

from birkhoff_lab.harness import ExperimentConfig, run_experiment

from conftest import ACCEPTANCE_LINES

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

SEED = 20240101

_CACHE: dict = {}


def report(experiment):
    if experiment not in _CACHE:
        _CACHE[experiment] = run_experiment(ExperimentConfig.from_dict({"experiment": experiment, "seed": SEED}))
    return _CACHE[experiment]


def verdicts(rep):
    return {v.name: v for v in rep.verdicts}


def record(number, title, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def check(number, title, rep, expected, detail, extra_ok=True):
    """Assert the named verdicts exist, cite ``expected`` thresholds and pass."""
    v = verdicts(rep)
    missing = [name for name in expected if name not in v]
    ok = rep.error is None and not missing and all(v[name].passed for name in expected) and extra_ok
    record(number, title, ok, detail)
    assert rep.error is None, rep.error
    assert not missing, missing
    for name, limit in expected.items():
        assert v[name].threshold == pytest.approx(limit), name
        assert v[name].passed, v[name].to_dict()
    assert extra_ok
    assert rep.passed


def test_criterion_01_oracle_equivalence():
    rep = report("oracle_compare")
    rows = {r["n"]: r for r in rep.results["per_n"]}
    assert sorted(rows) == [3, 4]
    assert all(min(r["sample_sizes"]) >= 10**5 for r in rows.values())
    expected = {}
    for n in (3, 4):
        expected[f"ks_n{n}"] = 0.02
        expected[f"pair_tv_n{n}"] = 0.03
    detail = ", ".join(f"n={n} ks {rows[n]['ks']:.4f} pair-tv {rows[n]['max_pair_tv']:.4f}" for n in (3, 4))
    check(1, "gibbs vs rejection at n=3,4", rep, expected, detail)


def test_criterion_02_marginal_law():
    rep = report("marginal")
    per_n = rep.results["per_n"]
    assert [r["n"] for r in per_n] == [8, 16, 32, 64]
    assert per_n[-1]["sample_size"] == 20000
    v = verdicts(rep)
    detail = f"ks(n=64) {v['ks_n64'].value:.4f}, tv rise {v['tv_nonincreasing_within_noise'].value:+.2f} SE"
    check(2, "marginal Exp(1) law", rep, {"ks_n64": 0.03, "tv_nonincreasing_within_noise": 2.0}, detail)


def test_criterion_03_moments():
    rep = report("moments")
    assert rep.results["n"] == 64
    v = verdicts(rep)
    detail = (
        f"mean err {v['mean_abs_error'].value:.4f} (limit {v['mean_abs_error'].threshold:.4f}), "
        f"second rel {v['second_rel_error'].value:.4f}, cross rel {v['cross_rel_error'].value:.4f}"
    )
    expected = {"second_rel_error": 0.05, "cross_rel_error": 0.05}
    se_ok = v["mean_abs_error"].threshold == pytest.approx(4 * rep.results["mean"]["se"])
    check(3, "moments at n=64", rep, {**expected, "mean_abs_error": v["mean_abs_error"].threshold}, detail, se_ok)


def test_criterion_04_max_entry():
    rep = report("max_entry")
    assert rep.results["n"] == 200 and rep.results["sample_size"] == 500
    frac = verdicts(rep)["exceedance_fraction"].value
    check(4, "max entry at n=200, eps=0.5", rep, {"exceedance_fraction": 0.08}, f"fraction {frac:.3f}")


def test_criterion_05_singular_values():
    rep = report("singular")
    assert rep.results["n"] == 256 and rep.results["sample_size"] == 20
    v = verdicts(rep)
    detail = f"w1 {v['w1_quarter_circle'].value:.4f}, frobenius rel {v['frobenius_identity'].value:.1e}"
    check(5, "quarter-circle singular values", rep, {"w1_quarter_circle": 0.05, "frobenius_identity": 1e-8}, detail)


def test_criterion_06_mixing_time_two():
    rep = report("mixing")
    assert rep.results["n"] == 128 and rep.results["sample_size"] == 100
    times = rep.results["mixing_times"]
    v = verdicts(rep)
    detail = (
        f"fraction {v['fraction_d1_above_d2_below'].value:.2f}, mixing time 2 in {times.get('2', 0)}/100, "
        f"mean d(1) {rep.results['mean_row_d1']:.4f} vs 1/e"
    )
    expected = {"fraction_d1_above_d2_below": 0.95, "mean_d1_rel_error": 0.15}
    check(6, "two-step mixing at n=128", rep, expected, detail, times.get("2", 0) >= 95)


def test_criterion_07_submatrix_independence():
    rep = report("submatrix")
    assert rep.results["n"] == 100 and rep.results["k"] == 2
    v = verdicts(rep)
    detail = f"max |corr| {v['max_abs_correlation'].value:.4f}, energy ratio {v['energy_ratio'].value:.3f}"
    check(7, "2x2 block vs iid Exp(1)", rep, {"max_abs_correlation": 0.05, "energy_ratio": 2.0}, detail)


def test_criterion_08_vertex_mixture():
    rep = report("vertex_mixture")
    assert rep.results["n"] == 3 and rep.results["sample_size"] == 10**5
    v = verdicts(rep)
    detail = f"KS vs Beta(2,4) {v['ks_beta'].value:.4f}"
    means_ok = all(v[name].passed for name in ("mean_abs_error", "variance_abs_error"))
    check(8, "vertex mixture at n=3", rep, {"ks_beta": 0.01}, detail, means_ok)


def test_criterion_09_volume_maximality():
    rep = report("volume")
    res = rep.results
    assert res["maximality"]["trials"] and len(res["maximality"]["trials"]) == 20
    assert res["max_at_half"]["vectors"] == 50
    assert all(len(r["bounds"]) <= 6 for r in res["max_at_half"]["reports"])
    detail = (
        f"{len(res['maximality']['violations'])} maximality violations, "
        f"{res['max_at_half']['failures']}/50 peak failures, rejection vs mc z {res['rejection_vs_mc']['z']:.2f}"
    )
    expected = {"maximality_violations": 0, "max_at_half_failures": 0, "rejection_vs_mc_sigma": 3.0}
    check(9, "constant-margin volume maximality", rep, expected, detail)


def test_criterion_10_canfield_mckay():
    rep = report("volume")
    cm = rep.results["canfield_mckay"]
    gap = cm["birkhoff_discrepancy"]
    reported = cm["label"] == "asymptotic, order-of-magnitude" and math.isfinite(gap["difference"])
    detail = f"identities to {cm['identity_max_error']:.1e}, n=3 log-volume gap {gap['difference']:+.3f} (reported only)"
    expected = {"canfield_mckay_finite": 1, "canfield_mckay_identities": 1e-9}
    check(10, "asymptotic volume formula", rep, expected, detail, reported)


def test_criterion_11_determinism():
    names = [
        "oracle_compare",
        "marginal",
        "moments",
        "max_entry",
        "singular",
        "mixing",
        "submatrix",
        "vertex_mixture",
        "volume",
    ]
    differ = []
    for name in names:
        again = run_experiment(ExperimentConfig.from_dict({"experiment": name, "seed": SEED}))
        if again.payload_json() != report(name).payload_json():
            differ.append(name)
    record(11, "byte-identical reruns", not differ, f"{len(names) - len(differ)}/{len(names)} payloads identical")
    assert not differ
