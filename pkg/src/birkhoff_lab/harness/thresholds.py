"""Every pass/fail threshold used by the experiments, in one table.

The limit laws are asymptotic; the finite-size cutoffs below are
choices of this tool. Bump ``VERSION`` whenever a value changes.
"""

VERSION = "1"

THRESHOLDS = {
    # raw sample batches
    "sample.ds_tol": 1e-9,
    "sample.min_entry": 0.0,
    # two-sample checks of the Gibbs chain against exact rejection samples
    "oracle_compare.ks": 0.02,
    "oracle_compare.pair_tv": 0.03,
    "oracle_compare.pair_bins": 6,
    "oracle_compare.max_entry_ks": 0.02,
    "oracle_compare.exchangeability_ks": 0.02,
    # n X_11 against Exp(1)
    "marginal.ks": 0.03,
    "marginal.tv_sigmas": 2.0,
    "marginal.tv_bins": 64,
    "marginal.tv_hi": 12.0,
    # moments of n X_ij
    "moments.mean_se": 4.0,
    "moments.second_rel": 0.05,
    "moments.cross_rel": 0.05,
    # fraction of matrices with max n X_ij > (2 + eps) log n
    "max_entry.fraction": 0.08,
    # singular values of sqrt(n)(X - 1/n)
    "singular.w1": 0.05,
    "singular.w1_squared": 0.20,
    "singular.frobenius_rel": 1e-8,
    # mixing time of X as a transition kernel
    "mixing.d1_min": 0.25,
    "mixing.d2_max": 0.05,
    "mixing.fraction": 0.95,
    "mixing.mean_d1_rel": 0.15,
    "mixing.trivial_time": 1,
    # leading k x k block
    "submatrix.corr": 0.05,
    "submatrix.energy_ratio": 2.0,
    # convex combination of permutation matrices
    "vertex_mixture.mean_se": 3.0,
    "vertex_mixture.var_se": 3.0,
    "vertex_mixture.ks": 0.01,
    # volumes
    "volume.sigmas": 3.0,
    "volume.max_violations": 0,
    "volume.finite": 1,
    "volume.identity_tol": 1e-9,
    # density ratio of a Gibbs entry against a Dirichlet-row entry
    "radon_ratio.slack": 1.2,
    "radon_ratio.min_count": 100,
}


def threshold(key: str):
    return THRESHOLDS[key]
