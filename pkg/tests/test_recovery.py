"""Sparse recovery solver tests with planted-signal oracles."""

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cs_toolkit.matrices import build_matrix, compress
from cs_toolkit.recovery import (
    BayesOpts,
    SignVector,
    SolverOpts,
    basis_pursuit,
    bayesian_recover,
    biht_recover,
    cosamp,
    omp,
    one_bit_quantize,
)
from cs_toolkit.signals import gen_sparse_signal


def planted_instance(scheme, m, n, k, seed, noise_variance=0.0):
    A = build_matrix(scheme, m, n, seed=seed)
    x = gen_sparse_signal(n, k, seed=seed + 1)
    y = compress(A, x, noise_variance=noise_variance, seed=seed + 2)
    return A, x, y


def support_ls_oracle(A, y, support):
    """Least squares restricted to the true support; the noiseless optimum."""
    dense = A.to_dense()
    coef, *_ = np.linalg.lstsq(dense[:, support], y.values, rcond=None)
    x = np.zeros(A.n)
    x[support] = coef
    return x


def rel_err(x_hat, x_true):
    return float(np.linalg.norm(x_hat - x_true) / np.linalg.norm(x_true))


# ---------------------------------------------------------------- basis pursuit

def test_bp_noiseless_recovery_matches_support_oracle():
    A, x, y = planted_instance("gaussian", 100, 256, 10, seed=0)
    z = 1e-3 * float(np.max(np.abs(A.rmatvec(y.values))))
    res = basis_pursuit(y, A, z=z, opts=SolverOpts(tol=1e-12, max_iter=20_000))
    oracle = support_ls_oracle(A, y, x.support)
    assert rel_err(oracle, x.samples) < 1e-10
    # residual error tracks the soft-threshold bias, proportional to z
    assert rel_err(res.x_hat, x.samples) < 5e-3
    assert res.converged


def test_bp_objective_trace_nonincreasing():
    A, _, y = planted_instance("gaussian", 60, 120, 8, seed=3,
                               noise_variance=0.01)
    res = basis_pursuit(y, A, z=0.05)
    assert np.all(np.diff(res.objective_trace) <= 1e-12)


def test_bp_l1_shrinks_with_penalty():
    A, _, y = planted_instance("gaussian", 60, 120, 8, seed=4,
                               noise_variance=0.01)
    small = basis_pursuit(y, A, z=0.01)
    large = basis_pursuit(y, A, z=1.0)
    assert np.abs(large.x_hat).sum() < np.abs(small.x_hat).sum()


def test_bp_options_and_validation():
    A, _, y = planted_instance("gaussian", 30, 60, 4, seed=5)
    capped = basis_pursuit(y, A, z=0.01, opts=SolverOpts(max_iter=3))
    assert capped.iterations <= 3
    with pytest.raises(ValueError):
        basis_pursuit(y, A, z=-0.5)
    with pytest.raises(ValueError):
        basis_pursuit(np.ones(A.m + 1), A)


# -------------------------------------------------------------------------- omp

def test_omp_exact_recovery_and_support():
    A, x, y = planted_instance("gaussian", 100, 256, 10, seed=1)
    res = omp(y, A, 10)
    assert rel_err(res.x_hat, x.samples) < 1e-6
    assert set(np.flatnonzero(res.x_hat)) == set(x.support)
    assert res.converged
    assert res.iterations == 10


def test_omp_residual_trace_never_increases():
    A, _, y = planted_instance("gaussian", 50, 120, 8, seed=2,
                               noise_variance=0.05)
    res = omp(y, A, 20)
    assert np.all(np.diff(res.objective_trace) <= 1e-12)


def test_omp_tolerance_mode_stops_on_residual():
    A, x, y = planted_instance("gaussian", 100, 256, 10, seed=6)
    res = omp(y, A, 1e-8)
    norm_y = float(np.linalg.norm(y.values))
    assert res.objective_trace[-1] <= 1e-8 * norm_y + 1e-12
    assert np.count_nonzero(res.x_hat) <= A.m


def test_omp_dependent_column_warning():
    # rank-1 matrix with y partly outside the column span: the second pick
    # must duplicate the first direction and degrade the LS rank
    from cs_toolkit.matrices import SensingMatrix
    u = np.array([1.0, 0.0, 0.0])
    gen = np.outer(u, [1.0, 2.0, -1.0, 0.5])
    A = SensingMatrix("gaussian", 3, 4, gen, seed=0, scale=1.0,
                      rows=np.arange(3))
    y = np.array([1.0, 1.0, 0.0])
    with pytest.warns(RuntimeWarning, match="linearly dependent"):
        omp(y, A, 2)


def test_omp_validation():
    A, _, y = planted_instance("gaussian", 20, 40, 4, seed=7)
    with pytest.raises(ValueError):
        omp(y, A, 0)
    with pytest.raises(ValueError):
        omp(y, A, 21)
    with pytest.raises(ValueError):
        omp(y, A, -0.1)


# ----------------------------------------------------------------------- cosamp

def test_cosamp_exact_recovery():
    A, x, y = planted_instance("gaussian", 120, 256, 10, seed=8)
    res = cosamp(y, A, 10)
    assert rel_err(res.x_hat, x.samples) < 1e-6
    assert np.count_nonzero(res.x_hat) <= 10
    assert res.converged


def test_cosamp_trace_nonincreasing_and_output_sparsity():
    A, _, y = planted_instance("gaussian", 60, 150, 8, seed=9,
                               noise_variance=0.05)
    res = cosamp(y, A, 8)
    assert np.all(np.diff(res.objective_trace) <= 1e-12)
    assert np.count_nonzero(res.x_hat) <= 8


def test_cosamp_regime_warning_and_validation():
    A, _, y = planted_instance("gaussian", 20, 60, 4, seed=10)
    with pytest.warns(RuntimeWarning) as record:
        cosamp(y, A, 11)
    assert any("working regime" in str(w.message) for w in record)
    with pytest.raises(ValueError):
        cosamp(y, A, 0)
    with pytest.raises(ValueError):
        cosamp(np.ones(21), A, 4)


# --------------------------------------------------------------------- bayesian

def test_bayesian_noiseless_recovery_self_estimated():
    A, x, y = planted_instance("gaussian", 100, 256, 10, seed=11)
    res = bayesian_recover(y, A)
    assert rel_err(res.x_hat, x.samples) < 1e-5
    assert np.count_nonzero(res.x_hat) == 10
    assert set(np.flatnonzero(res.x_hat)) == set(x.support)


def test_bayesian_noiseless_recovery_informed():
    A, x, y = planted_instance("gaussian", 100, 256, 10, seed=11)
    res = bayesian_recover(y, A, BayesOpts(noise_variance=0.0))
    assert rel_err(res.x_hat, x.samples) < 1e-9
    assert np.count_nonzero(res.x_hat) == 10


def test_bayesian_inactive_coefficients_exact_zero():
    A, x, y = planted_instance("circulant", 100, 200, 15, seed=12,
                               noise_variance=1e-3)
    res = bayesian_recover(y, A)
    off = np.setdiff1d(np.arange(200), np.flatnonzero(res.x_hat))
    assert np.all(res.x_hat[off] == 0.0)
    assert np.all(np.isinf(res.hyper_a[off]))
    assert np.all(np.isfinite(res.hyper_a[np.flatnonzero(res.x_hat)]))


def test_bayesian_trace_nonincreasing():
    A, _, y = planted_instance("circulant", 100, 200, 15, seed=13,
                               noise_variance=1e-3)
    res = bayesian_recover(y, A)
    assert np.all(np.diff(res.base.objective_trace) <= 1e-9)


def test_bayesian_sparsity_near_truth_at_moderate_noise():
    hits = 0
    for seed in range(5):
        A, x, y = planted_instance("circulant", 100, 200, 15, seed=20 + seed,
                                   noise_variance=0.0)
        clean = A.matvec(x.samples)
        nv = float(np.mean(clean**2)) / 1e3  # 30 dB measurement SNR
        y = compress(A, x, noise_variance=nv, seed=999 + seed)
        res = bayesian_recover(y, A)
        k_hat = np.count_nonzero(res.x_hat)
        if abs(k_hat - 15) <= 2:
            hits += 1
    assert hits >= 4


def test_bayesian_fixed_noise_pins_hyper_b():
    A, _, y = planted_instance("gaussian", 60, 120, 8, seed=14,
                               noise_variance=1e-4)
    res = bayesian_recover(y, A, BayesOpts(noise_variance=1e-4))
    assert res.hyper_b == pytest.approx(1e4, rel=1e-12)
    assert res.noise_variance_hat == pytest.approx(1e-4, rel=1e-12)


def test_bayesian_posterior_fields_consistent():
    A, _, y = planted_instance("gaussian", 60, 120, 8, seed=15,
                               noise_variance=1e-3)
    res = bayesian_recover(y, A)
    assert res.x_hat is res.base.x_hat
    assert res.noise_variance_hat > 0.0
    assert np.all(res.signal_variance_hat >= 0.0)
    active = np.flatnonzero(res.x_hat)
    assert np.all(res.signal_variance_hat[active] > 0.0)


def test_bayesian_zero_measurements_return_empty_model():
    A = build_matrix("gaussian", 30, 60, seed=16)
    res = bayesian_recover(np.zeros(30), A)
    assert np.count_nonzero(res.x_hat) == 0
    assert res.base.converged


def test_bayesian_length_validation():
    A = build_matrix("gaussian", 30, 60, seed=17)
    with pytest.raises(ValueError):
        bayesian_recover(np.ones(29), A)


# ---------------------------------------------------------------------- one-bit

def test_one_bit_quantize_signs_and_zero_rule():
    sv = one_bit_quantize(np.array([3.0, -0.5, 0.0, 2.0]))
    assert np.array_equal(sv.signs, [1.0, -1.0, 1.0, 1.0])
    assert len(sv) == 4
    with pytest.raises(ValueError):
        SignVector(signs=np.array([1.0, 0.5]))
    with pytest.raises(ValueError):
        one_bit_quantize(np.array([]))


def test_biht_unit_norm_and_determinism():
    A, x, y = planted_instance("gaussian", 250, 500, 10, seed=18)
    signs = one_bit_quantize(y)
    res = biht_recover(signs, A, 10)
    assert abs(float(np.linalg.norm(res.x_hat)) - 1.0) < 1e-12
    again = biht_recover(signs, A, 10)
    assert np.array_equal(res.x_hat, again.x_hat)


def test_biht_direction_recovery():
    A, x, y = planted_instance("gaussian", 250, 500, 10, seed=19)
    res = biht_recover(one_bit_quantize(y), A, 10)
    target = x.samples / np.linalg.norm(x.samples)
    corr = abs(float(res.x_hat @ target))
    assert corr > 0.8


def test_biht_scale_invariant_in_matrix_normalization():
    A, x, y = planted_instance("gaussian", 150, 300, 8, seed=21)
    signs = one_bit_quantize(y)
    from cs_toolkit.matrices import SensingMatrix
    B = SensingMatrix("gaussian", A.m, A.n, 7.0 * A.generator, seed=A.seed,
                      scale=1.0, rows=A.rows)
    res_a = biht_recover(signs, A, 8)
    res_b = biht_recover(signs, B, 8)
    # scaling every measurement row leaves signs and the solution unchanged
    assert np.allclose(res_a.x_hat, res_b.x_hat, atol=1e-9)


def test_biht_converged_flag_means_consistent_signs():
    A, x, y = planted_instance("gaussian", 250, 500, 10, seed=22)
    signs = one_bit_quantize(y)
    res = biht_recover(signs, A, 10)
    resim = np.where(A.matvec(res.x_hat) >= 0.0, 1.0, -1.0)
    mismatches = int(np.count_nonzero(resim != signs.signs))
    if res.converged:
        assert mismatches == 0
    assert np.all(np.diff(res.objective_trace) <= 0.0)


def test_biht_validation():
    A = build_matrix("gaussian", 20, 50, seed=23)
    with pytest.raises(ValueError):
        biht_recover(np.ones(19), A, 5)
    with pytest.raises(ValueError):
        biht_recover(np.full(20, 0.5), A, 5)
    with pytest.raises(ValueError):
        biht_recover(np.ones(20), A, 0)


# ------------------------------------------------------------------- properties

@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 500))
def test_property_omp_trace_monotone(seed):
    rng = np.random.default_rng(seed)
    A = build_matrix("gaussian", 20, 40, seed=seed)
    y = rng.standard_normal(20)
    res = omp(y, A, 10)
    assert np.all(np.diff(res.objective_trace) <= 1e-10)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 500))
def test_property_bp_trace_monotone(seed):
    rng = np.random.default_rng(seed)
    A = build_matrix("gaussian", 20, 40, seed=seed)
    y = rng.standard_normal(20)
    res = basis_pursuit(y, A, z=0.1, opts=SolverOpts(max_iter=200))
    assert np.all(np.diff(res.objective_trace) <= 1e-10)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 500))
def test_property_biht_output_always_unit_norm(seed):
    rng = np.random.default_rng(seed)
    A = build_matrix("gaussian", 30, 60, seed=seed)
    signs = SignVector(signs=rng.choice([-1.0, 1.0], size=30))
    res = biht_recover(signs, A, 5, opts=SolverOpts(max_iter=30))
    assert abs(float(np.linalg.norm(res.x_hat)) - 1.0) < 1e-12
