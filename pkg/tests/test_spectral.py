import math

import numpy as np
import pytest

from _oracles import dense_full, dense_transient, uniformization
from sisq.chain import ModelParams, birth_rate, build_transient_generator, death_rate
from sisq.spectral import (
    FULL_DECOMPOSITION_SIZE_CAP,
    ConvergenceError,
    SizeCapError,
    SymmetrizedGenerator,
    conditioned_distribution,
    conditioned_probability,
    dominant_eigenpair,
    expected_time_qsd,
    full_decomposition,
    quasi_stationary_distribution,
    survival_probability,
    symmetrize,
    transition_matrix,
    transition_probability,
)
from sisq.stationary import stationary_distribution

N2_LAMBDA1 = (-3.5 + math.sqrt(4.25)) / 2.0


def _symmetrized(p: ModelParams):
    return symmetrize(build_transient_generator(p), stationary_distribution(p))


def test_symmetrize_single_state():
    s = _symmetrized(ModelParams(1, 1.0, 1.0))
    assert s.diag.tolist() == [-1.0]
    assert s.offdiag.size == 0


def test_symmetrize_hand_values_n2():
    s = _symmetrized(ModelParams(2, 1.0, 1.0))
    assert s.diag.tolist() == [-1.5, -2.0]
    assert s.offdiag.tolist() == [1.0]


def test_symmetrize_diag_unchanged_offdiag_from_rates():
    p = ModelParams(13, 3.0, 0.7)
    g = build_transient_generator(p)
    s = symmetrize(g, stationary_distribution(p))
    assert np.array_equal(s.diag, g.diag)
    for k in range(p.n - 1):
        assert s.offdiag[k] == pytest.approx(
            math.sqrt(birth_rate(k + 1, p) * death_rate(k + 2, p)), rel=1e-15)


def test_symmetrize_rejects_bad_weights():
    g = build_transient_generator(ModelParams(3, 1.0))
    with pytest.raises(ValueError):
        symmetrize(g, np.array([0.5, 0.5, 0.0]))
    with pytest.raises(ValueError):
        symmetrize(g, np.array([0.5, -0.1, 0.6]))
    with pytest.raises(ValueError):
        symmetrize(g, np.array([0.5, 0.5]))


def test_symmetrized_spectrum_equals_dense_spectrum():
    # similarity transform must preserve the spectrum; oracle is a
    # generic dense eigensolve of the nonsymmetric generator.  Parameter
    # sets are limited to mild detailed-balance weight spans: past that
    # the oracle's own eigenvalues are ill-conditioned (error grows like
    # eps * sqrt(weight span)) and it stops being a 1e-8 reference.
    for n, lam in ((5, 1.0), (20, 3.0), (50, 2.0)):
        p = ModelParams(n, lam, 1.0)
        got = np.sort(full_decomposition(_symmetrized(p)).eigenvalues)
        want = np.sort(np.linalg.eigvals(dense_transient(p)).real)
        scale = np.abs(dense_transient(p)).sum(axis=1).max()
        assert np.allclose(got, want, rtol=0.0, atol=1e-8 * scale)


def test_dominant_eigenpair_single_state():
    lam1, u1 = dominant_eigenpair(_symmetrized(ModelParams(1, 2.0, 1.0)))
    assert lam1 == -1.0
    assert u1.tolist() == [1.0]


def test_dominant_eigenpair_hand_value_n2():
    lam1, u1 = dominant_eigenpair(_symmetrized(ModelParams(2, 1.0, 1.0)))
    assert lam1 == pytest.approx(N2_LAMBDA1, rel=1e-12)
    assert np.all(u1 > 0.0)
    assert np.linalg.norm(u1) == pytest.approx(1.0, rel=1e-12)


def test_dominant_eigenpair_positive_and_unit():
    for p in (ModelParams(10, 0.5), ModelParams(40, 2.0), ModelParams(25, 1.0, 3.0)):
        lam1, u1 = dominant_eigenpair(_symmetrized(p))
        assert lam1 < 0.0
        assert np.all(u1 > 0.0)
        assert np.linalg.norm(u1) == pytest.approx(1.0, rel=1e-12)


def test_spectral_gap_hand_values_n2():
    r = full_decomposition(_symmetrized(ModelParams(2, 1.0, 1.0)))
    assert r.eigenvalues[0] == pytest.approx(N2_LAMBDA1, rel=1e-12)
    assert r.eigenvalues[1] == pytest.approx((-3.5 - math.sqrt(4.25)) / 2.0, rel=1e-12)
    assert r.eigenvalues[0] > r.eigenvalues[1]


def test_qsd_single_state():
    r = quasi_stationary_distribution(ModelParams(1, 5.0, 1.0))
    assert r.lambda1 == -1.0
    assert r.qsd.tolist() == [1.0]


def test_qsd_hand_values_n2():
    r = quasi_stationary_distribution(ModelParams(2, 1.0, 1.0))
    assert r.lambda1 == pytest.approx(N2_LAMBDA1, rel=1e-9)
    assert r.qsd == pytest.approx([0.7192236, 0.2807764], abs=1e-6)


def test_qsd_is_probability_vector():
    for p in (ModelParams(10, 0.5), ModelParams(100, 2.0), ModelParams(7, 4.0, 2.0)):
        r = quasi_stationary_distribution(p)
        assert np.all(r.qsd > 0.0)
        assert r.qsd.sum() == pytest.approx(1.0, rel=1e-12)


def test_eigenvalue_qsd_identity_tight():
    # lambda1 = -gamma * qsd[0] holds to a few roundings by construction
    for p in (ModelParams(2, 1.0, 1.0), ModelParams(50, 2.0, 1.0),
              ModelParams(80, 0.5, 2.5), ModelParams(200, 8.0, 1.0)):
        r = quasi_stationary_distribution(p)
        assert abs(r.lambda1 + p.gamma * r.qsd[0]) <= 1e-14 * abs(r.lambda1)


def test_qsd_left_eigenvector_residual():
    for p in (ModelParams(5, 2.0), ModelParams(30, 0.5), ModelParams(50, 1.0, 2.0)):
        r = quasi_stationary_distribution(p)
        q = dense_transient(p)
        resid = np.abs(r.qsd @ q - r.lambda1 * r.qsd).max()
        scale = np.abs(q).sum(axis=1).max() * r.qsd.max()
        assert resid <= 1e-9 * scale


def test_flux_and_lapack_routes_agree():
    # both solvers see well-scaled eigenvalues here, so they must agree;
    # at strongly supercritical parameters only the flux route keeps
    # relative accuracy and this comparison would be meaningless
    for p in (ModelParams(10, 0.5), ModelParams(10, 2.0), ModelParams(30, 1.0, 2.5),
              ModelParams(50, 1.5, 1.0)):
        r = quasi_stationary_distribution(p)
        lam1, u1 = dominant_eigenpair(_symmetrized(p))
        assert r.lambda1 == pytest.approx(lam1, rel=1e-9)
        q_full = full_decomposition(_symmetrized(p)).qsd
        assert np.allclose(r.qsd, q_full, rtol=1e-9, atol=1e-12)


def test_expected_time_qsd_values():
    assert expected_time_qsd(ModelParams(1, 1.0, 2.0)) == pytest.approx(0.5, rel=1e-12)
    assert expected_time_qsd(ModelParams(2, 1.0, 1.0)) == pytest.approx(1.390388, abs=1e-6)


def test_expected_time_qsd_is_negative_reciprocal_eigenvalue():
    for p in (ModelParams(2, 1.0), ModelParams(60, 2.0), ModelParams(15, 0.5, 0.3)):
        r = quasi_stationary_distribution(p)
        assert expected_time_qsd(p) == pytest.approx(-1.0 / r.lambda1, rel=1e-12)


def test_survival_probability():
    p = ModelParams(2, 1.0, 1.0)
    assert survival_probability(p, 0.0) == 1.0
    assert survival_probability(p, 1.0) == pytest.approx(math.exp(N2_LAMBDA1), rel=1e-9)
    ts = [0.5, 1.0, 3.0, 10.0]
    vals = [survival_probability(p, t) for t in ts]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        survival_probability(p, -0.1)


def test_full_decomposition_single_state():
    r = full_decomposition(_symmetrized(ModelParams(1, 1.0, 3.0)))
    assert r.eigenvalues.tolist() == [-3.0]
    assert r.qsd.tolist() == [1.0]


def test_full_decomposition_descending_orthonormal():
    r = full_decomposition(_symmetrized(ModelParams(40, 2.0, 1.0)))
    assert np.all(np.diff(r.eigenvalues) < 0.0)
    gram = r.basis.T @ r.basis
    assert np.abs(gram - np.eye(40)).max() <= 1e-10


def test_full_decomposition_trace_identity():
    p = ModelParams(40, 2.0, 1.0)
    g = build_transient_generator(p)
    r = full_decomposition(_symmetrized(p))
    assert r.eigenvalues.sum() == pytest.approx(g.diag.sum(), rel=1e-9)


def test_full_decomposition_size_cap():
    # built by hand: at this size any genuine stationary vector has
    # underflowed-to-zero entries, which symmetrize rightly rejects
    n = FULL_DECOMPOSITION_SIZE_CAP + 1
    s = SymmetrizedGenerator(
        n=n,
        diag=np.full(n, -2.0),
        offdiag=np.full(n - 1, 0.5),
        weights=np.full(n, 1.0 / n),
        log_weights=np.zeros(n),
    )
    with pytest.raises(SizeCapError):
        full_decomposition(s)


def test_transition_matrix_at_zero_is_identity():
    p = ModelParams(6, 1.5, 1.0)
    assert np.abs(transition_matrix(p, 0.0) - np.eye(6)).max() <= 1e-10


def test_transition_matrix_bounds_and_domain():
    p = ModelParams(12, 2.0, 1.0)
    m = transition_matrix(p, 0.7)
    assert m.min() >= 0.0 and m.max() <= 1.0
    row_sums = m.sum(axis=1)
    assert np.all(row_sums > 0.0) and np.all(row_sums < 1.0)
    with pytest.raises(ValueError):
        transition_matrix(p, -1.0)


def test_transition_probability_scalar_generator():
    assert transition_probability(ModelParams(1, 1.0, 1.0), 2.0, 1, 1) == \
        pytest.approx(math.exp(-2.0), rel=1e-12)


def test_transition_probability_state_validation():
    p = ModelParams(4, 1.0)
    for i, j in ((0, 1), (1, 0), (5, 1), (1, 5)):
        with pytest.raises(ValueError):
            transition_probability(p, 1.0, i, j)


def test_transition_row_sum_is_survival_from_state():
    # leak into the absorbing state accounts for the missing row mass;
    # oracle integrates the full chain including state 0
    p = ModelParams(2, 1.0, 1.0)
    t = 0.5
    row_sum = float(transition_matrix(p, t)[0].sum())
    p_full = uniformization(dense_full(p), t)
    assert 0.0 < row_sum < 1.0
    assert row_sum == pytest.approx(1.0 - p_full[1, 0], abs=1e-10)


def test_transition_matrix_matches_uniformization():
    for lam, t in ((0.5, 0.3), (2.0, 1.0), (5.0, 4.0)):
        p = ModelParams(10, lam, 1.0)
        got = transition_matrix(p, t)
        want = uniformization(dense_transient(p), t)
        assert np.abs(got - want).max() <= 1e-8


def test_conditioned_distribution_rows_sum_to_one():
    p = ModelParams(9, 2.0, 1.0)
    for i in (1, 4, 9):
        row = conditioned_distribution(p, 2.5, i)
        assert row.sum() == pytest.approx(1.0, abs=1e-12)


def test_conditioned_distribution_converges_to_qsd():
    p = ModelParams(2, 1.0, 1.0)
    row = conditioned_distribution(p, 20.0, 1)
    assert row == pytest.approx(quasi_stationary_distribution(p).qsd, abs=1e-6)


def test_conditioned_convergence_monotone():
    for p, i in ((ModelParams(10, 2.0, 1.0), 1), (ModelParams(30, 0.5, 1.0), 3)):
        q = quasi_stationary_distribution(p).qsd
        dists = [np.abs(conditioned_distribution(p, t / p.gamma, i) - q).max()
                 for t in (1.0, 2.0, 4.0, 8.0, 16.0)]
        assert all(a >= b for a, b in zip(dists, dists[1:]))


def test_conditioned_probability_at_zero():
    # reconstructed from the spectral sum, so the point mass at t=0 is
    # exact only to rounding
    assert conditioned_probability(ModelParams(5, 1.0), 0.0, 3, 3) == pytest.approx(1.0, abs=1e-12)
    assert conditioned_probability(ModelParams(5, 1.0), 0.0, 3, 2) == pytest.approx(0.0, abs=1e-12)


def test_underflow_guard_names_the_regime():
    with pytest.raises(OverflowError, match="underflows double"):
        quasi_stationary_distribution(ModelParams(1000, 5.0, 1.0))


def test_results_are_immutable_and_cached_consistently():
    p = ModelParams(20, 2.0, 1.0)
    r1 = quasi_stationary_distribution(p)
    r2 = quasi_stationary_distribution(ModelParams(20, 2.0, 1.0))
    assert np.array_equal(r1.qsd, r2.qsd)
    assert not r1.qsd.flags.writeable
    with pytest.raises(ValueError):
        r1.qsd[0] = 0.0


def test_convergence_error_carries_iterations():
    err = ConvergenceError("nope", iterations=7)
    assert isinstance(err, RuntimeError)
    assert err.iterations == 7
