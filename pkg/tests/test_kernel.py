import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bayeslp import kernel
from bayeslp.basis import difference_matrix
from bayeslp.errors import DimensionMismatch, InvalidParameter, NotPositiveDefinite
from bayeslp.kernel import (
    RngStream,
    cholesky_lower,
    sample_gamma,
    sample_inverse_wishart,
    sample_mvn_precision,
    solve_lower,
    solve_upper,
)

SQRT2 = np.sqrt(2.0)


# ---------------------------------------------------------------------------
# cholesky_lower


def test_cholesky_identity():
    assert np.array_equal(cholesky_lower(np.eye(3)), np.eye(3))


def test_cholesky_hand_case():
    # [[4,2],[2,3]] = L L' with L = [[2,0],[1,sqrt(2)]], expanded by hand
    lower = cholesky_lower(np.array([[4.0, 2.0], [2.0, 3.0]]))
    assert np.allclose(lower, [[2.0, 0.0], [1.0, SQRT2]], rtol=0, atol=1e-14)


def test_cholesky_rank_deficient_penalty_gram():
    d = difference_matrix(8, 2)
    with pytest.raises(NotPositiveDefinite):
        cholesky_lower(d.T @ d)


def test_cholesky_rejects_nonsquare():
    with pytest.raises(DimensionMismatch):
        cholesky_lower(np.ones((2, 3)))


@settings(max_examples=25, deadline=None)
@given(dim=st.integers(1, 50), seed=st.integers(0, 10_000))
def test_cholesky_roundtrip_property(dim, seed):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((dim, dim))
    a = b.T @ b + np.eye(dim)
    lower = cholesky_lower(a)
    assert np.all(np.diag(lower) > 0)
    rel = np.linalg.norm(lower @ lower.T - a) / np.linalg.norm(a)
    assert rel < 1e-8


# ---------------------------------------------------------------------------
# triangular solves


def test_solve_lower_identity():
    assert np.allclose(solve_lower(np.eye(3), np.array([1.0, 2.0, 3.0])), [1, 2, 3])


def test_solve_lower_hand_case():
    # forward substitution by hand: c1 = 2/2 = 1, c2 = (1+sqrt2-1)/sqrt2 = 1
    lower = np.array([[2.0, 0.0], [1.0, SQRT2]])
    assert np.allclose(solve_lower(lower, np.array([2.0, 1.0 + SQRT2])), [1.0, 1.0])


def test_solve_upper_identity():
    assert np.allclose(solve_upper(np.eye(1), np.array([5.0])), [5.0])


def test_solve_upper_hand_case():
    # back substitution by hand: x2 = sqrt2/sqrt2 = 1, x1 = (3 - 1)/2 = 1
    lower = np.array([[2.0, 0.0], [1.0, SQRT2]])
    assert np.allclose(solve_upper(lower, np.array([3.0, SQRT2])), [1.0, 1.0])


@pytest.mark.parametrize("solver", [solve_lower, solve_upper])
def test_solve_dimension_mismatch(solver):
    with pytest.raises(DimensionMismatch):
        solver(np.eye(2), np.ones(3))


def test_solves_match_dense_solve():
    rng = np.random.default_rng(7)
    b = rng.standard_normal((12, 12))
    p = b.T @ b + np.eye(12)
    rhs = rng.standard_normal(12)
    lower = cholesky_lower(p)
    x = solve_upper(lower, solve_lower(lower, rhs))
    assert np.allclose(x, np.linalg.solve(p, rhs), atol=1e-8)


# ---------------------------------------------------------------------------
# precision-form Gaussian sampling


def test_mvn_precision_standard_normal_moments():
    draws = sample_mvn_precision(np.eye(3), np.zeros(3), RngStream(101), size=1_000_000)
    assert np.all(np.abs(draws.mean(axis=0)) < 4e-3)
    cov = np.cov(draws.T)
    assert np.all(np.abs(cov - np.eye(3)) < 1e-2)


def test_mvn_precision_analytic_mean():
    # P = diag(4), rhs = 8 -> N(2, 0.25)
    draws = sample_mvn_precision(np.diag([4.0]), np.array([8.0]), RngStream(5), size=400_000)
    se = 0.5 / np.sqrt(draws.size)
    assert abs(draws.mean() - 2.0) < 5 * se
    assert abs(draws.var() - 0.25) < 1e-2


def test_mvn_precision_deterministic_given_stream():
    stream = RngStream(42, 9)
    p = np.array([[2.0, 0.5], [0.5, 1.0]])
    rhs = np.array([1.0, -1.0])
    assert np.array_equal(
        sample_mvn_precision(p, rhs, stream), sample_mvn_precision(p, rhs, stream)
    )


def test_mvn_precision_covariance_matches_inverse():
    rng = np.random.default_rng(31)
    b = rng.standard_normal((6, 6))
    p = b.T @ b + np.eye(6)
    target = np.linalg.inv(p)
    draws = sample_mvn_precision(p, np.zeros(6), RngStream(77), size=200_000)
    cov = np.cov(draws.T)
    se = np.sqrt((np.outer(np.diag(target), np.diag(target)) + target**2) / draws.shape[0])
    assert np.all(np.abs(cov - target) < 5 * se)


def test_mvn_precision_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        sample_mvn_precision(np.eye(3), np.zeros(2), RngStream(0))


def test_mvn_precision_propagates_not_pd():
    with pytest.raises(NotPositiveDefinite):
        sample_mvn_precision(np.zeros((2, 2)), np.zeros(2), RngStream(0))


# ---------------------------------------------------------------------------
# gamma sampling (shape-rate convention)


def test_gamma_mean_and_variance():
    draws = sample_gamma(2.0, 4.0, RngStream(11), size=1_000_000)
    n = draws.size
    # mean a/b = 0.5, variance a/b^2 = 0.125
    assert abs(draws.mean() - 0.5) < 3 * np.sqrt(0.125 / n)
    assert abs(draws.var() - 0.125) < 5 * 0.125 * np.sqrt(2.0 / n) + 1e-4


@pytest.mark.parametrize("shape,rate", [(0.0, 1.0), (1.0, 0.0), (-2.0, 3.0)])
def test_gamma_invalid_parameters(shape, rate):
    with pytest.raises(InvalidParameter):
        sample_gamma(shape, rate, RngStream(0))


def test_gamma_vectorized_rates():
    rates = np.array([1.0, 2.0, 4.0])
    draws = sample_gamma(3.0, rates, RngStream(3), size=(50_000, 3))
    assert np.allclose(draws.mean(axis=0), 3.0 / rates, rtol=0.05)


# ---------------------------------------------------------------------------
# inverse-Wishart sampling


def test_inverse_wishart_mean():
    # mean = scale / (dof - dim - 1) = I/7
    draws = sample_inverse_wishart(np.eye(2), 10.0, RngStream(13), size=1_000_000)
    mean = draws.mean(axis=0)
    se = draws.std(axis=0) / np.sqrt(draws.shape[0])
    assert np.all(np.abs(mean - np.eye(2) / 7.0) < 5 * se)


def test_inverse_wishart_draws_positive_definite():
    stream = RngStream(29)
    gen = stream.generator()
    scale = np.array([[2.0, 0.3], [0.3, 1.0]])
    for _ in range(200):
        draw = sample_inverse_wishart(scale, 5.0, gen)
        cholesky_lower(draw)  # raises if not PD


def test_inverse_wishart_dof_too_small():
    with pytest.raises(InvalidParameter):
        sample_inverse_wishart(np.eye(3), 2.0, RngStream(0))


def test_inverse_wishart_deterministic_given_stream():
    stream = RngStream(1, 2)
    a = sample_inverse_wishart(np.eye(3), 8.0, stream)
    b = sample_inverse_wishart(np.eye(3), 8.0, stream)
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# RngStream


def test_rngstream_reproducible():
    a = RngStream(123, 4).generator().standard_normal(8)
    b = RngStream(123, 4).generator().standard_normal(8)
    assert np.array_equal(a, b)


def test_rngstream_children_distinct():
    base = RngStream(123)
    seqs = {tuple(base.child(k).generator().standard_normal(4)) for k in range(20)}
    assert len(seqs) == 20
    assert base.child(3) == base.child(3)
    assert base.child(3) != base.child(4)


def test_rngstream_rejects_out_of_range():
    with pytest.raises(InvalidParameter):
        RngStream(-1)


def test_as_generator_accepts_int():
    gen = kernel.as_generator(7)
    assert isinstance(gen, np.random.Generator)
    with pytest.raises(InvalidParameter):
        kernel.as_generator("seed")
