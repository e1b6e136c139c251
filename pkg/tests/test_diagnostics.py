import numpy as np
import pytest

from bayeslp import model
from bayeslp.basis import bspline_basis, default_knot_grid
from bayeslp.diagnostics import (
    dic,
    effective_sample_size,
    fit_report,
    pointwise_loglik,
    summarize_irf,
    waic,
)
from bayeslp.errors import EmptyDraws
from bayeslp.model import DesignSet, ProjectionSpec, SeriesBundle, build_design
from bayeslp.sampler import PosteriorDraws, SamplerConfig, run_gibbs


def _make_draws(coeffs, sigma, spec, n_coef, kind="standard", basis=None):
    return PosteriorDraws(
        kind=kind,
        coeffs=np.asarray(coeffs, dtype=float),
        sigma=np.asarray(sigma, dtype=float),
        tau=None,
        lam=None,
        spec=spec,
        n_coef=n_coef,
        basis=basis,
    )


def _small_run(seed=0, prior="nrp", n_draws=300):
    rng = np.random.default_rng(seed)
    bundle = SeriesBundle(y=rng.standard_normal(60), z=rng.standard_normal(60))
    spec = ProjectionSpec(horizons=(0, 1, 2, 3), prior=prior)
    design = build_design(bundle, spec, lags=2)
    draws = run_gibbs(design, spec, SamplerConfig(n_draws=n_draws, n_burnin=100, seed=seed))
    return design, spec, draws


# ---------------------------------------------------------------------------
# summaries


def test_summary_zero_width_for_identical_draws():
    spec = ProjectionSpec(horizons=(0, 1, 2))
    coeffs = np.tile(np.array([1.0, 2.0, 3.0]), (50, 1))
    draws = _make_draws(coeffs, np.tile(np.eye(3), (50, 1, 1)), spec, n_coef=1)
    summary = summarize_irf(draws)
    assert np.array_equal(summary.mean, [1.0, 2.0, 3.0])
    assert np.array_equal(summary.q05, summary.q95)
    assert np.array_equal(summary.q025, summary.q975)


def test_summary_standard_normal_quantiles():
    rng = np.random.default_rng(3)
    spec = ProjectionSpec(horizons=(0, 1), penalty_order=1)
    coeffs = rng.standard_normal((100_000, 2))
    draws = _make_draws(coeffs, np.tile(np.eye(2), (100_000, 1, 1)), spec, n_coef=1)
    summary = summarize_irf(draws)
    assert np.all(np.abs(summary.q05 - (-1.645)) < 0.02)
    assert np.all(np.abs(summary.q95 - 1.645) < 0.02)


def test_summary_quantile_ordering():
    _, _, draws = _small_run()
    s = summarize_irf(draws)
    assert np.all(s.q025 <= s.q05)
    assert np.all(s.q05 <= s.q95)
    assert np.all(s.q95 <= s.q975)


def test_summary_rejects_empty():
    spec = ProjectionSpec(horizons=(0, 1, 2))
    empty = _make_draws(np.empty((0, 3)), np.empty((0, 3, 3)), spec, n_coef=1)
    with pytest.raises(EmptyDraws):
        summarize_irf(empty)


def test_summary_degree0_spline_equals_standard():
    spec_std = ProjectionSpec(horizons=(0, 1, 2, 3))
    sb = bspline_basis(default_knot_grid(0, 3, 0), 0, np.arange(4.0))
    rng = np.random.default_rng(4)
    n_coef = 2
    coeffs_std = rng.standard_normal((200, 4 * n_coef))  # horizon-major
    # identical draws, reordered coefficient-major for the spline container
    coeffs_spl = np.concatenate(
        [coeffs_std[:, j::n_coef] for j in range(n_coef)], axis=1
    )
    sig = np.tile(np.eye(4), (200, 1, 1))
    std = _make_draws(coeffs_std, sig, spec_std, n_coef)
    spl = _make_draws(coeffs_spl, sig, spec_std, n_coef, kind="spline", basis=sb)
    for j in range(n_coef):
        a, b = summarize_irf(std, j), summarize_irf(spl, j)
        assert np.array_equal(a.mean, b.mean)
        assert np.array_equal(a.q05, b.q05)


# ---------------------------------------------------------------------------
# pointwise log density


def test_pointwise_rows_sum_to_full_loglik():
    design, _, draws = _small_run()
    ll = pointwise_loglik(draws, design)
    for s in (0, draws.n_stored - 1):
        full = model.log_likelihood(design, draws.coeffs[s], draws.sigma[s])
        assert ll[s].sum() == pytest.approx(full, abs=1e-8)
    assert np.all(np.isfinite(ll))


def test_pointwise_unit_case():
    spec = ProjectionSpec(horizons=(0,), prior="normal")
    design = DesignSet(X=np.ones((4, 1)), Y=np.zeros((4, 1)), horizons=(0,), columns=("z",))
    draws = _make_draws(np.zeros((3, 1)), np.tile(np.eye(1), (3, 1, 1)), spec, n_coef=1)
    ll = pointwise_loglik(draws, design)
    assert np.allclose(ll, -0.5 * np.log(2 * np.pi), atol=1e-12)


# ---------------------------------------------------------------------------
# information criteria


def test_dic_degenerate_draws():
    spec = ProjectionSpec(horizons=(0,), prior="normal")
    design = DesignSet(X=np.ones((6, 1)), Y=np.zeros((6, 1)), horizons=(0,), columns=("z",))
    draws = _make_draws(np.zeros((10, 1)), np.tile(np.eye(1), (10, 1, 1)), spec, n_coef=1)
    dic_value, p_dic = dic(draws, design)
    loglik = model.log_likelihood(design, np.zeros(1), np.eye(1))
    assert p_dic == pytest.approx(0.0, abs=1e-10)
    assert dic_value == pytest.approx(-2.0 * loglik, abs=1e-8)


def test_waic_degenerate_draws():
    spec = ProjectionSpec(horizons=(0,), prior="normal")
    design = DesignSet(X=np.ones((6, 1)), Y=np.zeros((6, 1)), horizons=(0,), columns=("z",))
    draws = _make_draws(np.zeros((10, 1)), np.tile(np.eye(1), (10, 1, 1)), spec, n_coef=1)
    waic_value, lppd, p_waic = waic(draws, design)
    ll = pointwise_loglik(draws, design)
    assert p_waic == pytest.approx(0.0, abs=1e-20)
    assert waic_value == pytest.approx(-2.0 * ll[0].sum(), abs=1e-8)
    assert lppd == pytest.approx(ll[0].sum(), abs=1e-8)


def test_waic_shift_identity():
    design, _, draws = _small_run(seed=9)
    ll = pointwise_loglik(draws, design)
    _, lppd, _ = waic(draws, design, loglik=ll)
    _, lppd_shifted, p_shifted = waic(draws, design, loglik=ll + 10_000.0)
    t_eff = ll.shape[1]
    assert lppd_shifted == pytest.approx(lppd + 10_000.0 * t_eff, rel=1e-12)
    _, _, p_plain = waic(draws, design, loglik=ll)
    assert p_shifted == pytest.approx(p_plain, rel=1e-6)


def test_p_waic_nonnegative_and_deterministic():
    design, _, draws = _small_run(seed=5)
    a = fit_report(draws, design)
    b = fit_report(draws, design)
    assert a == b  # bitwise recomputation
    assert a.p_waic >= 0.0


def test_negative_p_dic_warns():
    # zero residuals with a covariance that alternates between tiny and huge:
    # the plug-in (mean) covariance fits worse than the average draw,
    # since -log|Sigma| is convex along this path
    spec = ProjectionSpec(horizons=(0,), prior="normal")
    x = np.ones((8, 1))
    design = DesignSet(X=x, Y=np.zeros((8, 1)), horizons=(0,), columns=("z",))
    coeffs = np.zeros((10, 1))
    sigma = np.array([[[0.01]], [[100.0]]] * 5)
    draws = _make_draws(coeffs, sigma, spec, n_coef=1)
    with pytest.warns(RuntimeWarning):
        dic_value, p_dic = dic(draws, design)
    assert p_dic < 0


# ---------------------------------------------------------------------------
# effective sample size


def test_ess_white_noise_near_n():
    x = np.random.default_rng(0).standard_normal(20_000)
    assert effective_sample_size(x) > 0.9 * len(x)


def test_ess_ar1_matches_theory():
    rng = np.random.default_rng(1)
    rho, n = 0.9, 200_000
    x = np.empty(n)
    x[0] = rng.standard_normal()
    eps = rng.standard_normal(n)
    for t in range(1, n):
        x[t] = rho * x[t - 1] + eps[t]
    theory = n * (1 - rho) / (1 + rho)
    assert effective_sample_size(x) == pytest.approx(theory, rel=0.2)


def test_ess_constant_series():
    assert effective_sample_size(np.ones(500)) == 500.0
