"""Posterior summaries, predictive-fit criteria, and convergence helpers."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import model
from .errors import EmptyDraws
from .kernel import cholesky_lower, solve_lower
from .sampler import PosteriorDraws

__all__ = [
    "IrfSummary",
    "FitReport",
    "summarize_irf",
    "pointwise_loglik",
    "dic",
    "waic",
    "fit_report",
    "effective_sample_size",
]

QUANTILE_LEVELS = (0.025, 0.05, 0.95, 0.975)


@dataclass(frozen=True)
class IrfSummary:
    """Pointwise posterior summary of one impulse-response profile."""

    horizons: tuple[int, ...]
    mean: np.ndarray
    q025: np.ndarray
    q05: np.ndarray
    q95: np.ndarray
    q975: np.ndarray

    def as_columns(self) -> dict[str, np.ndarray]:
        return {
            "horizon": np.asarray(self.horizons, dtype=float),
            "mean": self.mean,
            "q2.5": self.q025,
            "q5": self.q05,
            "q95": self.q95,
            "q97.5": self.q975,
        }


@dataclass(frozen=True)
class FitReport:
    """Deviance-scale predictive-fit criteria; smaller is better."""

    dic: float
    waic: float
    lppd: float
    p_dic: float
    p_waic: float

    def as_dict(self) -> dict[str, float]:
        return {
            "dic": self.dic,
            "waic": self.waic,
            "lppd": self.lppd,
            "p_dic": self.p_dic,
            "p_waic": self.p_waic,
        }


def summarize_irf(draws: PosteriorDraws, coeff: int = 0) -> IrfSummary:
    """Posterior mean and 90%/95% interval bounds of a coefficient profile.

    Spline draws are mapped through the basis first, so the summary is
    always on the horizon grid.  Quantiles are linearly interpolated
    empirical quantiles.
    """
    if draws.n_stored == 0:
        raise EmptyDraws("no stored draws to summarize")
    profile = draws.irf_draws(coeff)
    qs = np.quantile(profile, QUANTILE_LEVELS, axis=0)
    return IrfSummary(
        horizons=draws.spec.horizons,
        mean=profile.mean(axis=0),
        q025=qs[0],
        q05=qs[1],
        q95=qs[2],
        q975=qs[3],
    )


def pointwise_loglik(draws: PosteriorDraws, design) -> np.ndarray:
    """Per-draw, per-time-index log density matrix.

    Entry ``(s, t)`` is the log density of the H-vector of responses in row
    ``t`` of the design under draw ``s``.  Rows sum to the full stacked log
    likelihood of the draw.
    """
    if draws.n_stored == 0:
        raise EmptyDraws("no stored draws")
    base = design.design if isinstance(design, model.SplineDesign) else design
    n_h = base.n_horizons
    out = np.empty((draws.n_stored, base.t_eff))
    const = -0.5 * n_h * np.log(2.0 * np.pi)
    for s in range(draws.n_stored):
        lower = cholesky_lower(draws.sigma[s])
        resid = model.residual_matrix(design, draws.coeffs[s])
        white = solve_lower(lower, resid.T)  # H x T
        logdet = 2.0 * np.sum(np.log(np.diag(lower)))
        out[s] = const - 0.5 * logdet - 0.5 * np.sum(white**2, axis=0)
    return out


def dic(draws: PosteriorDraws, design, loglik: np.ndarray | None = None) -> tuple[float, float]:
    """Deviance information criterion and its effective-parameter count.

    The plug-in point is the posterior mean of the coefficients and of the
    residual covariance; ``p_dic`` is twice the gap between the plug-in log
    likelihood and the posterior-average log likelihood.
    """
    if loglik is None:
        loglik = pointwise_loglik(draws, design)
    mean_coeffs = draws.coeffs.mean(axis=0)
    mean_sigma = draws.sigma.mean(axis=0)
    loglik_hat = model.log_likelihood(design, mean_coeffs, mean_sigma)
    mean_loglik = float(loglik.sum(axis=1).mean())
    p_dic = 2.0 * (loglik_hat - mean_loglik)
    if p_dic < -1e-8:
        warnings.warn(
            f"negative effective-parameter count p_dic={p_dic:.3f}; "
            "posterior is far from Gaussian",
            RuntimeWarning,
            stacklevel=2,
        )
    return float(-2.0 * loglik_hat + 2.0 * p_dic), float(p_dic)


def waic(draws: PosteriorDraws, design, loglik: np.ndarray | None = None) -> tuple[float, float, float]:
    """Watanabe-Akaike criterion, the log pointwise predictive density, and
    the variance-based effective-parameter count.

    ``lppd`` uses a numerically stable log-mean-exp over draws; the penalty
    is the per-point posterior variance of the log density, summed over
    time points.
    """
    if loglik is None:
        loglik = pointwise_loglik(draws, design)
    n_draws = loglik.shape[0]
    lppd = float(logsumexp(loglik, axis=0, b=1.0 / n_draws).sum())
    p_waic = float(loglik.var(axis=0, ddof=1).sum()) if n_draws > 1 else 0.0
    return -2.0 * (lppd - p_waic), lppd, p_waic


def fit_report(draws: PosteriorDraws, design) -> FitReport:
    """Compute DIC and WAIC from one pointwise log-density pass."""
    loglik = pointwise_loglik(draws, design)
    dic_value, p_dic = dic(draws, design, loglik=loglik)
    waic_value, lppd, p_waic = waic(draws, design, loglik=loglik)
    return FitReport(dic=dic_value, waic=waic_value, lppd=lppd, p_dic=p_dic, p_waic=p_waic)


def effective_sample_size(series: np.ndarray) -> float:
    """Autocorrelation-based effective sample size of one scalar chain.

    Uses the initial-positive-sequence truncation of the autocorrelation
    spectrum; returns ``len(series)`` for white noise.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 4:
        return float(n)
    x = x - x.mean()
    var = x @ x
    if var == 0:
        return float(n)
    # FFT autocorrelations up to lag n//2
    nfft = int(2 ** np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(x, nfft)
    acf = np.fft.irfft(f * np.conj(f), nfft)[: n // 2] / var
    # Geyer: sum pairs (rho_2k + rho_2k+1) while they stay positive
    n_pairs = acf.size // 2
    pair_sums = acf[: 2 * n_pairs : 2] + acf[1 : 2 * n_pairs : 2]
    nonpos = np.nonzero(pair_sums <= 0)[0]
    cutoff = nonpos[0] if nonpos.size else n_pairs
    tau_int = -1.0 + 2.0 * pair_sums[:cutoff].sum()
    ess = n / max(tau_int, 1.0)
    return float(min(ess, n))
