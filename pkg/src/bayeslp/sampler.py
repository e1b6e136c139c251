"""Block Gibbs sampler for both parameterizations.

One sweep draws, in order: the stacked coefficients (exact Gaussian draw
through the precision factorization), the global smoothing parameters, the
local smoothing parameters (adaptive prior only), and the residual
covariance.  Under the independent-normal prior the smoothing blocks are
skipped entirely.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy.linalg import cho_solve
from threadpoolctl import threadpool_limits

from . import kernel, model
from .basis import SplineBasis, difference_matrix
from .errors import (
    BayesLPError,
    ChainAborted,
    EmptyDraws,
    IndexOutOfRange,
    InsufficientData,
    InvalidParameter,
)
from .kernel import RngStream, as_generator
from .model import DesignSet, ProjectionSpec, SplineDesign

__all__ = [
    "ChainState",
    "SamplerConfig",
    "PosteriorDraws",
    "init_state",
    "draw_theta",
    "draw_vartheta",
    "draw_tau",
    "draw_lambda",
    "draw_sigma",
    "run_gibbs",
    "run_chains",
]

RIDGE_FALLBACK = 1e-6
SIGMA_INIT_JITTER = 1e-8


@dataclass
class ChainState:
    """Current draw of one Gibbs chain.

    ``coeffs`` is horizon-major of length ``H * J`` for the direct
    parameterization (``kind="standard"``) and coefficient-major of length
    ``K * J`` for the spline one (``kind="spline"``).  ``lam`` rows always
    have their first element pinned to one.
    """

    coeffs: np.ndarray
    sigma: np.ndarray
    tau: np.ndarray | None
    lam: np.ndarray | None
    n_coef: int
    seq_len: int
    kind: str = "standard"
    iteration: int = 0

    def coef_sequence(self, j: int) -> np.ndarray:
        """Values of coefficient ``j`` along its penalized sequence."""
        if not 0 <= j < self.n_coef:
            raise IndexOutOfRange(f"coefficient index {j} out of range [0, {self.n_coef})")
        if self.kind == "spline":
            return self.coeffs[j * self.seq_len : (j + 1) * self.seq_len]
        return self.coeffs[j :: self.n_coef]


@dataclass(frozen=True)
class SamplerConfig:
    """Run-length and reproducibility settings for one chain."""

    n_draws: int = 40000
    n_burnin: int = 10000
    thin: int = 1
    seed: int = 0
    stream: int = 0
    init: str = "ols"

    def __post_init__(self):
        if self.n_draws <= 0:
            raise InvalidParameter("n_draws must be positive")
        if self.n_burnin < 0:
            raise InvalidParameter("n_burnin must be nonnegative")
        if self.thin < 1:
            raise InvalidParameter("thin must be >= 1")
        if self.init not in ("ols", "zero"):
            raise InvalidParameter(f"unknown init mode {self.init!r}")

    def rng(self) -> RngStream:
        return RngStream(self.seed, self.stream)


@dataclass
class PosteriorDraws:
    """Stored post-burn-in draws of one or more merged chains."""

    kind: str
    coeffs: np.ndarray  # (S, dim)
    sigma: np.ndarray  # (S, H, H)
    tau: np.ndarray | None  # (S, J) for the smoothing priors, else None
    lam: np.ndarray | None  # (S, J, n_pen) for the adaptive prior, else None
    spec: ProjectionSpec
    n_coef: int
    basis: SplineBasis | None = None
    elapsed_seconds: float = 0.0
    n_chains: int = 1

    @property
    def n_stored(self) -> int:
        return self.coeffs.shape[0]

    def seq_len(self) -> int:
        return self.coeffs.shape[1] // self.n_coef

    def irf_draws(self, j: int = 0) -> np.ndarray:
        """(S, H) draws of coefficient ``j``'s horizon profile.

        Spline runs are mapped through the basis, so the result is always
        on the horizon grid.
        """
        if self.n_stored == 0:
            raise EmptyDraws("no stored draws")
        if not 0 <= j < self.n_coef:
            raise IndexOutOfRange(f"coefficient index {j} out of range [0, {self.n_coef})")
        if self.kind == "spline":
            k = self.seq_len()
            block = np.ascontiguousarray(self.coeffs[:, j * k : (j + 1) * k])
            return block @ self.basis.values.T
        # contiguous copy so downstream reductions are layout-independent
        return np.ascontiguousarray(self.coeffs[:, j :: self.n_coef])

    @classmethod
    def merge(cls, parts: list["PosteriorDraws"]) -> "PosteriorDraws":
        if not parts:
            raise EmptyDraws("nothing to merge")
        first = parts[0]
        stack = lambda attr: (
            None if getattr(first, attr) is None else np.concatenate([getattr(p, attr) for p in parts])
        )
        return cls(
            kind=first.kind,
            coeffs=np.concatenate([p.coeffs for p in parts]),
            sigma=np.concatenate([p.sigma for p in parts]),
            tau=stack("tau"),
            lam=stack("lam"),
            spec=first.spec,
            n_coef=first.n_coef,
            basis=first.basis,
            elapsed_seconds=sum(p.elapsed_seconds for p in parts),
            n_chains=sum(p.n_chains for p in parts),
        )


def _solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a x = b`` for symmetric ``a``, adding a ridge if degenerate."""
    try:
        lower = kernel.cholesky_lower(a)
    except BayesLPError:
        lower = kernel.cholesky_lower(a + RIDGE_FALLBACK * np.eye(a.shape[0]))
    return cho_solve((lower, True), b)


def init_state(design, spec: ProjectionSpec, rng=None, mode: str = "ols") -> ChainState:
    """Starting point of a chain: least-squares coefficients, residual
    covariance with a small jitter, smoothing parameters at their prior
    means, local weights at one."""
    spline = isinstance(design, SplineDesign)
    base = design.design if spline else design
    n_h, n_coef = base.n_horizons, base.n_regressors
    seq_len = design.n_weights if spline else n_h
    if base.t_eff < n_coef + 1:
        raise InsufficientData(f"effective sample {base.t_eff} too short for {n_coef} regressors")

    if mode == "zero":
        coeffs = np.zeros(seq_len * n_coef if spline else n_h * n_coef)
        sigma = np.eye(n_h)
    elif spline:
        phi = design.basis.values
        gram = np.kron(base.X.T @ base.X, phi.T @ phi)
        rhs = (base.X.T @ base.Y @ phi).ravel()
        coeffs = _solve_spd(gram, rhs)
        sigma = _residual_cov(design, coeffs)
    else:
        theta_ls = _solve_spd(base.X.T @ base.X, base.X.T @ base.Y)  # J x H
        coeffs = theta_ls.T.ravel()
        sigma = _residual_cov(design, coeffs)

    if spec.prior == "normal":
        tau = lam = None
    else:
        tau = np.full(n_coef, spec.hyper.nu1 / spec.hyper.nu2)
        lam = np.ones((n_coef, seq_len - spec.penalty_order))
    return ChainState(
        coeffs=coeffs,
        sigma=sigma,
        tau=tau,
        lam=lam,
        n_coef=n_coef,
        seq_len=seq_len,
        kind="spline" if spline else "standard",
    )


def _residual_cov(design, coeffs) -> np.ndarray:
    base = design.design if isinstance(design, SplineDesign) else design
    resid = model.residual_matrix(design, coeffs)
    sigma = resid.T @ resid / base.t_eff
    return sigma + SIGMA_INIT_JITTER * np.eye(base.n_horizons)


def _sigma_inv(sigma: np.ndarray) -> np.ndarray:
    lower = kernel.cholesky_lower(sigma)
    return cho_solve((lower, True), np.eye(sigma.shape[0]))


def _kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    (ma, na), (mb, nb) = a.shape, b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(ma * mb, na * nb)


def draw_theta(state: ChainState, design: DesignSet, q_prior: np.ndarray, rng) -> np.ndarray:
    """Exact conditional draw of the direct coefficients.

    Posterior precision: ``Sigma^{-1} (x) X'X + Q`` (horizon-major); the
    unnormalized mean stacks ``X'Y Sigma^{-1}`` by horizon.
    """
    sig_inv = _sigma_inv(state.sigma)
    xtx = design.X.T @ design.X
    precision = _kron(sig_inv, xtx) + q_prior
    rhs = (design.X.T @ design.Y @ sig_inv).T.ravel()
    return kernel.sample_mvn_precision(precision, rhs, rng)


def draw_vartheta(state: ChainState, design: SplineDesign, q_prior: np.ndarray, rng) -> np.ndarray:
    """Exact conditional draw of the spline weights.

    The Gram term of the expanded regressors collapses by the Kronecker
    identity ``Xt_i' Xt_k = (X'X) (x) (phi_i phi_k')`` to
    ``(X'X) (x) (Phi' Sigma^{-1} Phi)`` (coefficient-major), so no expanded
    matrices are ever formed.
    """
    base = design.design
    sig_inv = _sigma_inv(state.sigma)
    phi = design.basis.values
    xtx = base.X.T @ base.X
    precision = _kron(xtx, phi.T @ sig_inv @ phi) + q_prior
    rhs = (base.X.T @ base.Y @ sig_inv @ phi).ravel()
    return kernel.sample_mvn_precision(precision, rhs, rng)


def _tau_conditional(state: ChainState, spec: ProjectionSpec, d_mat: np.ndarray, j: int):
    seq = state.coef_sequence(j)
    diffs = d_mat @ seq
    shape = spec.hyper.nu1 + 0.5 * d_mat.shape[0]
    rate = spec.hyper.nu2 + 0.5 * float(diffs @ (state.lam[j] * diffs))
    return shape, rate


def draw_tau(state: ChainState, spec: ProjectionSpec, j: int, rng) -> float:
    """Conditional draw of the global smoothing parameter for coefficient ``j``."""
    d_mat = difference_matrix(state.seq_len, spec.penalty_order)
    shape, rate = _tau_conditional(state, spec, d_mat, j)
    return float(kernel.sample_gamma(shape, rate, rng))


def draw_lambda(state: ChainState, spec: ProjectionSpec, j: int, pos: int, rng) -> float:
    """Conditional draw of one local smoothing parameter.

    ``pos`` indexes the penalized differences of coefficient ``j``;
    position 0 is pinned to one and may not be drawn.
    """
    n_pen = state.seq_len - spec.penalty_order
    if not 1 <= pos < n_pen:
        raise IndexOutOfRange(
            f"local smoothing position must lie in [1, {n_pen}); position 0 is pinned to 1"
        )
    d_mat = difference_matrix(state.seq_len, spec.penalty_order)
    diff = float(d_mat[pos] @ state.coef_sequence(j))
    rate = spec.hyper.eta2 + 0.5 * state.tau[j] * diff**2
    return float(kernel.sample_gamma(spec.hyper.eta1 + 0.5, rate, rng))


def draw_sigma(state: ChainState, design, spec: ProjectionSpec, rng) -> np.ndarray:
    """Conditional draw of the residual covariance (inverse Wishart).

    Scale is the prior scale plus the realized residual cross-product;
    degrees of freedom are the prior dof plus the effective sample length.
    """
    base = design.design if isinstance(design, SplineDesign) else design
    resid = model.residual_matrix(design, state.coeffs)
    scale = spec.hyper.resolve_xi_scale(base.n_horizons) + resid.T @ resid
    dof = spec.hyper.resolve_xi(base.n_horizons) + base.t_eff
    return kernel.sample_inverse_wishart(scale, dof, rng)


def run_gibbs(design, spec: ProjectionSpec, config: SamplerConfig, rng=None) -> PosteriorDraws:
    """Run one chain and return the stored post-burn-in draws.

    The sweep order is coefficients, global smoothing, local smoothing,
    residual covariance; priors that lack a block skip it.  A failure mid-run
    raises :class:`ChainAborted` carrying the iteration and block name.
    """
    gen = as_generator(rng if rng is not None else config.rng())
    spline = isinstance(design, SplineDesign)
    base = design.design if spline else design
    n_h, n_coef, t_eff = base.n_horizons, base.n_regressors, base.t_eff

    state = init_state(design, spec, mode=config.init)
    dim = state.coeffs.size
    seq_len = state.seq_len
    xi_dof = spec.hyper.resolve_xi(n_h) + t_eff
    xi_scale = spec.hyper.resolve_xi_scale(n_h)
    d_mat = difference_matrix(seq_len, spec.penalty_order) if spec.prior != "normal" else None
    q_normal = model.normal_prior_precision(spec, dim) if spec.prior == "normal" else None

    n_stored = config.n_draws // config.thin
    coeffs_out = np.empty((n_stored, dim))
    sigma_out = np.empty((n_stored, n_h, n_h))
    tau_out = np.empty((n_stored, n_coef)) if spec.prior != "normal" else None
    lam_out = (
        np.empty((n_stored, n_coef, seq_len - spec.penalty_order))
        if spec.prior == "arp"
        else None
    )

    store = 0
    started = time.perf_counter()
    total = config.n_burnin + config.n_draws
    # Matrices in the sweep are small (a few hundred rows at most);
    # threaded BLAS loses to synchronization overhead there.
    with threadpool_limits(limits=1):
        for it in range(total):
            block = "coeffs"
            try:
                if spec.prior == "normal":
                    q_prior = q_normal
                elif spline:
                    q_prior = model.assemble_Q_spline(spec, seq_len, state.tau, state.lam)
                else:
                    q_prior = model.assemble_Q_standard(spec, state.tau, state.lam)
                if spline:
                    state.coeffs = draw_vartheta(state, design, q_prior, gen)
                else:
                    state.coeffs = draw_theta(state, design, q_prior, gen)

                if spec.prior != "normal":
                    block = "tau"
                    seqs = (
                        state.coeffs.reshape(n_coef, seq_len).T
                        if spline
                        else state.coeffs.reshape(seq_len, n_coef)
                    )
                    diffs = d_mat @ seqs  # (n_pen, J)
                    shape_tau = spec.hyper.nu1 + 0.5 * d_mat.shape[0]
                    rates_tau = spec.hyper.nu2 + 0.5 * np.einsum("ij,ij->j", diffs, state.lam.T * diffs)
                    state.tau = kernel.sample_gamma(shape_tau, rates_tau, gen)
                    if spec.prior == "arp":
                        block = "lambda"
                        rates_lam = spec.hyper.eta2 + 0.5 * state.tau[:, None] * diffs.T[:, 1:] ** 2
                        state.lam[:, 1:] = kernel.sample_gamma(spec.hyper.eta1 + 0.5, rates_lam, gen)

                block = "sigma"
                resid = model.residual_matrix(design, state.coeffs)
                state.sigma = kernel.sample_inverse_wishart(xi_scale + resid.T @ resid, xi_dof, gen)
            except (BayesLPError, np.linalg.LinAlgError) as err:
                raise ChainAborted(it, block, err) from err

            state.iteration = it + 1
            k = it - config.n_burnin
            if k >= 0 and (k + 1) % config.thin == 0 and store < n_stored:
                coeffs_out[store] = state.coeffs
                sigma_out[store] = state.sigma
                if tau_out is not None:
                    tau_out[store] = state.tau
                if lam_out is not None:
                    lam_out[store] = state.lam
                store += 1
    elapsed = time.perf_counter() - started

    return PosteriorDraws(
        kind="spline" if spline else "standard",
        coeffs=coeffs_out,
        sigma=sigma_out,
        tau=tau_out,
        lam=lam_out,
        spec=spec,
        n_coef=n_coef,
        basis=design.basis if spline else None,
        elapsed_seconds=elapsed,
    )


def run_chains(
    design,
    spec: ProjectionSpec,
    config: SamplerConfig,
    n_chains: int = 1,
    n_jobs: int = 1,
) -> PosteriorDraws:
    """Run ``n_chains`` independent chains and merge their draws.

    Chain 0 uses the configured stream directly (so a one-chain run matches
    :func:`run_gibbs`); further chains use derived substreams.  Draws are
    merged in chain order, independent of scheduling.
    """
    if n_chains < 1:
        raise InvalidParameter("n_chains must be >= 1")
    base_stream = config.rng()
    streams = [base_stream if c == 0 else base_stream.child(c) for c in range(n_chains)]
    if n_chains == 1 or n_jobs == 1:
        parts = [run_gibbs(design, spec, config, rng=s) for s in streams]
    else:
        parts = Parallel(n_jobs=min(n_jobs, n_chains))(
            delayed(run_gibbs)(design, spec, config, rng=s) for s in streams
        )
    return PosteriorDraws.merge(parts)
