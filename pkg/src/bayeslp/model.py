"""Projection design assembly, prior precision matrices, and the likelihood.

Coefficient ordering conventions used throughout the package:

* direct parameterization: the stacked coefficient vector is horizon-major,
  ``theta = (theta_{h_1}, ..., theta_{h_H})`` with each block holding the J
  regressor coefficients for one horizon;
* spline parameterization: the stacked vector is coefficient-major,
  ``vartheta = (vartheta_1, ..., vartheta_J)`` with each block holding the K
  basis weights for one regressor's coefficient curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .basis import SplineBasis, bspline_basis, default_knot_grid, difference_matrix
from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InsufficientData,
    InvalidParameter,
)
from .kernel import cholesky_lower, solve_lower

__all__ = [
    "Hyper",
    "SplineSettings",
    "ProjectionSpec",
    "SeriesBundle",
    "DesignSet",
    "SplineDesign",
    "build_design",
    "build_spline_design",
    "assemble_Q_standard",
    "assemble_Q_spline",
    "normal_prior_precision",
    "log_likelihood",
    "extract_sequence",
    "irf_from_spline",
]

PRIORS = ("normal", "nrp", "arp")


@dataclass(frozen=True)
class Hyper:
    """Hyperparameters of the smoothing and covariance priors.

    ``nu1, nu2`` parameterize the gamma prior on each global smoothing
    parameter, ``eta1, eta2`` the gamma prior on the local ones.  ``xi``
    (degrees of freedom, default ``H + 2``) and ``xi_scale`` (scale matrix,
    default identity) parameterize the inverse-Wishart prior on the residual
    covariance.
    """

    nu1: float = 0.01
    nu2: float = 0.01
    eta1: float = 0.5
    eta2: float = 0.5
    xi: float | None = None
    xi_scale: float | None = None

    def __post_init__(self):
        for name in ("nu1", "nu2", "eta1", "eta2"):
            if getattr(self, name) <= 0:
                raise InvalidParameter(f"hyperparameter {name} must be strictly positive")
        if self.xi_scale is not None and self.xi_scale <= 0:
            raise InvalidParameter("xi_scale must be strictly positive")

    def resolve_xi(self, n_horizons: int) -> float:
        xi = self.xi if self.xi is not None else n_horizons + 2.0
        if not xi > n_horizons - 1:
            raise InvalidParameter(f"xi must exceed H - 1 = {n_horizons - 1}, got {xi}")
        return float(xi)

    def resolve_xi_scale(self, n_horizons: int) -> np.ndarray:
        c = 1.0 if self.xi_scale is None else float(self.xi_scale)
        return c * np.eye(n_horizons)


@dataclass(frozen=True)
class SplineSettings:
    """Settings of the B-spline expansion of the coefficient curves."""

    degree: int = 3
    knot_mode: str = "default"  # "default" (fully supported) or "paper_literal"

    def __post_init__(self):
        if self.degree < 0:
            raise InvalidParameter(f"spline degree must be nonnegative, got {self.degree}")
        if self.knot_mode not in ("default", "paper_literal"):
            raise InvalidParameter(f"unknown knot_mode {self.knot_mode!r}")


@dataclass(frozen=True)
class ProjectionSpec:
    """Everything that defines one projection estimation problem.

    Attributes
    ----------
    horizons : tuple of int
        Strictly increasing projection points.
    penalty_order : int
        Order of the difference penalty (2 pulls coefficient sequences
        toward straight lines).
    prior : str
        ``"normal"`` (independent Gaussian), ``"nrp"`` (global smoothing
        parameter per coefficient sequence), or ``"arp"`` (adds local,
        per-horizon smoothing parameters).
    normal_variance : float
        Prior variance of each coefficient under the ``"normal"`` prior.
    hyper : Hyper
    spline : SplineSettings or None
        When set, coefficient curves are expanded in a B-spline basis.
    """

    horizons: tuple[int, ...]
    penalty_order: int = 2
    prior: str = "nrp"
    normal_variance: float = 100.0
    hyper: Hyper = field(default_factory=Hyper)
    spline: SplineSettings | None = None

    def __post_init__(self):
        horizons = tuple(int(h) for h in self.horizons)
        object.__setattr__(self, "horizons", horizons)
        if len(horizons) < 1:
            raise InvalidParameter("need at least one projection point")
        if any(b <= a for a, b in zip(horizons, horizons[1:])):
            raise InvalidParameter("horizons must be strictly increasing")
        if self.prior not in PRIORS:
            raise InvalidParameter(f"prior must be one of {PRIORS}, got {self.prior!r}")
        if self.prior != "normal" and not 1 <= self.penalty_order < len(horizons):
            raise InvalidParameter(
                f"penalty order {self.penalty_order} must lie in [1, H) with H={len(horizons)}"
            )
        if self.normal_variance <= 0:
            raise InvalidParameter("normal_variance must be strictly positive")
        self.hyper.resolve_xi(len(horizons))

    @property
    def n_horizons(self) -> int:
        return len(self.horizons)

    def with_prior(self, prior: str, **hyper_updates) -> "ProjectionSpec":
        """Copy of this spec with a different prior (and optional hyper tweaks)."""
        hyper = replace(self.hyper, **hyper_updates) if hyper_updates else self.hyper
        return replace(self, prior=prior, hyper=hyper)


@dataclass(frozen=True)
class SeriesBundle:
    """Raw aligned inputs for design construction.

    ``y`` is the response series and ``z`` the shock series; both enter the
    regressor set through their lags.  ``shocks`` optionally replaces the
    single contemporaneous shock column with several (e.g. a sign-split
    shock); by default the single column ``z`` is used.  ``controls`` maps
    names to additional series whose lags enter as covariates.
    """

    y: np.ndarray
    z: np.ndarray
    shocks: np.ndarray | None = None
    controls: dict[str, np.ndarray] = field(default_factory=dict)
    trend: bool = False

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        z = np.asarray(self.z, dtype=float)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)
        if y.ndim != 1 or z.ndim != 1 or len(y) != len(z):
            raise DimensionMismatch("y and z must be 1-d series of equal length")
        if self.shocks is not None:
            shocks = np.atleast_2d(np.asarray(self.shocks, dtype=float))
            if shocks.shape[0] == len(y):
                pass
            elif shocks.shape[1] == len(y):
                shocks = shocks.T
            else:
                raise DimensionMismatch("shocks must align with the series length")
            object.__setattr__(self, "shocks", shocks)
        for name, series in self.controls.items():
            if len(np.asarray(series)) != len(y):
                raise DimensionMismatch(f"control {name!r} does not align with y")


@dataclass(frozen=True)
class DesignSet:
    """Aligned response matrix and regressor matrix for the stacked system.

    ``X`` is ``T_eff x J`` with the contemporaneous shock column(s) first,
    then the intercept, then remaining covariates; ``Y`` is ``T_eff x H``
    with ``Y[t, i]`` the response ``h_i`` periods after row ``t``.
    """

    X: np.ndarray
    Y: np.ndarray
    horizons: tuple[int, ...]
    columns: tuple[str, ...]
    n_shocks: int = 1

    @property
    def t_eff(self) -> int:
        return self.X.shape[0]

    @property
    def n_regressors(self) -> int:
        return self.X.shape[1]

    @property
    def n_horizons(self) -> int:
        return self.Y.shape[1]


@dataclass(frozen=True)
class SplineDesign:
    """A :class:`DesignSet` paired with the basis expanding its coefficients."""

    design: DesignSet
    basis: SplineBasis

    @property
    def n_weights(self) -> int:
        return self.basis.n_functions

    def xtilde_block(self, i: int) -> np.ndarray:
        """Expanded regressor matrix for horizon index ``i``.

        Row ``t`` is the Kronecker product of ``X[t]`` with the basis row
        for ``horizons[i]``, matching the coefficient-major ordering of the
        spline coefficient vector.
        """
        if not 0 <= i < self.design.n_horizons:
            raise IndexOutOfRange(f"horizon index {i} out of range")
        phi = self.basis.values[i]
        return np.einsum("tj,k->tjk", self.design.X, phi).reshape(self.design.t_eff, -1)


def build_design(raw: SeriesBundle, spec: ProjectionSpec, lags: int = 4) -> DesignSet:
    """Align regressors and leads of the response into a projection design.

    Row ``t`` of the design pairs the period-``t`` regressors (shock,
    intercept, optional trend, then ``lags`` lags of the response, the
    shock, and each control) with the responses at ``t + h`` for every
    projection point ``h``.  Leading rows are consumed by lag construction
    and trailing rows by the largest horizon.

    Raises
    ------
    InsufficientData
        If fewer than ``J + 1`` usable rows remain.
    """
    if lags < 0:
        raise InvalidParameter("lags must be nonnegative")
    y, z = raw.y, raw.z
    n = len(y)
    h_max = spec.horizons[-1]
    t_eff = n - lags - h_max
    shocks = raw.shocks if raw.shocks is not None else z[:, None]

    cols: list[np.ndarray] = []
    names: list[str] = []
    rows = slice(lags, n - h_max)
    for q in range(shocks.shape[1]):
        cols.append(shocks[rows, q])
        names.append("z" if shocks.shape[1] == 1 else f"z{q + 1}")
    cols.append(np.ones(max(t_eff, 0)))
    names.append("const")
    if raw.trend:
        cols.append(np.arange(1.0, t_eff + 1))
        names.append("trend")
    lagged = [("y", y), ("z", z)] + sorted((k, np.asarray(v, float)) for k, v in raw.controls.items())
    for name, series in lagged:
        for lag in range(1, lags + 1):
            cols.append(series[lags - lag : n - h_max - lag])
            names.append(f"{name}.l{lag}")

    n_regressors = len(cols)
    if t_eff < n_regressors + 1:
        raise InsufficientData(
            f"effective sample {t_eff} too short for {n_regressors} regressors "
            f"(raw length {n}, lags {lags}, max horizon {h_max})"
        )
    x = np.column_stack(cols)
    y_mat = np.column_stack([y[lags + h : lags + h + t_eff] for h in spec.horizons])
    return DesignSet(
        X=x,
        Y=y_mat,
        horizons=spec.horizons,
        columns=tuple(names),
        n_shocks=shocks.shape[1],
    )


def build_spline_design(design: DesignSet, spec: ProjectionSpec) -> SplineDesign:
    """Attach the B-spline basis implied by ``spec.spline`` to a design."""
    if spec.spline is None:
        raise InvalidParameter("spec has no spline settings")
    knots = default_knot_grid(
        design.horizons[0],
        design.horizons[-1],
        spec.spline.degree,
        paper_literal=spec.spline.knot_mode == "paper_literal",
    )
    sb = bspline_basis(knots, spec.spline.degree, np.asarray(design.horizons, dtype=float))
    return SplineDesign(design=design, basis=sb)


def _penalty_block(d_mat: np.ndarray, tau_j: float, lambda_j: np.ndarray) -> np.ndarray:
    if tau_j <= 0:
        raise InvalidParameter("tau entries must be strictly positive")
    lambda_j = np.asarray(lambda_j, dtype=float)
    if lambda_j.shape != (d_mat.shape[0],):
        raise DimensionMismatch(
            f"lambda vector length {lambda_j.shape} != penalty rows {d_mat.shape[0]}"
        )
    if np.any(lambda_j <= 0):
        raise InvalidParameter("lambda entries must be strictly positive")
    return tau_j * (d_mat.T @ (lambda_j[:, None] * d_mat))


def assemble_Q_standard(spec: ProjectionSpec, tau, lam=None) -> np.ndarray:
    """Prior precision for the direct parameterization (horizon-major).

    ``Q = sum_j (tau_j D' Lambda_j D) (x) E_j`` with ``D`` the
    ``penalty_order`` difference matrix over the horizons and ``E_j`` the
    selector of coefficient ``j``; equivalently, the penalty couples each
    coefficient's values across neighboring horizons.  With all local
    weights equal to one this reduces to ``(D'D) (x) diag(tau)``.
    """
    h = spec.n_horizons
    tau = np.asarray(tau, dtype=float)
    n_coef = len(tau)
    d_mat = difference_matrix(h, spec.penalty_order)
    if lam is None:
        lam = np.ones((n_coef, h - spec.penalty_order))
    q = np.zeros((h * n_coef, h * n_coef))
    for j in range(n_coef):
        idx = j + n_coef * np.arange(h)
        q[np.ix_(idx, idx)] = _penalty_block(d_mat, tau[j], lam[j])
    return q


def assemble_Q_spline(spec: ProjectionSpec, n_weights: int, tau, lam=None) -> np.ndarray:
    """Prior precision for the spline parameterization (coefficient-major).

    Block-diagonal: ``Q = blkdiag(tau_1 D' Lambda_1 D, ..., tau_J D' Lambda_J D)``
    with ``D`` the difference matrix over the ``n_weights`` basis weights.
    """
    tau = np.asarray(tau, dtype=float)
    n_coef = len(tau)
    d_mat = difference_matrix(n_weights, spec.penalty_order)
    if lam is None:
        lam = np.ones((n_coef, n_weights - spec.penalty_order))
    q = np.zeros((n_weights * n_coef, n_weights * n_coef))
    for j in range(n_coef):
        sl = slice(j * n_weights, (j + 1) * n_weights)
        q[sl, sl] = _penalty_block(d_mat, tau[j], lam[j])
    return q


def normal_prior_precision(spec: ProjectionSpec, dim: int) -> np.ndarray:
    """Independent-Gaussian prior precision ``I / normal_variance``."""
    return np.eye(dim) / spec.normal_variance


def _fitted(design, coeffs: np.ndarray) -> np.ndarray:
    """T_eff x H fitted-value matrix for either parameterization."""
    if isinstance(design, SplineDesign):
        k = design.n_weights
        weights = np.asarray(coeffs, dtype=float).reshape(-1, k)
        curves = weights @ design.basis.values.T  # J x H coefficient curves
        return design.design.X @ curves
    theta = np.asarray(coeffs, dtype=float).reshape(design.n_horizons, design.n_regressors)
    return design.X @ theta.T


def residual_matrix(design, coeffs: np.ndarray) -> np.ndarray:
    """Realized residuals ``Y - fitted`` (``T_eff x H``)."""
    base = design.design if isinstance(design, SplineDesign) else design
    return base.Y - _fitted(design, coeffs)


def log_likelihood(design, coeffs, sigma) -> float:
    """Gaussian log likelihood of the stacked projection system.

    ``-(H T / 2) log 2 pi - (T / 2) log|Sigma| - tr(U'U Sigma^{-1}) / 2``
    where ``U`` is the realized residual matrix.
    """
    sigma = np.asarray(sigma, dtype=float)
    base = design.design if isinstance(design, SplineDesign) else design
    t_eff, n_h = base.Y.shape
    if sigma.shape != (n_h, n_h):
        raise DimensionMismatch(f"sigma shape {sigma.shape} != ({n_h}, {n_h})")
    lower = cholesky_lower(sigma)
    resid = residual_matrix(design, coeffs)
    white = solve_lower(lower, resid.T)
    logdet = 2.0 * np.sum(np.log(np.diag(lower)))
    return float(
        -0.5 * (n_h * t_eff * np.log(2.0 * np.pi) + t_eff * logdet + np.sum(white**2))
    )


def extract_sequence(theta: np.ndarray, j: int, spec: ProjectionSpec, n_coef: int | None = None) -> np.ndarray:
    """Coefficient ``j``'s values across all horizons (0-based index).

    For the horizon-major stacked vector this is a stride gather;
    ``j = 0`` returns the impulse-response sequence of the (first) shock.
    """
    theta = np.asarray(theta, dtype=float)
    if n_coef is None:
        if theta.size % spec.n_horizons:
            raise DimensionMismatch(
                f"coefficient vector of size {theta.size} is not a multiple of H={spec.n_horizons}"
            )
        n_coef = theta.size // spec.n_horizons
    if not 0 <= j < n_coef:
        raise IndexOutOfRange(f"coefficient index {j} out of range [0, {n_coef})")
    return theta[j::n_coef]


def irf_from_spline(weights: np.ndarray, sb: SplineBasis) -> np.ndarray:
    """Map one coefficient's basis weights to its values on the horizons."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (sb.n_functions,):
        raise DimensionMismatch(
            f"weight vector length {weights.shape} != basis size {sb.n_functions}"
        )
    return sb.values @ weights
