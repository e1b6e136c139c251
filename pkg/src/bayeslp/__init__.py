"""Bayesian local projections with roughness-penalty priors.

The package estimates impulse-response profiles by stacking per-horizon
projections into one Gaussian system and placing difference-penalty
(random-walk) priors on each coefficient's path across horizons, optionally
through a B-spline expansion of the paths.  Posterior simulation is an
exact block Gibbs sampler; smoothing strength is inferred rather than
fixed.
"""

__version__ = "0.1.0"

from . import basis, cli, diagnostics, ingest, kernel, model, sampler, simulate
from .basis import SplineBasis, bspline_basis, default_knot_grid, difference_matrix
from .diagnostics import FitReport, IrfSummary, fit_report, summarize_irf
from .kernel import RngStream
from .model import (
    DesignSet,
    Hyper,
    ProjectionSpec,
    SeriesBundle,
    SplineDesign,
    SplineSettings,
    build_design,
    build_spline_design,
)
from .sampler import PosteriorDraws, SamplerConfig, run_chains, run_gibbs
from .simulate import DgpSpec, ExperimentCell, MetricReport, run_experiment

__all__ = [
    "__version__",
    "basis",
    "cli",
    "diagnostics",
    "ingest",
    "kernel",
    "model",
    "sampler",
    "simulate",
    "SplineBasis",
    "bspline_basis",
    "default_knot_grid",
    "difference_matrix",
    "FitReport",
    "IrfSummary",
    "fit_report",
    "summarize_irf",
    "RngStream",
    "DesignSet",
    "Hyper",
    "ProjectionSpec",
    "SeriesBundle",
    "SplineDesign",
    "SplineSettings",
    "build_design",
    "build_spline_design",
    "PosteriorDraws",
    "SamplerConfig",
    "run_chains",
    "run_gibbs",
    "DgpSpec",
    "ExperimentCell",
    "MetricReport",
    "run_experiment",
]
