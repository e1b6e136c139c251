"""Dense linear-algebra and random-variate kernels.

Everything here operates on plain ``numpy`` arrays.  Symmetric matrices
follow a lower-triangle-authoritative convention: routines only read the
lower triangle, so callers may pass matrices whose upper triangle is stale.
Sampling routines accept either an :class:`RngStream` (pure: the same
stream always yields the same draw) or a ``numpy.random.Generator`` (stateful:
successive calls advance it), which is what the Gibbs loop uses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, InvalidParameter, NotPositiveDefinite

__all__ = [
    "RngStream",
    "as_generator",
    "cholesky_lower",
    "solve_lower",
    "solve_upper",
    "sample_mvn_precision",
    "sample_gamma",
    "sample_inverse_wishart",
]

# Pivot smaller than PIVOT_RTOL * max(diag) is treated as a zero pivot:
# distinguishes genuinely rank-deficient matrices from roundoff.
PIVOT_RTOL = 1e-12

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    # Finalizer of the splitmix64 generator; good 64-bit avalanche mixing.
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


@dataclass(frozen=True)
class RngStream:
    """Value-type handle for a reproducible random stream.

    The same ``(seed, stream_id)`` pair always produces the same draw
    sequence.  Derived streams (:meth:`child`) are statistically independent,
    so parallel chains and replications can share one user-facing seed.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.seed < 2**64) or not (0 <= self.stream_id < 2**64):
            raise InvalidParameter("seed and stream_id must fit in 64 unsigned bits")

    def generator(self) -> np.random.Generator:
        """Fresh ``numpy`` generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.default_rng(ss)

    def child(self, *keys: int) -> "RngStream":
        """Derive an independent substream by folding ``keys`` into the id."""
        sid = self.stream_id
        for k in keys:
            sid = _splitmix64(sid ^ _splitmix64(int(k) & _MASK64))
        return RngStream(self.seed, sid)


def as_generator(rng) -> np.random.Generator:
    """Coerce an RngStream, Generator, or integer seed to a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise InvalidParameter(f"cannot interpret {type(rng).__name__} as a random source")


def cholesky_lower(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor ``L`` with ``L @ L.T == a``.

    Parameters
    ----------
    a : (n, n) ndarray
        Symmetric positive definite matrix; only the lower triangle is read.

    Returns
    -------
    (n, n) ndarray
        Lower-triangular factor with strictly positive diagonal.

    Raises
    ------
    NotPositiveDefinite
        If a leading minor is nonpositive, or any pivot falls below
        ``PIVOT_RTOL * max(diag(a))``.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    try:
        # LAPACK potrf reads only the lower triangle, matching the
        # lower-triangle-authoritative convention.
        lower = scipy.linalg.cholesky(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as err:
        raise NotPositiveDefinite(f"matrix is not positive definite: {err}") from None
    # LAPACK only rejects pivots <= 0; also reject pivots that are positive
    # but negligible relative to the diagonal scale.
    tol = PIVOT_RTOL * max(np.max(np.diag(a)), 0.0)
    if np.min(np.diag(lower)) ** 2 < tol:
        raise NotPositiveDefinite(
            f"pivot {np.min(np.diag(lower))**2:.3e} below tolerance {tol:.3e}; "
            "matrix is numerically rank deficient"
        )
    return lower


def solve_lower(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``lower @ x = b`` by forward substitution."""
    lower = np.asarray(lower, dtype=float)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != lower.shape[0]:
        raise DimensionMismatch(f"rhs length {b.shape[0]} != factor dim {lower.shape[0]}")
    return solve_triangular(lower, b, lower=True, check_finite=False)


def solve_upper(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``lower.T @ x = b`` by back substitution."""
    lower = np.asarray(lower, dtype=float)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != lower.shape[0]:
        raise DimensionMismatch(f"rhs length {b.shape[0]} != factor dim {lower.shape[0]}")
    return solve_triangular(lower, b, lower=True, trans="T", check_finite=False)


def sample_mvn_precision(precision, rhs, rng, size=None):
    """Draw from a Gaussian given its precision matrix ``P`` and ``P @ mean``.

    The draw targets ``N(m, P^{-1})`` with ``m = P^{-1} rhs``, computed
    through one Cholesky factorization and triangular solves only (the
    precision is never inverted):

    1. factor ``P = L L^T``;
    2. draw ``a ~ N(0, I)`` and solve ``L^T b = a`` (so ``b ~ N(0, P^{-1})``);
    3. solve ``L c = rhs`` then ``L^T m = c`` (so ``m = P^{-1} rhs``);
    4. return ``b + m``.

    Parameters
    ----------
    precision : (n, n) ndarray
        Symmetric positive definite precision matrix.
    rhs : (n,) ndarray
        Unnormalized mean term ``P @ mean``.
    rng : RngStream or numpy.random.Generator
        Randomness source.
    size : int, optional
        If given, return ``size`` independent draws as a ``(size, n)``
        array (one factorization, vectorized solves).

    Returns
    -------
    (n,) or (size, n) ndarray
    """
    rhs = np.asarray(rhs, dtype=float)
    precision = np.asarray(precision, dtype=float)
    if rhs.shape != (precision.shape[0],):
        raise DimensionMismatch(
            f"rhs shape {rhs.shape} incompatible with precision dim {precision.shape[0]}"
        )
    gen = as_generator(rng)
    lower = cholesky_lower(precision)
    n = lower.shape[0]
    a = gen.standard_normal(n if size is None else (n, size))
    b = solve_upper(lower, a)
    m = solve_upper(lower, solve_lower(lower, rhs))
    if size is None:
        return b + m
    return (b + m[:, None]).T


def sample_gamma(shape, rate, rng, size=None):
    """Draw from a gamma distribution in the shape-rate convention.

    Mean is ``shape / rate`` and variance ``shape / rate**2``.  ``shape``
    and ``rate`` may be arrays (broadcast against each other).
    """
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if np.any(shape <= 0) or np.any(rate <= 0):
        raise InvalidParameter("gamma shape and rate must be strictly positive")
    gen = as_generator(rng)
    out = gen.gamma(shape, 1.0 / rate, size=size)
    return out


def sample_inverse_wishart(scale, dof, rng, size=None):
    """Draw from an inverse-Wishart distribution.

    Uses the Bartlett factor of the Wishart with inverted scale: with
    ``scale = Ls Ls^T`` and ``A`` the lower Bartlett factor (chi-square
    diagonal, standard-normal subdiagonal), ``V = Ls A^{-T}`` gives the
    draw ``V V^T`` without ever inverting ``scale`` densely.

    Parameters
    ----------
    scale : (d, d) ndarray
        Positive definite scale matrix.
    dof : float
        Degrees of freedom; must exceed ``d - 1``.
    rng : RngStream or numpy.random.Generator
    size : int, optional
        If given, return ``(size, d, d)`` stacked draws.

    Returns
    -------
    (d, d) or (size, d, d) ndarray
        Positive definite draw(s); the mean is ``scale / (dof - d - 1)``
        when ``dof > d + 1``.
    """
    scale = np.asarray(scale, dtype=float)
    d = scale.shape[0]
    if scale.ndim != 2 or scale.shape[1] != d:
        raise DimensionMismatch(f"scale must be square, got shape {scale.shape}")
    if not dof > d - 1:
        raise InvalidParameter(f"inverse-Wishart needs dof > dim - 1 ({dof} <= {d - 1})")
    gen = as_generator(rng)
    ls = cholesky_lower(scale)

    if size is None:
        bart = _bartlett_lower(gen, d, dof)
        vt = solve_triangular(bart, ls.T, lower=True, check_finite=False)
        return vt.T @ vt

    bart = _bartlett_lower(gen, d, dof, size)
    # np.linalg.inv is batched; d is small wherever the batch path is used.
    vt = np.linalg.inv(bart) @ ls.T
    return np.einsum("sji,sjk->sik", vt, vt)


def _bartlett_lower(gen, d, dof, size=None):
    """Lower Bartlett factor(s) A with A A^T ~ Wishart(I_d, dof)."""
    shape = (d, d) if size is None else (size, d, d)
    a = np.zeros(shape)
    rows, cols = np.tril_indices(d, -1)
    diag = np.arange(d)
    chi = gen.chisquare(dof - diag, size=(d,) if size is None else (size, d))
    normals = gen.standard_normal(len(rows) if size is None else (size, len(rows)))
    a[..., diag, diag] = np.sqrt(chi)
    a[..., rows, cols] = normals
    return a
