"""Difference (penalty) matrices and B-spline bases over the horizon grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientRange, InvalidOrder, InvalidParameter, OutOfSupport

__all__ = ["SplineBasis", "difference_matrix", "default_knot_grid", "bspline_basis"]


def difference_matrix(n: int, order: int) -> np.ndarray:
    """Forward-difference matrix of the given order.

    Returns the ``(n - order) x n`` matrix ``D`` such that ``(D @ theta)[i]``
    is the order-th forward difference of ``theta`` starting at position
    ``i``.  Each row holds the signed binomial coefficients; row sums are
    zero, and ``D`` annihilates any polynomial sequence of degree < order.

    Raises
    ------
    InvalidOrder
        If ``order < 1`` or ``order >= n``.
    """
    if order < 1 or order >= n:
        raise InvalidOrder(f"difference order must satisfy 1 <= order < n, got order={order}, n={n}")
    return np.diff(np.eye(n), order, axis=0)


def default_knot_grid(h_first: float, h_last: float, degree: int, paper_literal: bool = False) -> np.ndarray:
    """Equidistant unit-spaced knot grid for a basis over ``[h_first, h_last]``.

    The default grid over-extends the evaluation range by ``degree`` knots on
    the left and ``max(degree, 1)`` on the right, so that every point of the
    range (endpoints included) has full support and the basis sums to one
    there.  ``paper_literal=True`` instead reproduces the narrower grid from
    ``h_first - 2`` to ``h_last - 1``; with that grid the right end of the
    range is *not* fully supported and evaluation there raises
    :class:`OutOfSupport`.

    Raises
    ------
    InsufficientRange
        If the range is shorter than ``degree + 1`` unit intervals.
    """
    if degree < 0:
        raise InvalidParameter(f"degree must be nonnegative, got {degree}")
    if not h_first < h_last:
        raise InsufficientRange(f"need h_first < h_last, got [{h_first}, {h_last}]")
    if h_last - h_first < degree + 1:
        raise InsufficientRange(
            f"range [{h_first}, {h_last}] spans fewer than degree+1 = {degree + 1} unit intervals"
        )
    if paper_literal:
        left, right = h_first - 2, h_last - 1
    else:
        left, right = h_first - degree, h_last + max(degree, 1)
    n_steps = int(np.ceil(right - left - 1e-12))
    return left + np.arange(n_steps + 1.0)


@dataclass(frozen=True)
class SplineBasis:
    """B-spline basis evaluated on a fixed grid of projection points.

    Attributes
    ----------
    degree : int
        Polynomial degree of each piece.
    knots : ndarray
        Strictly increasing knot vector.
    eval_points : ndarray
        Points at which the basis was evaluated (the projection horizons).
    values : (len(eval_points), K) ndarray
        ``values[i, k]`` is basis function ``k`` at ``eval_points[i]``.
        Rows are nonnegative and sum to one at fully supported points.
    """

    degree: int
    knots: np.ndarray
    eval_points: np.ndarray
    values: np.ndarray

    @property
    def n_functions(self) -> int:
        return self.values.shape[1]


def bspline_basis(knots, degree: int, eval_points) -> SplineBasis:
    """Evaluate the B-spline basis by the Cox-de Boor recursion.

    The basis has ``K = len(knots) - degree - 1`` functions.  Every
    evaluation point must lie in the fully supported span
    ``[knots[degree], knots[-degree - 1]]`` where the basis forms a
    partition of unity.

    Raises
    ------
    OutOfSupport
        If an evaluation point lies outside the fully supported span.
    """
    knots = np.asarray(knots, dtype=float)
    eval_points = np.atleast_1d(np.asarray(eval_points, dtype=float))
    if degree < 0:
        raise InvalidParameter(f"degree must be nonnegative, got {degree}")
    if knots.ndim != 1 or len(knots) < degree + 2:
        raise InvalidParameter(f"need at least degree+2 knots, got {len(knots)}")
    if np.any(np.diff(knots) <= 0):
        raise InvalidParameter("knots must be strictly increasing")

    lo, hi = knots[degree], knots[-degree - 1]
    if np.any(eval_points < lo) or np.any(eval_points > hi):
        bad = eval_points[(eval_points < lo) | (eval_points > hi)][0]
        raise OutOfSupport(f"evaluation point {bad} outside fully supported span [{lo}, {hi}]")

    n_funcs = len(knots) - degree - 1
    values = np.zeros((len(eval_points), n_funcs))
    for row, x in enumerate(eval_points):
        # Interval index mu with knots[mu] <= x < knots[mu+1]; the right
        # boundary of the supported span folds into the last interval.
        mu = int(np.searchsorted(knots, x, side="right")) - 1
        mu = min(mu, len(knots) - degree - 2)
        values[row, mu - degree : mu + 1] = _active_values(knots, degree, mu, x)
    return SplineBasis(degree=degree, knots=knots, eval_points=eval_points, values=values)


def _active_values(knots, degree, mu, x):
    """Cox-de Boor triangle: the degree+1 basis values active on interval mu.

    Returns ``vals`` with ``vals[r]`` the value of basis function
    ``mu - degree + r`` at ``x``.
    """
    vals = np.zeros(degree + 1)
    left = np.zeros(degree + 1)
    right = np.zeros(degree + 1)
    vals[0] = 1.0
    for j in range(1, degree + 1):
        left[j] = x - knots[mu + 1 - j]
        right[j] = knots[mu + j] - x
        saved = 0.0
        for r in range(j):
            temp = vals[r] / (right[r + 1] + left[j - r])
            vals[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        vals[j] = saved
    return vals
