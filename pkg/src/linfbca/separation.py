"""Separation criteria and the rotation search that optimizes them.

Two criteria are supported, identified by the strings ``"linf"`` and
``"vm"``:

* ``linf`` minimizes the sum of per-estimate peak amplitudes (infinity
  norms) over orthogonal separating matrices. For bounded sources whose
  samples include every hypercube vertex, that sum is minimized exactly
  at signed permutations of the sources.
* ``vm`` is the volume-maximization baseline: the ratio of the estimates'
  covariance ellipsoid volume to the product of their per-row ranges.
  It is optimized here with the same whitening and rotation machinery as
  ``linf`` so that benchmark comparisons isolate the criterion rather
  than the optimizer; under rotations the covariance determinant is
  constant, so maximizing the ratio reduces to shrinking the ranges.

The optimizer is a grid search over Givens rotation angles, one source
pair at a time, with the grid step refined by 1.5x after every pass over
all pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import ContractViolationError, DegenerateMixtureError, NumericalError
from .linalg import as_matrix, covariance, jacobi_eigen

__all__ = [
    "DEFAULT_MAX_ITER",
    "DEFAULT_MU0",
    "METHODS",
    "SeparationOutcome",
    "WhiteningResult",
    "brute_force_2d",
    "givens_search",
    "range_per_row",
    "separate",
    "sum_linf",
    "unit_ball_volume",
    "volume_objective",
    "whiten",
]

METHODS = ("linf", "vm")

DEFAULT_MAX_ITER = 15
DEFAULT_MU0 = math.pi / 50

EIGENVALUE_FLOOR = 1e-12

_SWEEP_BLOCK_ELEMS = 1 << 19


def _check_method(method: str) -> None:
    if method not in METHODS:
        raise ContractViolationError(
            f"unknown criterion {method!r}, expected one of {METHODS}"
        )


@dataclass(frozen=True, eq=False)
class WhiteningResult:
    """Whitening matrix, whitened data, and the covariance spectrum.

    ``x_white = b @ (x - row means)`` has identity covariance within 1e-8.
    """

    b: np.ndarray
    x_white: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True, eq=False)
class SeparationOutcome:
    """Separating rotation, estimates, and the optimizer's cost trace.

    ``cost_trace`` holds one (outer iteration, best cost so far) pair per
    outer iteration and is non-increasing. For ``vm`` the recorded cost is
    the negated volume objective.
    """

    w: np.ndarray
    y: np.ndarray
    cost_trace: tuple
    method: str


def sum_linf(y) -> float:
    """Sum of the rows' infinity norms (peak absolute amplitudes)."""
    y = as_matrix(y, "y")
    return float(np.abs(y).max(axis=1).sum())


def range_per_row(y) -> np.ndarray:
    """Per-row max minus min."""
    y = as_matrix(y, "y")
    return y.max(axis=1) - y.min(axis=1)


def unit_ball_volume(n: int) -> float:
    """Volume of the n-dimensional unit Euclidean ball."""
    if n < 1:
        raise ContractViolationError("dimension must be >= 1")
    return math.exp(0.5 * n * math.log(math.pi) - math.lgamma(n / 2.0 + 1.0))


def volume_objective(y) -> float:
    """Support-volume proxy to maximize: V_n sqrt(det cov(y)) / prod(ranges).

    The rotation search minimizes the negation of this value.
    """
    y = as_matrix(y, "y")
    if y.shape[1] < 2:
        raise ContractViolationError("volume objective needs at least 2 samples")
    ranges = range_per_row(y)
    if np.any(ranges <= 0):
        raise ContractViolationError("volume objective is undefined for a constant row")
    det = float(np.linalg.det(covariance(y)))
    if det <= 0:
        raise NumericalError(f"covariance determinant is not positive ({det:.3e})")
    return unit_ball_volume(y.shape[0]) * math.sqrt(det) / float(np.prod(ranges))


def whiten(x) -> WhiteningResult:
    """Decorrelate and rescale x so its covariance is the identity.

    The whitening matrix is Lambda^(-1/2) E^T from the eigendecomposition
    of cov(x), applied to the mean-removed data. An eigenvalue below
    1e-12 times the largest one means the mixture is rank deficient and
    raises DegenerateMixtureError rather than being regularized away.
    """
    x = as_matrix(x, "x")
    eig = jacobi_eigen(covariance(x))
    lam = eig.eigenvalues
    if lam[0] <= 0 or lam[-1] <= EIGENVALUE_FLOOR * lam[0]:
        raise DegenerateMixtureError(
            f"covariance eigenvalue {lam[-1]:.3e} is below the floor "
            f"{EIGENVALUE_FLOOR:.0e} * {lam[0]:.3e}; mixture is not full rank"
        )
    b = (eig.eigenvectors / np.sqrt(lam)[None, :]).T
    x_white = b @ (x - x.mean(axis=1, keepdims=True))
    residual = float(np.max(np.abs(covariance(x_white) - np.eye(x.shape[0]))))
    if residual > 1e-8:
        raise NumericalError(f"whitening residual {residual:.3e} exceeds 1e-8")
    return WhiteningResult(b=b, x_white=x_white, eigenvalues=lam)


def _plane_support_points(xm, xk) -> np.ndarray:
    """Convex hull vertices of the 2-D scatter {(xm[n], xk[n])}.

    The per-angle peak and range of a rotated row are maxima and minima
    of linear functionals over this scatter, so evaluating them on the
    hull vertices alone is exact and shrinks the sweep from the sample
    count to a few dozen points. Degenerate clouds fall back to the full
    point set.
    """
    pts = np.column_stack([xm, xk])
    if pts.shape[0] > 8:
        try:
            return pts[ConvexHull(pts).vertices]
        except QhullError:
            pass
    return pts


def _pair_profile(xm, xk, thetas, vm: bool, plane) -> np.ndarray:
    """Cost contribution of one source pair across a grid of angles.

    For ``linf`` this is the sum of the two rotated rows' peak amplitudes;
    for ``vm`` it is the product of their ranges. Both criteria pick the
    angle minimizing this contribution, all other rows being unaffected
    by a rotation in this plane.
    """
    pts = _plane_support_points(xm, xk)
    out = np.empty(thetas.size)
    block = max(1, _SWEEP_BLOCK_ELEMS // max(1, pts.shape[0]))
    for start in range(0, thetas.size, block):
        th = thetas[start : start + block]
        c = np.cos(th)
        s = np.sin(th)
        # Row m rotates onto direction (cos, -sin), row k onto (sin, cos).
        pm = pts @ np.stack([c, -s])
        pk = pts @ np.stack([s, c])
        if vm:
            vals = (pm.max(axis=0) - pm.min(axis=0)) * (pk.max(axis=0) - pk.min(axis=0))
        else:
            vals = np.maximum(pm.max(axis=0), -pm.min(axis=0)) + np.maximum(
                pk.max(axis=0), -pk.min(axis=0)
            )
        out[start : start + block] = vals
    if not np.isfinite(out).all():
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise NumericalError(
            f"non-finite cost in plane {plane} at theta={float(thetas[bad]):.6f}"
        )
    return out


def givens_search(
    x,
    criterion: str,
    max_iter: int = DEFAULT_MAX_ITER,
    mu0: float = DEFAULT_MU0,
) -> SeparationOutcome:
    """Minimize a separation cost over rotations by per-plane angle sweeps.

    Starting from the identity, each outer iteration visits every source
    pair (m, k) with m < k. For each pair the rotation angle is swept over
    [0, pi) with the current grid step; the best angle (ties broken toward
    the smallest, and 0 is always on the grid) is applied to the running
    rotation before moving to the next pair, so a pair whose sweep finds
    nothing better than angle 0 leaves the state unchanged. After all
    pairs the grid step shrinks by 1.5x, refining the search.

    Parameters
    ----------
    x : array_like
        Observations, one row per channel, at least two rows. Whitening
        or mean removal is the caller's job (see ``separate``).
    criterion : str
        "linf" or "vm".
    max_iter : int
        Number of outer iterations (full passes over all pairs).
    mu0 : float
        Initial grid step in radians, in (0, pi).

    Returns
    -------
    SeparationOutcome
        Orthogonal ``w`` (within 1e-8), estimates ``y = w @ x``, and the
        per-iteration best-cost trace.
    """
    x = as_matrix(x, "x")
    _check_method(criterion)
    n, _ = x.shape
    if n < 2:
        raise ContractViolationError("rotation search needs at least 2 rows")
    if not (0.0 < mu0 < math.pi):
        raise ContractViolationError(f"mu0 must lie in (0, pi), got {mu0!r}")
    if max_iter < 1:
        raise ContractViolationError("max_iter must be >= 1")

    vm = criterion == "vm"
    y = x.copy()
    w = np.eye(n)
    if vm:
        det0 = float(np.linalg.det(covariance(x)))
        if det0 <= 0:
            raise NumericalError(
                f"covariance determinant is not positive ({det0:.3e})"
            )
        scale = unit_ball_volume(n) * math.sqrt(det0)
        ranges = y.max(axis=1) - y.min(axis=1)
        if np.any(ranges <= 0):
            raise ContractViolationError("input has a constant row")
        cost_now = lambda: -scale / float(np.prod(ranges))  # noqa: E731
    else:
        peaks = np.abs(y).max(axis=1)
        cost_now = lambda: float(peaks.sum())  # noqa: E731

    best = cost_now()
    trace = []
    mu = float(mu0)
    for it in range(max_iter):
        for m in range(n - 1):
            for k in range(m + 1, n):
                n_grid = int(math.ceil(math.pi / mu))
                thetas = np.arange(n_grid) * mu
                profile = _pair_profile(y[m], y[k], thetas, vm, plane=(m, k))
                j = int(np.argmin(profile))
                if j > 0:
                    c = math.cos(float(thetas[j]))
                    s = math.sin(float(thetas[j]))
                    ym = c * y[m] - s * y[k]
                    yk = s * y[m] + c * y[k]
                    y[m] = ym
                    y[k] = yk
                    wm = c * w[m] - s * w[k]
                    wk = s * w[m] + c * w[k]
                    w[m] = wm
                    w[k] = wk
                    if vm:
                        ranges[m] = ym.max() - ym.min()
                        ranges[k] = yk.max() - yk.min()
                    else:
                        peaks[m] = np.abs(ym).max()
                        peaks[k] = np.abs(yk).max()
        mu /= 1.5
        best = min(best, cost_now())
        trace.append((it, best))

    drift = float(np.max(np.abs(w @ w.T - np.eye(n))))
    if drift > 1e-8:
        raise NumericalError(f"rotation drifted from orthogonality by {drift:.3e}")
    return SeparationOutcome(w=w, y=w @ x, cost_trace=tuple(trace), method=criterion)


def brute_force_2d(x, criterion: str, resolution: int):
    """Exhaustive angle scan for two-channel problems; oracle for the search.

    Evaluates the criterion cost of rotating ``x`` by every angle
    j * pi / resolution for j in [0, resolution) and returns the grid
    minimizer as ``(theta, cost)``. Ties break toward the smallest angle.
    """
    x = as_matrix(x, "x")
    _check_method(criterion)
    if x.shape[0] != 2:
        raise ContractViolationError(f"brute_force_2d needs a 2-row input, got {x.shape}")
    if resolution < 1:
        raise ContractViolationError("resolution must be >= 1")
    vm = criterion == "vm"
    thetas = np.arange(resolution) * (math.pi / resolution)
    profile = _pair_profile(x[0], x[1], thetas, vm, plane=(0, 1))
    if vm:
        det0 = float(np.linalg.det(covariance(x)))
        if det0 <= 0:
            raise NumericalError(f"covariance determinant is not positive ({det0:.3e})")
        costs = -unit_ball_volume(2) * math.sqrt(det0) / profile
    else:
        costs = profile
    j = int(np.argmin(costs))
    return float(thetas[j]), float(costs[j])


def separate(
    x,
    criterion: str,
    assume_orthogonal_mixing: bool = False,
    max_iter: int = DEFAULT_MAX_ITER,
    mu0: float = DEFAULT_MU0,
):
    """Full separation pipeline: whiten (or just center) then rotate.

    With ``assume_orthogonal_mixing`` unset, the observations are whitened
    first and the rotation search runs on the whitened data. When set,
    whitening is skipped and the search runs directly on the mean-removed
    observations (the criteria are translation sensitive, and bounded
    sources here are symmetric about zero).

    Returns
    -------
    (WhiteningResult | None, SeparationOutcome)
        The whitening result is None on the orthogonal-mixing path.
    """
    x = as_matrix(x, "x")
    if assume_orthogonal_mixing:
        centered = x - x.mean(axis=1, keepdims=True)
        outcome = givens_search(centered, criterion, max_iter=max_iter, mu0=mu0)
        return None, outcome
    whitening = whiten(x)
    outcome = givens_search(whitening.x_white, criterion, max_iter=max_iter, mu0=mu0)
    return whitening, outcome
