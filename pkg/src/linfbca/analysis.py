"""Executable verification of the criterion's identifiability claims.

For bounded sources whose samples include every vertex of the amplitude
hypercube, any unit-norm linear combination has peak amplitude at least
the source bound A, with equality exactly at the signed canonical
directions. This module sweeps direction grids on the circle and sphere
to check that claim exhaustively, probes the known mixed-sign direction
that would slip through if only the two all-equal vertices were present,
and checks the matching lower bound N*A for the summed criterion under
random rotations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError
from .linalg import random_orthogonal
from .separation import sum_linf
from .sources import SourceEnsemble

__all__ = [
    "BoundReport",
    "ExtractionReport",
    "MIXED_SIGN_PROBE_3D",
    "SphereSweep",
    "check_extreme_points",
    "circle_sweep",
    "histogram_entropy",
    "infinity_norm_landscape",
    "sphere_sweep",
    "verify_extraction_theorem",
    "verify_separation_bound",
]

# Unit vector that equalizes the peak on the two all-equal-sign vertices
# alone; once all mixed-sign vertices are present it reaches 5A/3 and is
# excluded as a minimizer.
MIXED_SIGN_PROBE_3D = (-1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0)

# Angular slack, in grid steps, for deciding that a near-minimal sweep
# direction sits "at" a signed canonical vector. The landscape is flat to
# first order at the minimum, so one cell is padded by half.
GRID_CELL_SLACK = 1.5

VERTEX_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class SphereSweep:
    """Grid of unit direction vectors with its angular resolution.

    ``vectors`` holds one unit-norm direction per row; ``grid_step`` is
    the largest angular spacing between neighboring grid points.
    """

    dimension: int
    vectors: np.ndarray
    grid_step: float


def circle_sweep(resolution: int) -> SphereSweep:
    """Uniform grid of ``resolution`` directions on the unit circle."""
    if resolution < 4:
        raise ContractViolationError("resolution must be >= 4")
    phi = np.arange(resolution) * (2.0 * math.pi / resolution)
    vectors = np.column_stack([np.cos(phi), np.sin(phi)])
    return SphereSweep(dimension=2, vectors=vectors, grid_step=2.0 * math.pi / resolution)


def sphere_sweep(resolution: int) -> SphereSweep:
    """Polar-azimuthal grid of at least ``resolution`` directions on the sphere.

    The polar count is kept odd and the azimuthal count a multiple of 4 so
    all six signed canonical directions land exactly on the grid.
    """
    if resolution < 8:
        raise ContractViolationError("resolution must be >= 8")
    n_polar = max(3, math.isqrt(resolution // 2))
    if n_polar % 2 == 0:
        n_polar += 1
    n_azimuth = 4 * max(1, math.ceil(2 * n_polar / 4))
    while n_polar * n_azimuth < resolution:
        n_azimuth += 4
    polar = np.linspace(0.0, math.pi, n_polar)
    azimuth = np.arange(n_azimuth) * (2.0 * math.pi / n_azimuth)
    st = np.sin(polar)[:, None]
    ct = np.cos(polar)[:, None]
    vectors = np.stack(
        [
            (st * np.cos(azimuth)[None, :]).ravel(),
            (st * np.sin(azimuth)[None, :]).ravel(),
            (ct * np.ones_like(azimuth)[None, :]).ravel(),
        ],
        axis=1,
    )
    step = max(math.pi / (n_polar - 1), 2.0 * math.pi / n_azimuth)
    return SphereSweep(dimension=3, vectors=vectors, grid_step=step)


def check_extreme_points(sources: SourceEnsemble) -> None:
    """Raise unless every vertex of [-A, A]**N appears among the columns."""
    s = sources.s
    n = sources.n_sources
    if n > 20:
        raise ContractViolationError("vertex check refuses n_sources > 20")
    a = sources.amplitude
    at_bound = np.abs(np.abs(s) - a) <= VERTEX_TOLERANCE * max(1.0, a)
    vertex_cols = np.flatnonzero(at_bound.all(axis=0))
    seen = set()
    for col in vertex_cols:
        bits = tuple(1 if v > 0 else 0 for v in s[:, col])
        seen.add(bits)
    if len(seen) < 2**n:
        for code in range(2**n):
            bits = tuple((code >> (n - 1 - i)) & 1 for i in range(n))
            if bits not in seen:
                vertex = tuple(a if b else -a for b in bits)
                raise ContractViolationError(
                    f"sources are missing the vertex {vertex}"
                )


def infinity_norm_landscape(sources: SourceEnsemble, sweep: SphereSweep) -> np.ndarray:
    """Peak amplitude of g^T S for every direction g in the sweep.

    Requires the vertex-coverage precondition, under which the landscape
    equals A * ||g||_1 identically.
    """
    check_extreme_points(sources)
    if sweep.dimension != sources.n_sources:
        raise ContractViolationError(
            f"sweep dimension {sweep.dimension} does not match "
            f"{sources.n_sources} sources"
        )
    return np.abs(sweep.vectors @ sources.s).max(axis=1)


@dataclass(frozen=True, eq=False)
class ExtractionReport:
    """Outcome of the exhaustive direction sweep.

    ``passed`` requires (a) no swept direction dips below A - 1e-9 and
    (b) every direction within 1e-6 of the bound sits within
    ``GRID_CELL_SLACK`` grid steps of a signed canonical vector. For
    three sources the mixed-sign probe value (expected 5A/3) is included
    and must match within 1e-9.
    """

    passed: bool
    dimension: int
    n_vectors: int
    grid_step: float
    amplitude: float
    min_value: float
    worst_offender: tuple | None
    probe_value: float | None


def verify_extraction_theorem(
    sources: SourceEnsemble, angular_resolution: int
) -> ExtractionReport:
    """Sweep unit directions and check the peak-equalization minima.

    Supports two sources (circle grid) and three sources (sphere grid);
    higher dimensions are covered by the randomized bound check instead.
    """
    n = sources.n_sources
    if n not in (2, 3):
        raise ContractViolationError("direction sweep supports 2 or 3 sources only")
    sweep = circle_sweep(angular_resolution) if n == 2 else sphere_sweep(angular_resolution)
    values = infinity_norm_landscape(sources, sweep)
    a = sources.amplitude

    min_idx = int(np.argmin(values))
    min_value = float(values[min_idx])
    offender = None
    min_ok = min_value >= a - 1e-9
    if not min_ok:
        offender = (tuple(map(float, sweep.vectors[min_idx])), min_value)

    near = values <= a + 1e-6
    near_ok = True
    if np.any(near):
        # Distance to the nearest signed canonical axis is
        # arccos(max_i |g_i|) for a unit vector g.
        align = np.abs(sweep.vectors[near]).max(axis=1)
        angles = np.arccos(np.clip(align, -1.0, 1.0))
        worst = int(np.argmax(angles))
        near_ok = float(angles[worst]) <= GRID_CELL_SLACK * sweep.grid_step
        if not near_ok and offender is None:
            idx = int(np.flatnonzero(near)[worst])
            offender = (tuple(map(float, sweep.vectors[idx])), float(values[idx]))

    probe_value = None
    probe_ok = True
    if n == 3:
        probe = np.array(MIXED_SIGN_PROBE_3D)
        probe_value = float(np.abs(probe @ sources.s).max())
        probe_ok = abs(probe_value - 5.0 * a / 3.0) <= 1e-9

    return ExtractionReport(
        passed=bool(min_ok and near_ok and probe_ok),
        dimension=n,
        n_vectors=sweep.vectors.shape[0],
        grid_step=sweep.grid_step,
        amplitude=a,
        min_value=min_value,
        worst_offender=offender,
        probe_value=probe_value,
    )


@dataclass(frozen=True, eq=False)
class BoundReport:
    """Outcome of the randomized lower-bound check on the summed criterion."""

    passed: bool
    n_rotations: int
    bound: float
    min_cost: float
    violations: tuple
    signed_perm_max_gap: float


def verify_separation_bound(
    sources: SourceEnsemble, n_random_rotations: int, rng: np.random.Generator
) -> BoundReport:
    """Check that the summed peak criterion never dips below N * A.

    Draws ``n_random_rotations`` random orthogonal matrices W and asserts
    the cost of W S stays at or above N * A - 1e-9; also probes signed
    permutations, where equality must hold within 1e-9.
    """
    check_extreme_points(sources)
    if n_random_rotations < 1:
        raise ContractViolationError("n_random_rotations must be >= 1")
    s = sources.s
    n = sources.n_sources
    bound = n * sources.amplitude

    min_cost = float("inf")
    violations = []
    for _ in range(n_random_rotations):
        w = random_orthogonal(n, rng)
        cost = sum_linf(w @ s)
        min_cost = min(min_cost, cost)
        if cost < bound - 1e-9:
            violations.append((tuple(map(tuple, w)), cost))

    max_gap = abs(sum_linf(s) - bound)
    for _ in range(32):
        perm = rng.permutation(n)
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        dp = np.zeros((n, n))
        dp[np.arange(n), perm] = signs
        max_gap = max(max_gap, abs(sum_linf(dp @ s) - bound))

    return BoundReport(
        passed=not violations and max_gap <= 1e-9,
        n_rotations=n_random_rotations,
        bound=bound,
        min_cost=min_cost,
        violations=tuple(violations),
        signed_perm_max_gap=max_gap,
    )


def histogram_entropy(values, bins: int = 64) -> float:
    """Histogram estimate of differential entropy, in nats.

    For a bounded signal this estimate never exceeds the logarithm of the
    support length, which is what the entropy-bound property tests rely
    on.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size < 2 or not np.isfinite(v).all():
        raise ContractViolationError("need >= 2 finite samples")
    counts, edges = np.histogram(v, bins=bins)
    widths = np.diff(edges)
    p = counts / v.size
    nz = p > 0
    return float(-np.sum(p[nz] * (np.log(p[nz]) - np.log(widths[nz]))))
