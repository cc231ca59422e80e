"""Orbit simulation with order-monotonicity and averaging diagnostics.

Every iteration loop renormalizes each image: a quadratic map sends a mass
sum of s to s^2, so any rounding drift away from 1 would otherwise grow
geometrically and hollow out long orbits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import HeredityTensor, extract_partition, validate
from .simplex import SimplexPoint
from .structure import (
    CycleStructure,
    FixedPointSet,
    NotCanonical,
    fixed_point_set,
    transfer_cycles,
)

CONV_TOL = 1e-10
STEP_CAP = 100_000
CLUSTER_RADIUS = 1e-4


@dataclass(frozen=True)
class TrajectoryRecord:
    """Orbit x, Vx, V^2 x, ... with per-step majorization gaps.

    points has one row per iterate (the start included). step_gaps[k] is the
    worst sorted-prefix margin between iterate k and iterate k+1; for an
    order-increasing operator every entry stays above -1e-12. converged_at
    is the first step whose move fell below the convergence threshold, or
    None if the orbit was still moving when the budget ran out.
    """

    points: np.ndarray
    step_gaps: np.ndarray
    converged_at: int | None
    limit: SimplexPoint | None

    @property
    def steps(self) -> int:
        return self.points.shape[0] - 1

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]


def _iterate(t: HeredityTensor, x0, steps: int, conv_tol: float) -> tuple[np.ndarray, int | None]:
    x = np.array(SimplexPoint(x0).as_array(), dtype=float)
    rows = [x]
    converged = None
    for k in range(steps):
        nxt = t.apply(x)
        nxt = nxt / nxt.sum()
        rows.append(nxt)
        if np.max(np.abs(nxt - x)) < conv_tol:
            converged = k
            break
        x = nxt
    return np.stack(rows), converged


def _pairwise_gaps(points: np.ndarray) -> np.ndarray:
    c = np.cumsum(np.sort(points, axis=1)[:, ::-1], axis=1)
    margins = c[1:] - c[:-1]
    return margins[:, : points.shape[1] - 1].min(axis=1)


def trajectory(
    t: HeredityTensor,
    x0,
    steps: int = 10_000,
    conv_tol: float = CONV_TOL,
) -> TrajectoryRecord:
    """Iterate the operator, recording each point and its step gap."""
    if validate(t):
        raise ValueError("tensor fails validation; refusing to iterate")
    steps = min(int(steps), STEP_CAP)
    points, converged = _iterate(t, x0, steps, conv_tol)
    gaps = _pairwise_gaps(points)
    limit = SimplexPoint(points[-1]) if converged is not None else None
    return TrajectoryRecord(points, gaps, converged, limit)


@dataclass(frozen=True)
class LyapunovSeries:
    """Mass on the recurrent coordinates along an orbit, with its exact
    step decomposition.

    phi[k] is the recurrent mass of iterate k. Each step obeys
    phi[k+1] = phi[k] + quadratic_residue[k] + cross_terms[k], where the
    residue collects the squares of transient coordinates feeding directly
    into recurrent blocks, and cross_terms sums one term per recurrent
    coordinate; under the half-share coefficient pattern every such term is
    nonnegative, which is what makes phi monotone.
    """

    recurrent_set: tuple
    phi: np.ndarray
    limit_estimate: float
    quadratic_residue: np.ndarray
    cross_terms: np.ndarray
    cross_min: np.ndarray

    def step_identity_residuals(self) -> np.ndarray:
        return np.abs(np.diff(self.phi) - self.quadratic_residue - self.cross_terms)


def _aitken_limit(phi: np.ndarray) -> float:
    if phi.size < 3:
        return float(phi[-1])
    a, b, c = phi[-3], phi[-2], phi[-1]
    denom = c - 2.0 * b + a
    if abs(denom) < 1e-15:
        return float(c)
    est = c - (c - b) ** 2 / denom
    # the series is nondecreasing with supremum 1; keep the estimate there
    return float(min(max(est, c), 1.0))


def lyapunov_series(
    t: HeredityTensor,
    x0,
    steps: int = 10_000,
    conv_tol: float = CONV_TOL,
) -> LyapunovSeries:
    issues = validate(t)
    if issues:
        raise NotCanonical(f"tensor fails validation: {issues[0]}")
    try:
        partition = extract_partition(t)
    except ValueError as exc:
        raise NotCanonical(str(exc)) from exc
    structure = transfer_cycles(partition)
    recurrent = structure.recurrent()
    rec = np.array(recurrent, dtype=int)
    tau = np.array(partition.tau, dtype=int)

    # sigma maps each recurrent coordinate to its unique in-cycle feeder
    sigma = np.empty(t.m, dtype=int)
    for c in structure.cycles:
        for a, b in zip(c, c[1:] + c[:1]):
            sigma[b] = a

    feeders = [i for i in structure.transient if tau[i] in set(recurrent)]

    points, _ = _iterate(t, x0, min(int(steps), STEP_CAP), conv_tol)
    x = points[:-1]
    phi = points[:, rec].sum(axis=1)

    residue = (x[:, feeders] ** 2).sum(axis=1) if feeders else np.zeros(x.shape[0])

    # cross part of each recurrent image coordinate: image minus the squares
    # routed there by the block map; recompute raw images because the stored
    # orbit rows are renormalized
    sq = np.zeros_like(x)
    for i in range(t.m):
        sq[:, tau[i]] += x[:, i] ** 2
    raw = t.apply_batch(x)
    cross = raw[:, rec] - sq[:, rec]
    feed = x[:, sigma[rec]]
    terms = cross - feed * (1.0 - feed)
    return LyapunovSeries(
        recurrent_set=tuple(recurrent),
        phi=phi,
        limit_estimate=_aitken_limit(phi),
        quadratic_residue=residue,
        cross_terms=terms.sum(axis=1),
        cross_min=terms.min(axis=1),
    )


def cesaro_means(t: HeredityTensor, x0, steps: int = 10_000) -> np.ndarray:
    """Running orbit averages A_n = (x + Vx + ... + V^{n-1} x)/n, n = 1..steps."""
    if validate(t):
        raise ValueError("tensor fails validation; refusing to iterate")
    points, _ = _iterate(t, x0, max(int(steps) - 1, 0), conv_tol=0.0)
    if points.shape[0] > steps:
        points = points[:steps]
    sums = np.cumsum(points, axis=0)
    return sums / np.arange(1, points.shape[0] + 1)[:, None]


def cesaro_drift(means) -> float:
    """Max-norm gap between the last running average and the half-way one.

    For a means array of length 2n this is the stability diagnostic
    max |A_2n - A_n|; it decays like the tail of the orbit increments.
    """
    means = np.asarray(means, dtype=float)
    n = means.shape[0]
    if n < 2:
        return 0.0
    return float(np.max(np.abs(means[-1] - means[n // 2 - 1])))


def cesaro_extrapolate(means) -> np.ndarray:
    """Tail estimate 2 A_2n - A_n, cancelling the O(1/n) burn-in term.

    The running average carries the early transient forever at weight 1/n;
    doubling the horizon halves that weight, so this combination removes it
    to first order and lands much closer to the true limit.
    """
    means = np.asarray(means, dtype=float)
    n = means.shape[0]
    if n < 2:
        return means[-1].copy()
    return 2.0 * means[-1] - means[n // 2 - 1]


@dataclass(frozen=True)
class OmegaReport:
    """Distance of each iterate to the fixed hull, and where the tail sits.

    distances[k] is the max-norm residual of iterate k against its hull
    projection. clusters are representatives of the post-burn-in tail,
    agglomerated at a fixed radius: one entry means the orbit settles,
    two or more mean it keeps visiting separated haunts.
    """

    distances: np.ndarray
    clusters: tuple
    fixed_points: FixedPointSet

    @property
    def final_distance(self) -> float:
        return float(self.distances[-1])


def omega_limit(
    t: HeredityTensor,
    x0,
    steps: int = 10_000,
    burn_in: int | None = None,
) -> OmegaReport:
    fps = fixed_point_set(t)  # raises NotCanonical for malformed tensors
    points, _ = _iterate(t, x0, min(int(steps), STEP_CAP), conv_tol=0.0)
    proj = np.stack([fps.project(p) for p in points])
    distances = np.max(np.abs(points - proj), axis=1)
    if burn_in is None:
        burn_in = points.shape[0] // 2
    tail = points[min(burn_in, points.shape[0] - 1):]
    clusters: list[np.ndarray] = []
    for p in tail:
        if not any(np.max(np.abs(p - c)) <= CLUSTER_RADIUS for c in clusters):
            clusters.append(p.copy())
    return OmegaReport(distances, tuple(clusters), fps)
