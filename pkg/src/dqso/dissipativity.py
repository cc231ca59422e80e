"""Necessary-condition audit and numerical refutation of order-increase.

An operator is order-increasing when every image majorizes its argument.
The audit checks the coefficient constraints any such operator must satisfy
(unit diagonals, half shares toward a member's own block, two-point pair
distributions). The checker searches for an explicit violation of the
majorization inequality; finding none is evidence, not proof, so the verdict
carries its search budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import COEFF_TOL, BlockPartition, HeredityTensor, extract_partition
from .simplex import sample_uniform

GAP_TOL = 1e-12


@dataclass(frozen=True)
class AuditReport:
    """Outcome of the necessary-condition audit.

    half_share_violations holds tuples (i, j, k0, value): coordinate j lives
    in block k0 yet the pair (i, j) sends value < 1/2 there.
    support_violations holds pairs (i, j) whose distribution has more than
    two meaningful entries.
    """

    unit_diagonal_ok: bool
    half_share_violations: tuple
    support_violations: tuple
    partition: BlockPartition | None = None

    @property
    def clean(self) -> bool:
        return (self.unit_diagonal_ok
                and not self.half_share_violations
                and not self.support_violations)


def audit_necessary(t: HeredityTensor, tol: float = COEFF_TOL) -> AuditReport:
    """Run every necessary-condition check; failures become report entries."""
    m = t.m
    try:
        partition = extract_partition(t, tol=tol)
        unit_ok = True
    except ValueError:
        partition = None
        unit_ok = False

    half = []
    if partition is not None:
        for i in range(m):
            for j in range(m):
                if i == j:
                    continue
                k0 = partition.tau[j]
                value = float(t.p[i, j, k0])
                if value < 0.5 - tol:
                    half.append((i, j, k0, value))

    support = []
    if m >= 3:
        for i in range(m):
            for j in range(i + 1, m):
                row = np.sort(t.p[i, j])[::-1]
                if row[2] > tol:
                    support.append((i, j))

    return AuditReport(unit_ok, tuple(half), tuple(support), partition)


@dataclass(frozen=True)
class Counterexample:
    point: tuple
    gap: float
    prefix: int  # 1-based index of the violated partial sum
    stage: str   # which search stage produced it


@dataclass(frozen=True)
class DissipativityVerdict:
    status: str  # "CounterexampleFound" or "NoViolationFound"
    counterexample: Counterexample | None
    samples_tested: int
    min_gap_seen: float

    @property
    def refuted(self) -> bool:
        return self.status == "CounterexampleFound"


def _batch_gaps(t: HeredityTensor, X: np.ndarray) -> np.ndarray:
    """Minimum partial-sum margin of (image, argument) for each row of X."""
    Y = t.apply_batch(X)
    cx = np.cumsum(np.sort(X, axis=1)[:, ::-1], axis=1)
    cy = np.cumsum(np.sort(Y, axis=1)[:, ::-1], axis=1)
    return (cy - cx)[:, : X.shape[1] - 1].min(axis=1)


def _point_gap(t: HeredityTensor, x: np.ndarray) -> tuple[float, int]:
    y = t.apply(x)
    margins = np.cumsum(np.sort(y)[::-1]) - np.cumsum(np.sort(x)[::-1])
    k = int(np.argmin(margins[: x.size - 1]))
    return float(margins[k]), k + 1


def _recertify(t: HeredityTensor, x: np.ndarray) -> tuple[float, int]:
    """Recompute the gap without numpy so a numpy fault cannot certify itself."""
    p = t.p.tolist()
    xs = [float(v) for v in x]
    m = len(xs)
    y = [sum(p[i][j][k] * xs[i] * xs[j] for i in range(m) for j in range(m))
         for k in range(m)]
    xd = sorted(xs, reverse=True)
    yd = sorted(y, reverse=True)
    best, arg = None, 0
    run_x = run_y = 0.0
    for k in range(m - 1):
        run_x += xd[k]
        run_y += yd[k]
        margin = run_y - run_x
        if best is None or margin < best:
            best, arg = margin, k + 1
    return best, arg


def _descend(t: HeredityTensor, x0: np.ndarray, tol: float) -> np.ndarray:
    """Derivative-free descent of the gap by pairwise mass moves.

    The gap is piecewise linear in pair transfers with kinks at sorting ties,
    so plain coordinate-pair probing with a halving step is dependable where
    gradients are not.
    """
    m = x0.size
    x = x0.copy()
    gap, _ = _point_gap(t, x)
    step = 0.1
    while step >= 1e-7:
        improved = False
        for i in range(m):
            for j in range(m):
                if i == j or x[j] <= 0.0:
                    continue
                delta = min(step, x[j])
                trial = x.copy()
                trial[i] += delta
                trial[j] -= delta
                g, _ = _point_gap(t, trial)
                if g < gap - 1e-15:
                    x, gap = trial, g
                    improved = True
        if not improved:
            step /= 2.0
        if gap < -1.0:  # cannot get worse than losing a full unit of mass
            break
    return x


def check_dissipative(
    t: HeredityTensor,
    samples: int = 10_000,
    restarts: int = 20,
    seed: int = 0,
    tol: float = GAP_TOL,
) -> DissipativityVerdict:
    """Search vertices, edges, random points, then local descent for a
    certified majorization violation."""
    m = t.m
    tested = 0
    min_gap = np.inf

    def verdict_from(x: np.ndarray, stage: str) -> DissipativityVerdict | None:
        # a counterexample only counts if an independent evaluation agrees
        gap, prefix = _recertify(t, x)
        if gap < -tol:
            ce = Counterexample(tuple(float(v) for v in x), gap, prefix, stage)
            return DissipativityVerdict("CounterexampleFound", ce, tested, min(min_gap, gap))
        return None

    def scan(X: np.ndarray, stage: str) -> DissipativityVerdict | None:
        nonlocal tested, min_gap
        gaps = _batch_gaps(t, X)
        tested += X.shape[0]
        lowest = float(gaps.min())
        min_gap = min(min_gap, lowest)
        if lowest < -tol:
            return verdict_from(X[int(np.argmin(gaps))], stage)
        return None

    out = scan(np.eye(m), "vertex")
    if out is not None:
        return out

    lam = np.linspace(0.0, 1.0, 101)
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            edge = np.outer(1.0 - lam, np.eye(m)[j]) + np.outer(lam, np.eye(m)[i])
            out = scan(edge, "edge")
            if out is not None:
                return out

    drawn = sample_uniform(m, samples, seed)
    out = scan(drawn, "sample")
    if out is not None:
        return out

    order = np.argsort(_batch_gaps(t, drawn))[: max(restarts, 0)]
    for idx in order:
        x = _descend(t, drawn[idx], tol)
        gap, _ = _point_gap(t, x)
        tested += 1
        min_gap = min(min_gap, gap)
        if gap < -tol:
            out = verdict_from(x, "descent")
            if out is not None:
                return out

    return DissipativityVerdict("NoViolationFound", None, tested, float(min_gap))
