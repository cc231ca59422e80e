"""Cycle decomposition of the block-transfer map and fixed-point structure.

The diagonal of a canonical operator induces a map sending each coordinate
to the output block fed by its square. Orbits of that map settle onto
cycles; each cycle's barycenter (uniform mass on the cycle's support) is a
fixed point, and the whole fixed set is the convex hull of those
barycenters. The hull description is certified numerically here rather than
assumed: every generator and the hull midpoint must actually be fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dissipativity import AuditReport, audit_necessary
from .operators import BlockPartition, HeredityTensor, extract_partition, validate
from .simplex import SimplexPoint, sample_uniform

CERT_TOL = 1e-10
DEDUP_RADIUS = 1e-6


class NotCanonical(ValueError):
    """Classification refused: the tensor fails validation or has no
    well-defined block partition."""


class NoConvergence(RuntimeError):
    """No start of the numeric fixed-point search met the residual bound."""


@dataclass(frozen=True)
class CycleStructure:
    """Recurrent cycles and transient indices of the block-transfer map.

    Each cycle is listed in orbit order starting from its smallest member;
    cycles are sorted by that smallest member. All indices are 0-based.
    """

    cycles: tuple
    transient: tuple

    @property
    def count(self) -> int:
        return len(self.cycles)

    @property
    def lengths(self) -> tuple:
        return tuple(len(c) for c in self.cycles)

    def recurrent(self) -> tuple:
        return tuple(sorted(i for c in self.cycles for i in c))


def transfer_cycles(partition: BlockPartition) -> CycleStructure:
    tau = partition.tau
    m = len(tau)
    on_cycle = set()
    seen_any = set()
    for start in range(m):
        if start in seen_any:
            continue
        path = []
        pos = {}
        node = start
        while node not in pos and node not in seen_any:
            pos[node] = len(path)
            path.append(node)
            node = tau[node]
        if node in pos:  # closed a new cycle within this walk
            on_cycle.update(path[pos[node]:])
        seen_any.update(path)
    cycles = []
    placed = set()
    for i in sorted(on_cycle):
        if i in placed:
            continue
        cyc = [i]
        node = tau[i]
        while node != i:
            cyc.append(node)
            node = tau[node]
        placed.update(cyc)
        cycles.append(tuple(cyc))
    transient = tuple(i for i in range(m) if i not in on_cycle)
    return CycleStructure(tuple(cycles), transient)


def _barycenter_of(cycle, m) -> SimplexPoint:
    v = np.zeros(m)
    v[list(cycle)] = 1.0 / len(cycle)
    return SimplexPoint(v)


@dataclass(frozen=True)
class FixedPointSet:
    """Convex hull of cycle barycenters, with a fixedness certificate.

    kind is "unique" for a single generator and "polytope" otherwise.
    certified means every generator and the equal-weight hull midpoint are
    fixed to within CERT_TOL; operators outside the canonical coefficient
    pattern can fail this, in which case the hull is only a claim.
    """

    kind: str
    generators: tuple
    cycles: CycleStructure
    certified: bool

    @property
    def m(self) -> int:
        return self.generators[0].m

    def is_finite(self) -> bool:
        return len(self.generators) == 1

    def project(self, x) -> np.ndarray:
        """Euclidean projection onto the hull.

        Generators have disjoint supports, so the projection reduces to one
        weight per cycle: the cycle's mass, shifted uniformly (in proportion
        to cycle length) so the weights sum to one. The shift is nonnegative
        for simplex points, hence no weight ever needs clipping.
        """
        x = np.asarray(x, dtype=float)
        lengths = np.array([len(c) for c in self.cycles.cycles], dtype=float)
        mass = np.array([x[list(c)].sum() for c in self.cycles.cycles])
        w = mass + (1.0 - mass.sum()) * lengths / lengths.sum()
        out = np.zeros_like(x)
        for wc, c in zip(w, self.cycles.cycles):
            out[list(c)] = wc / len(c)
        return out

    def distance_to(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.project(x)))

    def contains(self, x, tol: float = 1e-8) -> bool:
        return self.distance_to(x) <= tol


def _residual(t: HeredityTensor, x: np.ndarray) -> float:
    return float(np.max(np.abs(t.apply(x) - x)))


def _certify(t: HeredityTensor, generators) -> bool:
    pts = [g.as_array() for g in generators]
    if any(_residual(t, g) > CERT_TOL for g in pts):
        return False
    midpoint = np.mean(pts, axis=0)
    return _residual(t, midpoint) <= CERT_TOL


def _canonical_parts(t: HeredityTensor) -> tuple[BlockPartition, AuditReport]:
    issues = validate(t)
    if issues:
        raise NotCanonical(f"tensor fails validation: {issues[0]}")
    try:
        partition = extract_partition(t)
    except ValueError as exc:
        raise NotCanonical(str(exc)) from exc
    return partition, audit_necessary(t)


def fixed_point_set(t: HeredityTensor) -> FixedPointSet:
    partition, _ = _canonical_parts(t)
    structure = transfer_cycles(partition)
    generators = tuple(_barycenter_of(c, t.m) for c in structure.cycles)
    kind = "unique" if len(generators) == 1 else "polytope"
    return FixedPointSet(kind, generators, structure, _certify(t, generators))


@dataclass(frozen=True)
class ClassificationVerdict:
    """Limit-behavior classification derived from the cycle profile.

    kind: "regular" (a single recurrent cycle, hence exactly one fixed
    point; orbit averages converge to it, and orbits themselves do whenever
    the cycle is a self-loop), "infinitely_many" (the fixed set is a
    positive-dimensional hull), or "linear_permutation" (bijective transfer
    map with clean audit: the operator coincides with a coordinate
    permutation and never mixes). form is a human-readable structural tag.
    """

    kind: str
    fixed_points: FixedPointSet
    form: str
    audit_clean: bool

    @property
    def certified(self) -> bool:
        return self.fixed_points.certified


def _form_tag(partition: BlockPartition, structure: CycleStructure) -> str:
    lengths = structure.lengths
    if len(lengths) == 1:
        only = structure.cycles[0]
        if len(only) == 1:
            block = partition.blocks().get(partition.tau[only[0]], ())
            if len(block) == partition.m:
                return "total-sink"
            return "vertex-sink"
        return f"cycle-sink({len(only)})"
    if all(n == 1 for n in lengths):
        return f"vertex-sinks({len(lengths)})"
    return "mixed-cycles(" + ",".join(str(n) for n in lengths) + ")"


def classify(t: HeredityTensor) -> ClassificationVerdict:
    partition, report = _canonical_parts(t)
    structure = transfer_cycles(partition)
    generators = tuple(_barycenter_of(c, t.m) for c in structure.cycles)
    kind = "unique" if len(generators) == 1 else "polytope"
    fps = FixedPointSet(kind, generators, structure, _certify(t, generators))
    if partition.is_bijective and report.clean:
        return ClassificationVerdict("linear_permutation", fps, "permutation", True)
    verdict = "regular" if fps.is_finite() else "infinitely_many"
    return ClassificationVerdict(verdict, fps, _form_tag(partition, structure), report.clean)


def _polish(t: HeredityTensor, x: np.ndarray, steps: int = 12) -> np.ndarray:
    """Newton refinement of V x = x, reprojected onto the simplex."""
    m = x.size
    for _ in range(steps):
        r = t.apply(x) - x
        if not np.all(np.isfinite(r)) or np.max(np.abs(r)) < 1e-15:
            break
        jac = 2.0 * np.einsum("ijk,i->jk", t.p, x).T - np.eye(m)
        delta, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        trial = np.clip(x + delta, 0.0, None)
        s = trial.sum()
        if s <= 0.0 or not np.isfinite(s):
            break
        x = trial / s
    return x


def numeric_fixed_points(
    t: HeredityTensor,
    restarts: int = 20,
    seed: int = 0,
    tol: float = 1e-10,
) -> list[SimplexPoint]:
    """Independent fixed-point search: damped iteration then Newton polish.

    Runs from every vertex, every edge midpoint, the barycenter, and
    `restarts` random starts; converged solutions are deduplicated. Works on
    operators of any stripe, so it serves as the oracle against the
    structural description.
    """
    m = t.m
    starts = [np.eye(m)[i] for i in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            mid = np.zeros(m)
            mid[i] = mid[j] = 0.5
            starts.append(mid)
    starts.append(np.full(m, 1.0 / m))
    if restarts > 0:
        starts.extend(sample_uniform(m, restarts, seed))

    converged: list[tuple[float, np.ndarray]] = []
    for x0 in starts:
        x = np.array(x0, dtype=float)
        for _ in range(2000):
            nxt = 0.5 * x + 0.5 * t.apply(x)
            nxt /= nxt.sum()  # quadratic maps amplify any drift in the mass sum
            if np.max(np.abs(nxt - x)) < 1e-13:
                x = nxt
                break
            x = nxt
        x = _polish(t, x)
        r = _residual(t, x)
        if r < tol:
            converged.append((r, x))
    # cluster duplicates, keeping the sharpest member of each cluster
    converged.sort(key=lambda rv: rv[0])
    found: list[np.ndarray] = []
    for _, x in converged:
        if not any(np.max(np.abs(x - y)) <= DEDUP_RADIUS for y in found):
            found.append(x)
    if not found:
        raise NoConvergence(
            f"no fixed point located from {len(starts)} starts at tolerance {tol:g}"
        )
    found.sort(key=lambda v: tuple(v))
    return [SimplexPoint(np.clip(v, 0.0, None) / np.clip(v, 0.0, None).sum())
            for v in found]
