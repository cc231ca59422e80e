"""Simplex points, majorization order, sampling, and transfer chains."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NONNEG_TOL = 1e-12
SUM_TOL = 1e-9
MAJ_TOL = 1e-12


class NotMajorizedError(ValueError):
    """Raised when a transfer chain is requested for a non-majorized pair."""


def coords(x) -> np.ndarray:
    """Return the coordinate array of a point given as SimplexPoint or array-like."""
    if isinstance(x, SimplexPoint):
        return x.coords
    return np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class SimplexPoint:
    """Nonnegative coordinate vector summing to one.

    Coordinates within NONNEG_TOL below zero are clipped and a sum deviating
    from one by at most SUM_TOL is renormalized; anything worse is rejected.
    """

    coords: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coords, dtype=float).reshape(-1)
        if arr.size < 1:
            raise ValueError("empty coordinate vector")
        if np.min(arr) < -NONNEG_TOL:
            raise ValueError(f"negative coordinate {np.min(arr):.3e}")
        arr = np.clip(arr, 0.0, None)
        total = arr.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"coordinates sum to {total!r}, not 1")
        arr = arr / total
        arr.flags.writeable = False
        object.__setattr__(self, "coords", arr)

    @property
    def m(self) -> int:
        return self.coords.size

    @classmethod
    def vertex(cls, m: int, k: int) -> "SimplexPoint":
        """The k-th vertex (0-based) of the (m-1)-simplex."""
        arr = np.zeros(m)
        arr[k] = 1.0
        return cls(arr)

    @classmethod
    def barycenter(cls, m: int) -> "SimplexPoint":
        return cls(np.full(m, 1.0 / m))

    def as_array(self) -> np.ndarray:
        return self.coords

    def __repr__(self):
        inner = ", ".join(f"{v:.6g}" for v in self.coords)
        return f"SimplexPoint([{inner}])"


def sort_desc(x) -> np.ndarray:
    """Nonincreasing rearrangement, stable in the original index order on ties."""
    arr = coords(x)
    order = np.argsort(-arr, kind="stable")
    return arr[order]


def prefix_margins(lower, upper) -> np.ndarray:
    """Per-prefix slack: cumulative sums of sorted upper minus sorted lower.

    Only the first m-1 prefixes are reported; the full sums always agree.
    """
    lo = coords(lower)
    up = coords(upper)
    if lo.shape != up.shape:
        raise ValueError(f"dimension mismatch: {lo.size} vs {up.size}")
    c_lo = np.cumsum(sort_desc(lo))[:-1]
    c_up = np.cumsum(sort_desc(up))[:-1]
    return c_up - c_lo


@dataclass(frozen=True)
class MajorizationVerdict:
    holds: bool
    gap: float
    witness_prefix: int  # 1-based prefix length attaining the gap


def is_majorized(x, y, tol: float = MAJ_TOL) -> MajorizationVerdict:
    """Decide x majorized-by y through sorted prefix sums.

    The gap is the tightest margin over prefix lengths 1..m-1; a negative gap
    beyond tol refutes the relation and witness_prefix locates it.
    """
    margins = prefix_margins(x, y)
    k = int(np.argmin(margins))
    gap = float(margins[k])
    return MajorizationVerdict(holds=gap >= -tol, gap=gap, witness_prefix=k + 1)


def majorization_gap(lower, upper) -> float:
    """Minimum prefix margin of sorted upper over sorted lower.

    Negative values certify that `upper` does not majorize `lower`.
    """
    return float(np.min(prefix_margins(lower, upper)))


def sample_uniform(m: int, n: int, seed: int) -> np.ndarray:
    """Draw n points uniformly from the (m-1)-simplex, one per row.

    Flat Dirichlet via normalized exponentials; deterministic per seed.
    """
    if m < 2 or n < 1:
        raise ValueError("need m >= 2 and n >= 1")
    rng = np.random.default_rng(seed)
    g = rng.exponential(size=(n, m))
    return g / g.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class Transfer:
    """Two-coordinate averaging: mass lam * (z_i - z_j) moves from i to j."""

    i: int
    j: int
    lam: float

    def apply_to(self, z: np.ndarray) -> np.ndarray:
        out = np.array(z, dtype=float)
        zi, zj = out[self.i], out[self.j]
        out[self.i] = (1.0 - self.lam) * zi + self.lam * zj
        out[self.j] = self.lam * zi + (1.0 - self.lam) * zj
        return out


def apply_transfers(y, transfers) -> np.ndarray:
    z = np.array(coords(y), dtype=float)
    for t in transfers:
        z = t.apply_to(z)
    return z


def t_transform_chain(x, y, tol: float = MAJ_TOL) -> list[Transfer]:
    """Constructive chain of averaging transfers carrying y onto x.

    Requires x majorized by y. A depth-first search over landing moves (each
    putting one coordinate exactly on its target) finds a chain of at most
    m-1 transfers for almost every pair, and always does when x and y sort
    with the same coordinate order. For a small fraction of misaligned pairs
    no such short chain exists at all, and the fallback builds the value
    profile in sorted order first and then swaps coordinates into place,
    which can take up to 2(m-1) transfers.
    """
    xa = coords(x)
    z = np.array(coords(y), dtype=float)
    if xa.shape != z.shape:
        raise ValueError(f"dimension mismatch: {xa.size} vs {z.size}")
    verdict = is_majorized(xa, z, tol=tol)
    if not verdict.holds:
        raise NotMajorizedError(
            f"target not majorized by source (gap {verdict.gap:.3e} "
            f"at prefix {verdict.witness_prefix})"
        )
    budget = [50_000]
    moves = _landing_chain(xa, z, xa.size - 1, tol, budget)
    if moves is None:
        moves = _sorted_chain_with_alignment(xa, z, tol)
    chain: list[Transfer] = []
    for i, j, t in moves:
        d = z[i] - z[j]
        chain.append(Transfer(int(i), int(j), float(min(t / d, 1.0))))
        z[i] -= t
        z[j] += t
    if np.max(np.abs(z - xa)) > 1e-12:
        raise AssertionError("transfer chain missed the target")
    return chain


def _landing_chain(xa, z, depth, tol, budget):
    """Depth-first search for a landing-move chain from z down to xa.

    A landing move transfers mass between two unfinished coordinates and puts
    one of them exactly on its target, so a found chain has at most one move
    per unfinished coordinate, less one. Moves may pass through pairs on the
    same side of their targets: parking mass on a hub coordinate is sometimes
    the only way to keep every intermediate point majorized by the source and
    above the target, which is why backtracking is needed rather than a
    single greedy rule.
    """
    resid = z - xa
    active = np.where(np.abs(resid) > tol)[0]
    if active.size == 0:
        return []
    if depth == 0 or (active.size + 1) // 2 > depth:
        return None
    for i in active:
        for j in active:
            if i == j:
                continue
            d = z[i] - z[j]
            if d <= tol:
                continue
            amounts = []
            if resid[i] > tol and resid[i] <= d + 5e-13:
                amounts.append(resid[i])
            if resid[j] < -tol and -resid[j] <= d + 5e-13:
                amounts.append(-resid[j])
            for t in amounts:
                if budget[0] <= 0:
                    return None
                budget[0] -= 1
                # amounts a hair past the value gap are swaps in disguise:
                # clamping keeps the landing within rounding noise
                t = min(t, d)
                trial = z.copy()
                trial[i] -= t
                trial[j] += t
                if not is_majorized(xa, trial, tol=10 * tol).holds:
                    continue
                tail = _landing_chain(xa, trial, depth - 1, tol, budget)
                if tail is not None:
                    return [(int(i), int(j), float(t))] + tail
    return None


def _sorted_chain_with_alignment(xa, z, tol):
    """Fallback chain: move values in sorted pattern, then swap labels.

    Phase one runs the landing search on the descending rearrangements, where
    it always succeeds within m-1 moves, and maps sorted positions back to
    the source's coordinate order. Phase two permutes coordinates with full
    swaps so each one ends up holding its own target value; matching equal
    values to coordinates that already hold them keeps the swap count down.
    """
    m = xa.size
    sigma = np.argsort(-z, kind="stable")
    x_desc = np.sort(xa)[::-1]
    budget = [200_000]
    sorted_moves = _landing_chain(x_desc, z[sigma].copy(), m - 1, tol, budget)
    if sorted_moves is None:
        raise AssertionError("sorted-pattern chain construction failed")
    moves = [(int(sigma[p]), int(sigma[q]), t) for p, q, t in sorted_moves]
    # coordinate sigma[p] now holds x_desc[p]; route each value to a
    # coordinate that wants it, preferring holders already in place
    pi = np.argsort(-xa, kind="stable")
    holders: dict[float, list] = {}
    needers: dict[float, list] = {}
    for p in range(m):
        holders.setdefault(x_desc[p], []).append(int(sigma[p]))
        needers.setdefault(x_desc[p], []).append(int(pi[p]))
    dest = {}
    for v, hs in holders.items():
        ns = needers[v]
        common = set(hs) & set(ns)
        for c in common:
            dest[c] = c
        rest_h = [c for c in hs if c not in common]
        rest_n = [c for c in ns if c not in common]
        for h, n in zip(rest_h, rest_n):
            dest[h] = n
    seen = set()
    work = np.empty(m)
    work[sigma] = x_desc
    for start in range(m):
        if start in seen:
            continue
        cycle = [start]
        c = dest[start]
        while c != start:
            cycle.append(c)
            c = dest[c]
        seen.update(cycle)
        # route values around the cycle through its first coordinate
        c0 = cycle[0]
        for ck in cycle[1:]:
            diff = work[c0] - work[ck]
            if diff > 0:
                moves.append((c0, ck, float(diff)))
            elif diff < 0:
                moves.append((ck, c0, float(-diff)))
            work[c0], work[ck] = work[ck], work[c0]
    return moves
