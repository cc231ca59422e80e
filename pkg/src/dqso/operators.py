"""Heredity tensors, operator application, and block-partition extraction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .simplex import coords

COEFF_TOL = 1e-9


class NoUnitDiagonal(ValueError):
    """No output receives the full diagonal square of some index."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"no unit diagonal entry for index {index}")


class AmbiguousDiagonal(ValueError):
    """More than one near-unit entry in a diagonal distribution."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"more than one near-unit diagonal entry for index {index}")


@dataclass(frozen=True)
class ValidationIssue:
    code: str  # "negative" or "pair_sum"
    where: tuple
    value: float

    def __str__(self):
        if self.code == "negative":
            i, j, k = self.where
            return f"negative coefficient at ({i+1},{j+1},{k+1}): {self.value:.6g}"
        i, j = self.where
        return f"pair ({i+1},{j+1}) distribution sums to {self.value:.6g}, not 1"


@dataclass(frozen=True, eq=False)
class HeredityTensor:
    """Symmetric coefficient tensor p[i, j, k] of a quadratic map on the simplex.

    The full (m, m, m) array is stored; construction symmetrizes in (i, j).
    Indices are 0-based internally; file formats are 1-based.
    """

    p: np.ndarray

    def __post_init__(self):
        arr = np.array(self.p, dtype=float)
        if arr.ndim != 3 or len(set(arr.shape)) != 1:
            raise ValueError(f"expected a cubic array, got shape {arr.shape}")
        arr = 0.5 * (arr + arr.transpose(1, 0, 2))
        arr.flags.writeable = False
        object.__setattr__(self, "p", arr)

    @property
    def m(self) -> int:
        return self.p.shape[0]

    @classmethod
    def from_coefficients(cls, m: int, entries: Mapping[tuple, float]) -> "HeredityTensor":
        """Build from a sparse {(i, j, k): value} map, 0-based, missing values 0."""
        arr = np.zeros((m, m, m))
        for (i, j, k), v in entries.items():
            arr[i, j, k] = v
            arr[j, i, k] = v
        return cls(arr)

    def pair_distribution(self, i: int, j: int) -> np.ndarray:
        """The output distribution of the parental pair (i, j)."""
        return self.p[i, j].copy()

    def apply(self, x) -> np.ndarray:
        """One step of the quadratic map: out_k = sum_ij p[i,j,k] x_i x_j."""
        arr = coords(x)
        if arr.size != self.m:
            raise ValueError(f"dimension mismatch: point {arr.size}, tensor {self.m}")
        return np.einsum("ijk,i,j->k", self.p, arr, arr)

    def apply_batch(self, X: np.ndarray) -> np.ndarray:
        """Apply to each row of X at once."""
        X = np.asarray(X, dtype=float)
        return np.einsum("ijk,ni,nj->nk", self.p, X, X)

    def permute_outputs(self, sigma) -> "HeredityTensor":
        """Relabel output coordinates: new[i, j, sigma[k]] = old[i, j, k]."""
        sigma = np.asarray(sigma, dtype=int)
        out = np.empty_like(self.p)
        out[:, :, sigma] = self.p
        return HeredityTensor(out)


def validate(t: HeredityTensor, tol: float = COEFF_TOL) -> list[ValidationIssue]:
    """Check nonnegativity and per-pair stochasticity; empty list means valid."""
    issues = []
    m = t.m
    for i in range(m):
        for j in range(i, m):
            row = t.p[i, j]
            bad = np.where(row < -tol)[0]
            for k in bad:
                issues.append(ValidationIssue("negative", (i, j, int(k)), float(row[k])))
            total = float(row.sum())
            if abs(total - 1.0) > tol:
                issues.append(ValidationIssue("pair_sum", (i, j), total))
    return issues


@dataclass(frozen=True)
class BlockPartition:
    """Assignment of each index to the output block fed by its diagonal square.

    tau[i] = k means the square of coordinate i lands in output k. Blocks are
    the preimages of tau; they are disjoint by construction and cover all
    indices, so the partition is always well formed.
    """

    tau: tuple

    @property
    def m(self) -> int:
        return len(self.tau)

    def blocks(self) -> dict:
        """Block index -> sorted tuple of member indices (empty blocks omitted)."""
        out: dict[int, list] = {}
        for i, k in enumerate(self.tau):
            out.setdefault(k, []).append(i)
        return {k: tuple(v) for k, v in sorted(out.items())}

    def block_of(self, i: int) -> int:
        return self.tau[i]

    @property
    def is_bijective(self) -> bool:
        return len(set(self.tau)) == self.m


def extract_partition(t: HeredityTensor, tol: float = COEFF_TOL) -> BlockPartition:
    """Read the block partition off the diagonal distributions.

    For each index i, exactly one output must carry the full square (entry
    within tol of 1) while the others stay below tol; otherwise the operator
    is outside the dissipative canonical form and extraction refuses.
    """
    tau = []
    for i in range(t.m):
        row = t.p[i, i]
        near_one = np.where(np.abs(row - 1.0) <= tol)[0]
        if near_one.size == 0:
            raise NoUnitDiagonal(i)
        if near_one.size > 1:
            raise AmbiguousDiagonal(i)
        k = int(near_one[0])
        rest = np.delete(row, k)
        if np.any(np.abs(rest) > tol):
            raise AmbiguousDiagonal(i)
        tau.append(k)
    return BlockPartition(tuple(tau))
