"""Top-k sparsification and per-coordinate gradient clipping.

These are the two primitives that bound message size and gradient
sensitivity: top_k keeps the k largest-magnitude coordinates (ties broken
by lower index, so simulations are reproducible), and clip_per_coordinate
clamps every coordinate into [-G/sqrt(d), G/sqrt(d)], which caps the l2
norm at G for any selected coordinate subset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Wire cost of one sparse message: k entries at 4-byte index + 8-byte value,
# plus a 16-byte header carrying (sender, iteration, k).
ENTRY_BYTES = 12
HEADER_BYTES = 16


@dataclass(frozen=True, eq=False)
class SparseUpdate:
    """Sparse message: (index, value) pairs from a d-dimensional vector."""

    dim: int
    indices: np.ndarray
    values: np.ndarray
    k: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if len(idx) > self.k or self.k > self.dim:
            raise ValueError(f"entry count {len(idx)} > k={self.k} or k > dim={self.dim}")
        if len(idx) > 0:
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly increasing")
            if idx[0] < 0 or idx[-1] >= self.dim:
                raise ValueError("index out of range")

    @property
    def nbytes(self) -> int:
        return ENTRY_BYTES * self.k + HEADER_BYTES

    def densify(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out


def top_k(x: np.ndarray, k: int) -> SparseUpdate:
    """Keep the k entries of largest magnitude, zeroing the rest.

    Ties at the selection boundary are broken by lower coordinate index.
    Selection is partial (argpartition), O(d) expected.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    if x.ndim != 1:
        raise ValueError("expected a 1-d vector")
    if not 1 <= k <= d:
        raise ValueError(f"k must satisfy 1 <= k <= d, got k={k}, d={d}")
    absx = np.abs(x)
    if k == d:
        support = np.arange(d)
    else:
        part = np.argpartition(-absx, k - 1)
        boundary = absx[part[k - 1]]
        sure = np.flatnonzero(absx > boundary)
        ties = np.flatnonzero(absx == boundary)[: k - sure.size]
        support = np.sort(np.concatenate([sure, ties]))
    return SparseUpdate(dim=d, indices=support, values=x[support], k=k)


def contraction_gap(x: np.ndarray, k: int) -> tuple[float, float]:
    """Return (||S(x) - x||^2, (1 - k/d) ||x||^2); the first never exceeds the second."""
    x = np.asarray(x, dtype=float)
    s = top_k(x, k)
    residual = x - s.densify()
    gap = float(residual @ residual)
    bound = (1.0 - k / x.shape[0]) * float(x @ x)
    return gap, bound


def clip_per_coordinate(g: np.ndarray, G: float) -> np.ndarray:
    """Clamp each coordinate into [-G/sqrt(d), G/sqrt(d)].

    The output l2 norm is at most G, for any coordinate subset too; the
    operation is idempotent.
    """
    g = np.asarray(g, dtype=float)
    if G <= 0:
        raise ValueError(f"clipping scale must be positive, got {G}")
    if not np.all(np.isfinite(g)):
        raise ValueError("cannot clip non-finite gradient")
    bound = G / np.sqrt(g.shape[0])
    return np.clip(g, -bound, bound)
