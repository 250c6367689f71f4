"""Communication topologies and doubly stochastic mixing matrices.

Builds the ring-of-chords graphs used in the experiments, turns any
connected topology into a symmetric doubly stochastic weight matrix via
the Laplacian construction W = I - L/iota, and exposes the two spectral
quantities the theory consumes: the spectral gap rho = 1 - |lambda_2(W)|
and the operator norm phi = ||I - W||_2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class Topology:
    """Undirected communication graph on agents 0..n-1."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"agent count must be positive, got {self.n}")
        edges = frozenset((min(i, j), max(i, j)) for i, j in self.edges)
        object.__setattr__(self, "edges", edges)
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at agent {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")
        if not self._connected():
            raise ValueError("topology is disconnected (spectral gap would be 0)")

    def _connected(self) -> bool:
        if self.n == 1:
            return True
        adj = self.neighbor_lists()
        seen = {0}
        frontier = [0]
        while frontier:
            i = frontier.pop()
            for j in adj[i]:
                if j not in seen:
                    seen.add(j)
                    frontier.append(j)
        return len(seen) == self.n

    def neighbor_lists(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return [sorted(ns) for ns in adj]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def to_edgelist(self) -> str:
        """Serialize as one `i j` pair per line, zero-indexed, sorted."""
        lines = [f"{i} {j}" for i, j in sorted(self.edges)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str, n: int) -> "Topology":
        edges = set()
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"edge list line {lineno}: expected `i j`, got {line!r}")
            i, j = int(parts[0]), int(parts[1])
            edges.add((min(i, j), max(i, j)))
        return cls(n=n, edges=frozenset(edges))


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Symmetric doubly stochastic mixing matrix with cached spectral data."""

    w: np.ndarray
    rho: float
    phi: float
    topology: Topology | None = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    def validate(self, topology: Topology | None = None) -> None:
        """Check symmetry, stochasticity, sparsity pattern, and spectral ranges."""
        w = self.w
        n = self.n
        if w.shape != (n, n):
            raise ValueError("weight matrix must be square")
        if np.max(np.abs(w - w.T)) > STOCHASTIC_TOL:
            raise ValueError("weight matrix is not symmetric")
        if np.max(np.abs(w.sum(axis=1) - 1.0)) > STOCHASTIC_TOL:
            raise ValueError("row sums deviate from 1")
        if np.max(np.abs(w.sum(axis=0) - 1.0)) > STOCHASTIC_TOL:
            raise ValueError("column sums deviate from 1")
        topo = topology if topology is not None else self.topology
        if topo is not None:
            expected = np.eye(n, dtype=bool)
            for i, j in topo.edges:
                expected[i, j] = expected[j, i] = True
            if not np.array_equal(w > 0, expected):
                raise ValueError("sparsity pattern does not match topology plus diagonal")
        if not (0.0 < self.rho <= 1.0 + STOCHASTIC_TOL):
            raise ValueError(f"spectral gap rho={self.rho} outside (0, 1]")
        if not (-STOCHASTIC_TOL <= self.phi <= 2.0 + STOCHASTIC_TOL):
            raise ValueError(f"phi={self.phi} outside [0, 2]")


def ring_chords(n: int, chord_span: int) -> Topology:
    """Ring of n agents with chords to every neighbor within chord_span hops.

    Edge set {(i, (i +/- j) mod n) : j = 1..chord_span}; every node has
    degree 2*chord_span (the construction collapses to the complete graph
    when 2*chord_span = n - 1).
    """
    if chord_span < 1:
        raise ValueError(f"chord_span must be >= 1, got {chord_span}")
    if n <= 2 * chord_span:
        raise ValueError(
            f"need n > 2*chord_span to avoid duplicate or degenerate edges, "
            f"got n={n}, chord_span={chord_span}"
        )
    edges = set()
    for i in range(n):
        for j in range(1, chord_span + 1):
            k = (i + j) % n
            edges.add((min(i, k), max(i, k)))
    return Topology(n=n, edges=frozenset(edges))


def spectral_quantities(w: np.ndarray, tol: float = 1e-9) -> tuple[float, float]:
    """Return (rho, phi) for a symmetric matrix w.

    rho = 1 - |lambda_2| with eigenvalues ordered by magnitude, and
    phi = ||I - w||_2. Uses a dense symmetric eigensolver; n is desk-scale.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("expected a square matrix")
    if np.max(np.abs(w - w.T)) > tol:
        raise ValueError("expected a symmetric matrix")
    eigs = np.linalg.eigvalsh(w)
    mags = np.sort(np.abs(eigs))[::-1]
    rho = 1.0 - (mags[1] if len(mags) > 1 else 0.0)
    phi = float(np.max(np.abs(1.0 - eigs)))
    return float(rho), phi


def laplacian_weights(topology: Topology, iota: float | None = None) -> WeightMatrix:
    """Mixing matrix W = I - L/iota for a connected topology.

    iota must exceed the maximum degree; defaults to d_max + 1, the
    smallest admissible integer.
    """
    deg = topology.degrees()
    d_max = int(deg.max()) if topology.n > 1 else 0
    if iota is None:
        iota = d_max + 1
    if iota <= d_max:
        raise ValueError(f"iota must exceed the maximum degree {d_max}, got {iota}")
    n = topology.n
    lap = np.diag(deg.astype(float))
    for i, j in topology.edges:
        lap[i, j] = lap[j, i] = -1.0
    w = np.eye(n) - lap / float(iota)
    rho, phi = spectral_quantities(w, tol=STOCHASTIC_TOL)
    if rho <= 0.0:
        raise ValueError("constructed matrix has zero spectral gap")
    wm = WeightMatrix(w=w, rho=rho, phi=phi, topology=topology)
    wm.validate()
    return wm
