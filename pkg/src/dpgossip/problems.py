"""Loss functions, stochastic gradient oracles, data ingestion, and the
ground-truth solver.

Two problem families are provided: l2-regularized logistic regression on
a partitioned dataset (the per-sample loss carries the same (1/2q)||x||^2
regularizer as the local objective, so stochastic gradients are exactly
unbiased), and a strongly convex quadratic with a closed-form optimum for
noiseless convergence checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit


def _softplus(t: np.ndarray | float) -> np.ndarray | float:
    """log(1 + exp(t)), stable for large |t|."""
    t = np.asarray(t, dtype=float)
    out = np.where(t > 0, t + np.log1p(np.exp(-np.abs(t))), np.log1p(np.exp(-np.abs(t))))
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature/label pairs evenly partitioned across agents."""

    features: np.ndarray  # (N, d)
    labels: np.ndarray  # (N,), values in {-1, +1}
    n_agents: int
    seed: int | None = None
    source: str = "synthetic"

    def __post_init__(self):
        N = self.features.shape[0]
        if self.labels.shape != (N,):
            raise ValueError("labels must be one per sample")
        if not np.all(np.isin(self.labels, (-1, 1))):
            raise ValueError("labels must be -1 or +1")
        if N % self.n_agents != 0:
            raise ValueError(
                f"{N} samples cannot be split evenly across {self.n_agents} agents"
            )

    @property
    def q(self) -> int:
        return self.features.shape[0] // self.n_agents

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def agent_index_range(self, i: int) -> tuple[int, int]:
        if not 0 <= i < self.n_agents:
            raise ValueError(f"agent {i} out of range")
        return i * self.q, (i + 1) * self.q

    def manifest(self) -> dict:
        return {
            "n": self.n_agents,
            "q": self.q,
            "d": self.dim,
            "seed": self.seed,
            "source": self.source,
        }


def logistic_loss(x: np.ndarray, a: np.ndarray, b: float, q: int) -> float:
    """Per-sample loss log(1 + exp(-b a^T x)) + (1/2q)||x||^2."""
    if b not in (-1, 1):
        raise ValueError(f"label must be -1 or +1, got {b}")
    return float(_softplus(-b * float(a @ x))) + float(x @ x) / (2.0 * q)


def logistic_grad(x: np.ndarray, a: np.ndarray, b: float, q: int) -> np.ndarray:
    """Per-sample gradient -b a sigmoid(-b a^T x) + x/q."""
    if b not in (-1, 1):
        raise ValueError(f"label must be -1 or +1, got {b}")
    margin = -b * float(a @ x)
    return -b * expit(margin) * a + x / q


class LogisticProblem:
    """Decentralized regularized logistic regression over a Dataset.

    Local objective of agent i over its q samples:
    f_i(x) = (1/q) sum_j log(1 + exp(-b_j a_j^T x)) + (1/2q)||x||^2.
    """

    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        self.n = dataset.n_agents
        self.dim = dataset.dim
        self.q = dataset.q

    def _agent_data(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.dataset.agent_index_range(i)
        return self.dataset.features[lo:hi], self.dataset.labels[lo:hi]

    def sample_loss(self, i: int, j: int, x: np.ndarray) -> float:
        A, b = self._agent_data(i)
        return logistic_loss(x, A[j], int(b[j]), self.q)

    def sample_grad(self, i: int, j: int, x: np.ndarray) -> np.ndarray:
        A, b = self._agent_data(i)
        return logistic_grad(x, A[j], int(b[j]), self.q)

    def local_loss(self, i: int, x: np.ndarray) -> float:
        A, b = self._agent_data(i)
        margins = -b * (A @ x)
        return float(np.mean(_softplus(margins))) + float(x @ x) / (2.0 * self.q)

    def local_grad(self, i: int, x: np.ndarray) -> np.ndarray:
        A, b = self._agent_data(i)
        margins = -b * (A @ x)
        return (A.T @ (-b * expit(margins))) / self.q + x / self.q

    def loss(self, x: np.ndarray) -> float:
        return sum(self.local_loss(i, x) for i in range(self.n)) / self.n

    def grad(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dim)
        for i in range(self.n):
            out += self.local_grad(i, x)
        return out / self.n

    def smoothness(self) -> float:
        """Upper bound on the local smoothness constants L_i."""
        best = 0.0
        for i in range(self.n):
            A, _ = self._agent_data(i)
            gram_top = float(np.linalg.eigvalsh(A.T @ A)[-1])
            best = max(best, gram_top / (4.0 * self.q) + 1.0 / self.q)
        return best

    def gradient_variance(self, x: np.ndarray) -> np.ndarray:
        """Per-agent empirical variance of stochastic gradients at x."""
        out = np.zeros(self.n)
        for i in range(self.n):
            full = self.local_grad(i, x)
            sq = 0.0
            for j in range(self.q):
                diff = self.sample_grad(i, j, x) - full
                sq += float(diff @ diff)
            out[i] = sq / self.q
        return out


class QuadraticProblem:
    """f_i(x) = 0.5 (x - c_i)^T A_i (x - c_i) with SPD A_i and closed-form optimum."""

    def __init__(self, hessians: np.ndarray, centers: np.ndarray):
        self.hessians = np.asarray(hessians, dtype=float)  # (n, d, d)
        self.centers = np.asarray(centers, dtype=float)  # (n, d)
        self.n, self.dim = self.centers.shape
        self.q = 1
        total = self.hessians.sum(axis=0)
        rhs = np.einsum("nij,nj->i", self.hessians, self.centers)
        self.x_star = np.linalg.solve(total, rhs)
        self.f_star = self.loss(self.x_star)
        eigs = np.linalg.eigvalsh(self.hessians)
        if np.min(eigs) <= 0:
            raise ValueError("hessians must be positive definite")
        self.L = float(np.max(eigs))

    def sample_loss(self, i: int, j: int, x: np.ndarray) -> float:
        return self.local_loss(i, x)

    def sample_grad(self, i: int, j: int, x: np.ndarray) -> np.ndarray:
        return self.local_grad(i, x)

    def local_loss(self, i: int, x: np.ndarray) -> float:
        r = x - self.centers[i]
        return 0.5 * float(r @ self.hessians[i] @ r)

    def local_grad(self, i: int, x: np.ndarray) -> np.ndarray:
        return self.hessians[i] @ (x - self.centers[i])

    def loss(self, x: np.ndarray) -> float:
        r = x[None, :] - self.centers
        return 0.5 * float(np.einsum("ni,nij,nj->", r, self.hessians, r)) / self.n

    def grad(self, x: np.ndarray) -> np.ndarray:
        r = x[None, :] - self.centers
        return np.einsum("nij,nj->i", self.hessians, r) / self.n

    def smoothness(self) -> float:
        return self.L

    def gradient_variance(self, x: np.ndarray) -> np.ndarray:
        return np.zeros(self.n)


def quadratic_problem(
    n: int,
    d: int,
    condition_spread: float,
    seed: int,
    shared_hessian: bool = False,
) -> QuadraticProblem:
    """Random strongly convex quadratic with eigenvalues in [1, condition_spread].

    With shared_hessian every agent gets the same curvature (only the
    centers differ), which makes the average iterate of a noiseless
    full-participation run follow exact centralized momentum descent.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if not np.isfinite(condition_spread) or condition_spread < 1:
        raise ValueError(f"condition spread must be finite and >= 1, got {condition_spread}")
    rng = np.random.default_rng(seed)

    def one_hessian() -> np.ndarray:
        eigvals = np.linspace(1.0, condition_spread, d)
        qmat, r = np.linalg.qr(rng.normal(size=(d, d)))
        qmat = qmat * np.sign(np.diag(r))  # fix QR sign convention
        return (qmat * eigvals) @ qmat.T

    if shared_hessian:
        A = np.broadcast_to(one_hessian(), (n, d, d)).copy()
    else:
        A = np.stack([one_hessian() for _ in range(n)])
    c = rng.normal(size=(n, d))
    return QuadraticProblem(A, c)


def synthetic_logistic_data(
    n: int, q: int, d: int, margin: float, seed: int
) -> Dataset:
    """Gaussian features with labels from a planted logistic model.

    P(b = sign(a^T w) | a) = sigmoid(margin |a^T w| / ||w||); larger margin
    means more separable labels, margin -> inf gives exactly
    b = sign(a^T w).
    """
    if n < 1 or q < 1 or d < 1 or margin < 0:
        raise ValueError("n, q, d must be positive and margin nonnegative")
    rng = np.random.default_rng(seed)
    w = rng.normal(size=d)
    w /= np.linalg.norm(w)
    A = rng.normal(size=(n * q, d))
    z = A @ w
    flip_prob = expit(-margin * np.abs(z))
    flips = rng.random(n * q) < flip_prob
    labels = np.sign(z)
    labels[labels == 0] = 1.0
    labels[flips] *= -1.0
    return Dataset(
        features=A, labels=labels.astype(int), n_agents=n, seed=seed, source="synthetic"
    )


def load_svmlight(path: str | Path, n_agents: int = 1) -> Dataset:
    """Parse `label idx:val ...` lines with 1-based indices into a Dataset.

    The dimension is inferred as the largest feature index seen. Malformed
    lines are rejected with their line number; an empty file is an error.
    """
    path = Path(path)
    rows: list[dict[int, float]] = []
    labels: list[int] = []
    max_idx = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                lab = float(parts[0])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad label {parts[0]!r}") from None
            if lab not in (-1.0, 1.0):
                raise ValueError(f"{path}:{lineno}: label must be +/-1, got {parts[0]!r}")
            feats: dict[int, float] = {}
            for tok in parts[1:]:
                try:
                    idx_s, val_s = tok.split(":")
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: bad feature token {tok!r}") from None
                if idx < 1:
                    raise ValueError(f"{path}:{lineno}: indices are 1-based, got {idx}")
                if idx in feats:
                    raise ValueError(f"{path}:{lineno}: duplicate index {idx}")
                feats[idx] = val
                max_idx = max(max_idx, idx)
            rows.append(feats)
            labels.append(int(lab))
    if not rows:
        raise ValueError(f"{path}: no samples found")
    features = np.zeros((len(rows), max_idx))
    for r, feats in enumerate(rows):
        for idx, val in feats.items():
            features[r, idx - 1] = val
    return Dataset(
        features=features,
        labels=np.asarray(labels, dtype=int),
        n_agents=n_agents,
        source=str(path),
    )


def save_svmlight(dataset: Dataset, path: str | Path) -> None:
    """Write `label idx:val ...` lines (1-based, nonzeros only)."""
    with open(path, "w") as fh:
        for a, b in zip(dataset.features, dataset.labels):
            toks = [f"{int(b):+d}"]
            toks += [f"{j + 1}:{float(a[j])!r}" for j in np.flatnonzero(a != 0.0)]
            fh.write(" ".join(toks) + "\n")


def save_dataset_manifest(dataset: Dataset, path: str | Path) -> None:
    Path(path).write_text(json.dumps(dataset.manifest(), indent=2, sort_keys=True) + "\n")


def solve_reference(problem, tolerance: float = 1e-9, max_iter: int = 200_000):
    """Full-batch gradient descent with backtracking until ||grad f|| <= tolerance.

    Returns (x_star, f_star); raises if the iteration cap is exceeded.
    """
    x = np.zeros(problem.dim)
    f = problem.loss(x)
    step = 1.0
    for _ in range(max_iter):
        g = problem.grad(x)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tolerance:
            return x, f
        # Backtracking without regrowth. Once the expected decrease falls
        # below float resolution of f, keep the last validated step: the
        # sufficient-decrease test is meaningless there, but a previously
        # accepted step stays stable for smooth convex losses.
        while 0.5 * step * gnorm * gnorm > 1e-14 * max(1.0, abs(f)):
            x_new = x - step * g
            f_new = problem.loss(x_new)
            if f_new <= f - 0.5 * step * gnorm * gnorm:
                break
            step *= 0.5
            if step < 1e-18:
                raise RuntimeError("reference solver step size underflow")
        x = x - step * g
        f = problem.loss(x)
    raise RuntimeError(
        f"reference solver did not reach gradient norm {tolerance} in {max_iter} iterations"
    )
