"""Synchronized multi-agent simulation of private sparsified gossip descent.

Each iteration runs two phases separated by a barrier, so every agent
reads the previous iteration's replica snapshot:

  1. every agent draws its activation bit; active agents sample one local
     data point, clip the stochastic gradient per coordinate, add Gaussian
     noise, and update momentum and iterate; active agents emit the top-k
     sparsified difference between their new iterate and their public
     replica; inactive agents decay momentum and apply only the consensus
     term;
  2. every agent (and the sender itself) applies the received sparse
     updates to its replica table.

All randomness comes from streams keyed by (seed, agent, iteration,
purpose), so trajectories are reproducible regardless of execution order.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .compress import SparseUpdate, clip_per_coordinate, top_k
from .graph import Topology, WeightMatrix
from .privacy import PrivacyBudget, sample_gaussian_noise, stream

# Stream purposes; keep stable across versions for reproducibility.
PURPOSE_ACTIVATION = 0
PURPOSE_SAMPLE = 1
PURPOSE_NOISE = 2

METRICS_COLUMNS = (
    "iter",
    "suboptimality",
    "grad_norm_sq",
    "consensus_error",
    "bytes_cum",
    "active_count",
)


@dataclass
class RunConfig:
    """Step sizes, sparsifier size, noise level, and the master seed.

    alpha/gamma may be zero for diagnostic runs (e.g. pure gossip).
    """

    alpha: float
    gamma: float
    beta: float
    p: float
    k: int
    T: int
    sigma: float
    G: float
    seed: int
    x0: np.ndarray | None = None
    record_stride: int = 1

    def __post_init__(self):
        if self.alpha < 0 or self.gamma < 0:
            raise ValueError("step sizes must be nonnegative")
        if not 0 < self.beta < 1:
            raise ValueError(f"momentum factor must be in (0, 1), got {self.beta}")
        if not 0.5 <= self.p <= 1:
            raise ValueError(f"activation probability must be in [1/2, 1], got {self.p}")
        if self.k < 1:
            raise ValueError(f"sparsifier size must be >= 1, got {self.k}")
        if self.T < 1:
            raise ValueError(f"iteration count must be >= 1, got {self.T}")
        if self.sigma < 0:
            raise ValueError(f"noise level must be nonnegative, got {self.sigma}")
        if self.G <= 0:
            raise ValueError(f"clip scale must be positive, got {self.G}")
        if self.record_stride < 1:
            raise ValueError("record stride must be >= 1")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "gamma": self.gamma,
            "beta": self.beta,
            "p": self.p,
            "k": self.k,
            "T": self.T,
            "sigma": self.sigma,
            "G": self.G,
            "seed": self.seed,
            "x0": None if self.x0 is None else [float(v) for v in self.x0],
            "record_stride": self.record_stride,
        }


@dataclass(eq=False)
class AgentState:
    """One agent's private iterate, momentum, and replica table."""

    i: int
    x: np.ndarray
    m: np.ndarray
    replicas: dict[int, np.ndarray]


@dataclass(eq=False)
class IterationTrace:
    t: int
    active: np.ndarray
    messages: list[SparseUpdate | None]
    bytes: int


def activation_draw(p: float, rng: np.random.Generator) -> int:
    """Bernoulli(p) activation bit."""
    if not 0.5 <= p <= 1:
        raise ValueError(f"activation probability must be in [1/2, 1], got {p}")
    return int(rng.random() < p)


def agent_step(
    state: AgentState,
    grad: np.ndarray | None,
    noise: np.ndarray | None,
    eta: int,
    neighbor_weights: Mapping[int, float],
    config: RunConfig,
) -> tuple[np.ndarray, np.ndarray, SparseUpdate | None]:
    """One agent's state update; returns (new x, new m, sparse update or None).

    Active agents require grad and noise; inactive agents take neither.
    The consensus term reads the agent's own replica snapshot only.
    """
    own = state.replicas[state.i]
    gossip = np.zeros_like(state.x)
    for j, w in neighbor_weights.items():
        gossip += w * (state.replicas[j] - own)
    if eta:
        if grad is None or noise is None:
            raise ValueError("active step needs both gradient and noise")
        if grad.shape != state.x.shape or noise.shape != state.x.shape:
            raise ValueError("gradient/noise dimension mismatch")
        m_new = grad + noise + config.beta * state.m
        x_new = state.x - config.alpha * m_new + config.gamma * gossip
        update = top_k(x_new - own, config.k)
    else:
        if grad is not None or noise is not None:
            raise ValueError("inactive step takes no gradient or noise")
        m_new = config.beta * state.m
        x_new = state.x + config.gamma * gossip
        update = None
    return x_new, m_new, update


def replica_apply(
    replicas: dict[int, np.ndarray], sender: int, update: SparseUpdate | None
) -> dict[int, np.ndarray]:
    """Apply a sender's sparse update to the local replica table in place."""
    if sender not in replicas:
        raise KeyError(f"unknown sender {sender}")
    if update is not None:
        target = replicas[sender]
        target[update.indices] += update.values
    return replicas


def recommended_gamma(rho: float, phi: float, p: float, k: int, d: int) -> float:
    """Consensus step size from the convergence analysis."""
    denom = d * (16 * rho + rho**2 + 4 * phi**2 + 2 * rho * phi**2) - 8 * rho * p * k
    if denom <= 0:
        raise ValueError(f"step-size denominator must be positive, got {denom}")
    return rho * p * k / denom


@dataclass(eq=False)
class RunMetrics:
    """Per-iteration metrics of one simulation run."""

    iters: np.ndarray
    suboptimality: np.ndarray
    grad_norm_sq: np.ndarray
    consensus_error: np.ndarray
    bytes_cum: np.ndarray
    active_count: np.ndarray
    momentum_sq_mean: np.ndarray
    T: int
    final_x_mean: np.ndarray
    clipped_fraction: float

    @property
    def total_bytes(self) -> int:
        return int(self.bytes_cum[-1])

    def mean_bytes_per_iteration(self) -> float:
        return self.total_bytes / self.T

    def time_avg_grad_norm_sq(self) -> float:
        """Average of ||grad f(x_bar_t)||^2 over the recorded trajectory."""
        return float(np.mean(self.grad_norm_sq))

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
        for row in zip(
            self.iters,
            self.suboptimality,
            self.grad_norm_sq,
            self.consensus_error,
            self.bytes_cum,
            self.active_count,
        ):
            writer.writerow(
                [int(row[0]), repr(float(row[1])), repr(float(row[2])),
                 repr(float(row[3])), int(row[4]), int(row[5])]
            )
        return buf.getvalue()

    def to_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv_text())


class Simulation:
    """Stepwise executor; use run() unless per-iteration state is needed."""

    def __init__(
        self,
        problem,
        topology: Topology,
        weights: WeightMatrix,
        config: RunConfig,
        budget: PrivacyBudget | None = None,
    ):
        if topology.n != problem.n:
            raise ValueError(
                f"topology has {topology.n} agents but problem has {problem.n}"
            )
        if weights.n != topology.n:
            raise ValueError("weight matrix size does not match topology")
        if config.k > problem.dim:
            raise ValueError(f"k={config.k} exceeds dimension {problem.dim}")
        self.problem = problem
        self.topology = topology
        self.weights = weights
        self.config = config
        self.sigma = budget.sigma if budget is not None else config.sigma
        self.t = 0
        # clipping diagnostic: coordinates saturated / coordinates seen
        self.clipped_coords = 0
        self.gradient_coords = 0

        n, d = topology.n, problem.dim
        x0 = np.zeros(d) if config.x0 is None else np.asarray(config.x0, dtype=float)
        if x0.shape != (d,):
            raise ValueError(f"x0 must have dimension {d}")
        adjacency = topology.neighbor_lists()
        self.neighbor_weights: list[dict[int, float]] = [
            {j: float(weights.w[i, j]) for j in adjacency[i]} for i in range(n)
        ]
        self.agents = [
            AgentState(
                i=i,
                x=x0.copy(),
                m=np.zeros(d),
                replicas={j: np.zeros(d) for j in sorted([i] + adjacency[i])},
            )
            for i in range(n)
        ]

    def step(self) -> IterationTrace:
        """Advance one synchronized iteration."""
        cfg = self.config
        problem = self.problem
        n = self.topology.n
        d = problem.dim
        t = self.t
        zero_noise = np.zeros(d) if self.sigma == 0.0 else None

        messages: list[SparseUpdate | None] = [None] * n
        active = np.zeros(n, dtype=bool)
        new_states: list[tuple[np.ndarray, np.ndarray]] = []
        for agent in self.agents:
            i = agent.i
            if cfg.p >= 1.0:
                eta = 1
            else:
                eta = activation_draw(
                    cfg.p, stream(cfg.seed, i, t, PURPOSE_ACTIVATION)
                )
            grad = noise = None
            if eta:
                if problem.q > 1:
                    j = int(stream(cfg.seed, i, t, PURPOSE_SAMPLE).integers(problem.q))
                else:
                    j = 0
                raw = problem.sample_grad(i, j, agent.x)
                grad = clip_per_coordinate(raw, cfg.G)
                self.clipped_coords += int(np.count_nonzero(grad != raw))
                self.gradient_coords += d
                if zero_noise is not None:
                    noise = zero_noise
                else:
                    noise = sample_gaussian_noise(
                        d, self.sigma, stream(cfg.seed, i, t, PURPOSE_NOISE)
                    )
            x_new, m_new, update = agent_step(
                agent, grad, noise, eta, self.neighbor_weights[i], cfg
            )
            if not np.all(np.isfinite(x_new)):
                raise FloatingPointError(
                    f"non-finite iterate at iteration {t} (agent {i}); "
                    f"sigma or step sizes too large"
                )
            active[i] = bool(eta)
            messages[i] = update
            new_states.append((x_new, m_new))

        # barrier: replica tables advance only after every agent has stepped
        for agent, (x_new, m_new) in zip(self.agents, new_states):
            agent.x = x_new
            agent.m = m_new
        for agent in self.agents:
            for j in agent.replicas:
                replica_apply(agent.replicas, j, messages[j])

        nbytes = sum(msg.nbytes for msg in messages if msg is not None)
        self.t += 1
        return IterationTrace(t=t, active=active, messages=messages, bytes=nbytes)

    def x_matrix(self) -> np.ndarray:
        return np.stack([agent.x for agent in self.agents])

    def x_mean(self) -> np.ndarray:
        return self.x_matrix().mean(axis=0)

    def consensus_error(self) -> float:
        X = self.x_matrix()
        diffs = X - X.mean(axis=0)
        return float(np.sum(diffs * diffs))

    def momentum_sq_mean(self) -> float:
        return float(np.mean([agent.m @ agent.m for agent in self.agents]))


def run(
    problem,
    topology: Topology,
    weights: WeightMatrix,
    config: RunConfig,
    budget: PrivacyBudget | None = None,
    f_star: float = 0.0,
) -> RunMetrics:
    """Execute T synchronized iterations and collect metrics.

    Metrics are recorded at iteration 0, every record_stride iterations,
    and at the final iteration. suboptimality is f(x_bar_t) - f_star.
    """
    sim = Simulation(problem, topology, weights, config, budget)
    rows_iter: list[int] = []
    rows: list[tuple[float, float, float, int, int, float]] = []
    bytes_cum = 0

    def record(t: int, active_count: int):
        xbar = sim.x_mean()
        g = problem.grad(xbar)
        rows_iter.append(t)
        rows.append(
            (
                problem.loss(xbar) - f_star,
                float(g @ g),
                sim.consensus_error(),
                bytes_cum,
                active_count,
                sim.momentum_sq_mean(),
            )
        )

    record(0, 0)
    for t in range(1, config.T + 1):
        trace = sim.step()
        bytes_cum += trace.bytes
        if t % config.record_stride == 0 or t == config.T:
            record(t, int(trace.active.sum()))

    cols = list(zip(*rows))
    return RunMetrics(
        iters=np.asarray(rows_iter, dtype=int),
        suboptimality=np.asarray(cols[0]),
        grad_norm_sq=np.asarray(cols[1]),
        consensus_error=np.asarray(cols[2]),
        bytes_cum=np.asarray(cols[3], dtype=np.int64),
        active_count=np.asarray(cols[4], dtype=int),
        momentum_sq_mean=np.asarray(cols[5]),
        T=config.T,
        final_x_mean=sim.x_mean(),
        clipped_fraction=(
            sim.clipped_coords / sim.gradient_coords if sim.gradient_coords else 0.0
        ),
    )
