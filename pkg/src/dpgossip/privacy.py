"""Gaussian noise calibration and (epsilon, delta) budget verification.

The calibration formula gives the minimal noise standard deviation for a
target (epsilon, delta0) over T iterations with activation probability p,
local dataset size q, and k of d coordinates transmitted:

    sigma^2 = 160 k p^2 T log(1.25/delta0) G^2 / (q^2 d epsilon^2).

verify_budget independently replays the accounting chain that justifies
it: per-step Gaussian mechanism -> subsampling amplification -> advanced
composition -> post-processing, and certifies that the composed epsilon
stays below the target.

All logarithms are natural. Randomness is drawn from deterministic
streams keyed by (seed, agent, iteration, purpose), which are mutually
independent and order-insensitive, so agents may draw concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class BudgetError(ValueError):
    """A privacy budget is inadmissible or cannot be certified."""


def stream(seed: int, agent: int, iteration: int, purpose: int) -> np.random.Generator:
    """Deterministic generator keyed by (seed, agent, iteration, purpose)."""
    key = np.random.SeedSequence(entropy=seed, spawn_key=(agent, iteration, purpose))
    return np.random.default_rng(key)


def sample_gaussian_noise(d: int, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. N(0, sigma^2) per coordinate; sigma = 0 returns the zero vector."""
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0.0:
        return np.zeros(d)
    return rng.normal(0.0, sigma, size=d)


def gaussian_sensitivity(k: int, d: int, G: float) -> float:
    """l2-sensitivity of the k-of-d selected clipped gradient: 2 G sqrt(k/d)."""
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    if G <= 0:
        raise ValueError(f"gradient scale must be positive, got {G}")
    return 2.0 * G * math.sqrt(k / d)


def _check_budget_domain(epsilon: float, delta0: float, p: float, q: int, k: int, d: int, G: float):
    if not 0 < epsilon <= 1:
        raise BudgetError(f"epsilon must be in (0, 1], got {epsilon}")
    if not 0 < delta0 <= 1:
        raise BudgetError(f"delta0 must be in (0, 1], got {delta0}")
    if not 0.5 <= p <= 1:
        raise BudgetError(f"activation probability must be in [1/2, 1], got {p}")
    if q < 1:
        raise BudgetError(f"local dataset size must be >= 1, got {q}")
    if not 1 <= k <= d:
        raise BudgetError(f"need 1 <= k <= d, got k={k}, d={d}")
    if G <= 0:
        raise BudgetError(f"gradient scale must be positive, got {G}")


def minimal_iterations(epsilon: float, p: float, q: int) -> int:
    """Smallest iteration count admissible for calibration: ceil(q^2 eps^2 / (4 p^2))."""
    return max(1, math.ceil(q * q * epsilon * epsilon / (4.0 * p * p)))


def calibrate_sigma(
    epsilon: float,
    delta0: float,
    T: int,
    p: float,
    q: int,
    k: int,
    d: int,
    G: float,
) -> float:
    """Minimal noise standard deviation achieving the target budget."""
    _check_budget_domain(epsilon, delta0, p, q, k, d, G)
    if T < q * q * epsilon * epsilon / (4.0 * p * p):
        raise BudgetError(
            f"T={T} is below the admissible minimum "
            f"{minimal_iterations(epsilon, p, q)} for epsilon={epsilon}, p={p}, q={q}"
        )
    sigma_sq = (
        160.0 * k * p * p * T * math.log(1.25 / delta0) * G * G
        / (q * q * d * epsilon * epsilon)
    )
    return math.sqrt(sigma_sq)


def per_step_epsilon(sigma: float, k: int, d: int, delta0: float, G: float) -> float:
    """Per-iteration epsilon of the Gaussian mechanism on the selected gradient."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    if not 0 < delta0 <= 1:
        raise ValueError(f"delta0 must be in (0, 1], got {delta0}")
    return 2.0 * math.sqrt(2.0 * k * math.log(1.25 / delta0)) * G / (sigma * math.sqrt(d))


def amplify_by_subsampling(eps: float, p: float, q: int, mode: str = "exact") -> float:
    """Amplified epsilon after activation/sample subsampling.

    exact mode evaluates log(1 + p (e^eps - 1) / q); paper_bound mode is
    the linearization 2 p eps / q, valid only when eps^2 <= 1/5 (and
    dominating the exact value there). The companion delta map is
    delta -> p * delta / q.
    """
    if eps < 0:
        raise ValueError(f"epsilon must be nonnegative, got {eps}")
    if not 0 < p <= 1:
        raise ValueError(f"p must be in (0, 1], got {p}")
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if mode == "exact":
        return math.log1p(p * math.expm1(eps) / q)
    if mode == "paper_bound":
        if eps * eps > 0.2:
            raise ValueError(
                f"linearized amplification requires eps^2 <= 1/5, got eps={eps}"
            )
        return 2.0 * p * eps / q
    raise ValueError(f"unknown mode {mode!r}")


def compose_advanced(
    eps_list: np.ndarray,
    delta_list: np.ndarray,
    delta_prime: float,
) -> tuple[float, float]:
    """Advanced composition of per-step (eps_t, delta_t) mechanisms.

    eps_tilde = sqrt(2 S log(e + sqrt(S)/delta')) + S with S = sum eps_t^2,
    delta_tilde = 1 - (1 - delta') prod(1 - delta_t). Every eps_t must lie
    in (0, 0.9].
    """
    eps = np.asarray(eps_list, dtype=float)
    deltas = np.asarray(delta_list, dtype=float)
    if eps.shape != deltas.shape:
        raise ValueError("eps_list and delta_list must have equal length")
    if np.any(eps > 0.9) or np.any(eps < 0):
        raise BudgetError("composition requires every per-step epsilon in [0, 0.9]")
    if np.any(deltas <= 0) or np.any(deltas > 1):
        raise BudgetError("composition requires every per-step delta in (0, 1]")
    if not 0 < delta_prime <= 1:
        raise BudgetError(f"delta_prime must be in (0, 1], got {delta_prime}")
    s = float(np.sum(eps * eps))
    eps_tilde = math.sqrt(2.0 * s * math.log(math.e + math.sqrt(s) / delta_prime)) + s
    delta_tilde = 1.0 - (1.0 - delta_prime) * float(np.prod(1.0 - deltas))
    return eps_tilde, delta_tilde


@dataclass(frozen=True)
class PrivacyBudget:
    """Target budget plus the algorithm parameters that consume it."""

    epsilon: float
    delta0: float
    T: int
    p: float
    q: int
    k: int
    d: int
    G: float
    sigma: float

    def __post_init__(self):
        _check_budget_domain(self.epsilon, self.delta0, self.p, self.q, self.k, self.d, self.G)
        if self.T < self.q**2 * self.epsilon**2 / (4.0 * self.p**2):
            raise BudgetError(
                f"T={self.T} is below the admissible minimum "
                f"{minimal_iterations(self.epsilon, self.p, self.q)}"
            )
        if self.sigma <= 0:
            raise BudgetError(f"sigma must be positive, got {self.sigma}")

    @classmethod
    def calibrated(
        cls, epsilon: float, delta0: float, T: int, p: float, q: int, k: int, d: int, G: float
    ) -> "PrivacyBudget":
        sigma = calibrate_sigma(epsilon, delta0, T, p, q, k, d, G)
        return cls(epsilon=epsilon, delta0=delta0, T=T, p=p, q=q, k=k, d=d, G=G, sigma=sigma)


@dataclass(frozen=True)
class AccountingLedger:
    """Per-stage record of the verified accounting chain."""

    per_step_eps: float
    per_step_delta: float
    amplified_eps: float
    amplified_delta: float
    delta_prime: float
    composed_eps: float
    composed_delta: float
    target_eps: float

    def report(self) -> str:
        """One line per accounting stage: stage name, epsilon, delta."""
        lines = [
            f"per_step        eps={self.per_step_eps:.6g}  delta={self.per_step_delta:.6g}",
            f"subsampled      eps={self.amplified_eps:.6g}  delta={self.amplified_delta:.6g}",
            f"composed        eps={self.composed_eps:.6g}  delta={self.composed_delta:.6g}",
            f"post_processed  eps={self.composed_eps:.6g}  delta={self.composed_delta:.6g}",
        ]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "per_step_eps": self.per_step_eps,
            "per_step_delta": self.per_step_delta,
            "amplified_eps": self.amplified_eps,
            "amplified_delta": self.amplified_delta,
            "delta_prime": self.delta_prime,
            "composed_eps": self.composed_eps,
            "composed_delta": self.composed_delta,
            "target_eps": self.target_eps,
        }


def verify_budget(budget: PrivacyBudget) -> AccountingLedger:
    """Replay the accounting chain and certify composed epsilon <= target.

    Raises BudgetError naming the failing link when sigma is insufficient.
    The transmitted messages are post-processings of the perturbed
    gradients, so the final stage is recorded as a no-op.
    """
    eps_t = per_step_epsilon(budget.sigma, budget.k, budget.d, budget.delta0, budget.G)
    if eps_t * eps_t > 0.2:
        raise BudgetError(
            f"amplification step: per-step epsilon {eps_t:.6g} leaves the "
            f"linearization regime eps_t^2 <= 1/5 (sigma too small)"
        )
    eps_amp = amplify_by_subsampling(eps_t, budget.p, budget.q, mode="paper_bound")
    delta_amp = budget.p * budget.delta0 / budget.q
    sum_sq = budget.T * eps_amp * eps_amp
    if sum_sq > 1.0:
        raise BudgetError(
            f"composition step: sum of squared amplified epsilons {sum_sq:.6g} "
            f"exceeds 1 (sigma too small)"
        )
    delta_prime = math.sqrt(sum_sq)
    eps_tilde, delta_tilde = compose_advanced(
        np.full(budget.T, eps_amp), np.full(budget.T, delta_amp), delta_prime
    )
    if eps_tilde > budget.epsilon:
        raise BudgetError(
            f"composition step: composed epsilon {eps_tilde:.6g} exceeds the "
            f"target {budget.epsilon:.6g} (sigma too small)"
        )
    return AccountingLedger(
        per_step_eps=eps_t,
        per_step_delta=budget.delta0,
        amplified_eps=eps_amp,
        amplified_delta=delta_amp,
        delta_prime=delta_prime,
        composed_eps=eps_tilde,
        composed_delta=delta_tilde,
        target_eps=budget.epsilon,
    )
