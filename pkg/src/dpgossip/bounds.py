"""Closed-form evaluators for the theoretical guarantees.

Pure arithmetic functions mirroring the analysis: the momentum second
moment bound, the consensus (dispersion) bound with contraction constant
c = rho^2 p k / (82 d), the three-term stationarity bound, and the tuned
step-size rates. Empirical runs are checked against these one-sided
bounds with no slack factor.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass


@dataclass(frozen=True)
class BoundInputs:
    alpha: float
    beta: float
    gamma: float
    p: float
    k: int
    d: int
    n: int
    T: int
    sigma: float
    G: float
    varsigma: float
    L: float
    rho: float
    phi: float
    f0_gap: float

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError(f"momentum factor must be in (0, 1), got {self.beta}")
        for name in ("alpha", "p", "L", "rho"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("sigma", "varsigma", "phi", "f0_gap", "gamma", "G"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not 1 <= self.k <= self.d:
            raise ValueError(f"need 1 <= k <= d, got k={self.k}, d={self.d}")
        if self.n < 1 or self.T < 1:
            raise ValueError("n and T must be >= 1")


def momentum_bound(p: float, G: float, sigma: float, d: int, beta: float) -> float:
    """Upper bound on E||m_{i,t}||^2: p (G^2 + sigma^2 d) / (1 - beta)^2."""
    if not 0 < beta < 1:
        raise ValueError(f"momentum factor must be in (0, 1), got {beta}")
    return p * (G * G + sigma * sigma * d) / (1.0 - beta) ** 2


def consensus_contraction(rho: float, p: float, k: int, d: int) -> float:
    """Contraction constant c = rho^2 p k / (82 d) of the dispersion recursion."""
    if rho <= 0 or k < 1:
        raise ValueError("need rho > 0 and k >= 1")
    return rho * rho * p * k / (82.0 * d)


def consensus_bound(
    alpha: float,
    p: float,
    G: float,
    sigma: float,
    d: int,
    n: int,
    beta: float,
    rho: float,
    k: int,
) -> float:
    """Upper bound on sum_i E||x_bar - x_i||^2 at any iteration."""
    c = consensus_contraction(rho, p, k, d)
    return 8.0 * p * alpha * alpha * (G * G + sigma * sigma * d) * n / (
        c * c * (1.0 - beta) ** 2
    )


def theorem2_bound(inputs: BoundInputs) -> float:
    """Three-term bound on the time-averaged squared gradient norm.

    Requires alpha < (1 - beta)^2 / (2 L); warns when gamma differs from
    the recommended consensus step size (the bound presumes it).
    """
    a, b = inputs.alpha, inputs.beta
    if a >= (1.0 - b) ** 2 / (2.0 * inputs.L):
        raise ValueError(
            f"alpha={a} violates the step-size condition alpha < (1-beta)^2/(2L) = "
            f"{(1.0 - b) ** 2 / (2.0 * inputs.L)}"
        )
    from .engine import recommended_gamma

    gamma_star = recommended_gamma(inputs.rho, inputs.phi, inputs.p, inputs.k, inputs.d)
    if not math.isclose(inputs.gamma, gamma_star, rel_tol=1e-9):
        warnings.warn(
            f"gamma={inputs.gamma} differs from the recommended {gamma_star}; "
            f"the bound presumes the recommended value",
            stacklevel=2,
        )
    noise_energy = inputs.sigma**2 * inputs.d
    c = consensus_contraction(inputs.rho, inputs.p, inputs.k, inputs.d)
    term1 = 2.0 * (1.0 - b) * inputs.f0_gap / (a * inputs.p * inputs.T)
    term2 = (
        a
        * inputs.L
        * (b + 2.0 + 4.0 * b * b * inputs.p)
        * (inputs.G**2 + inputs.varsigma**2 + noise_energy)
        / (inputs.n * (1.0 - b) ** 3)
    )
    term3 = (
        8.0 * a * a * inputs.p * (inputs.G**2 + noise_energy) * inputs.L**2
        / ((1.0 - b) ** 2 * c * c)
    )
    return term1 + term2 + term3


def step_tuned_rate(r0: float, b: float, h: float, d_param: float, T: int) -> float:
    """Rate achieved by the tuned constant step bounded by 1/d_param.

    Value of min over alpha <= 1/d_param of r0/(alpha (T+1)) + b alpha +
    h alpha^2, up to the standard constants:
    2 sqrt(b r0/(T+1)) + 2 h^(1/3) (r0/(T+1))^(2/3) + d_param r0/(T+1).
    """
    if min(r0, b, h, d_param) < 0 or T < 1:
        raise ValueError("parameters must be nonnegative and T >= 1")
    horizon = T + 1.0
    return (
        2.0 * math.sqrt(b * r0 / horizon)
        + 2.0 * h ** (1.0 / 3.0) * (r0 / horizon) ** (2.0 / 3.0)
        + d_param * r0 / horizon
    )


def _rate_coefficients(inputs: BoundInputs) -> tuple[float, float, float, float]:
    b_ = inputs.beta
    noise_energy = inputs.sigma**2 * inputs.d
    c = consensus_contraction(inputs.rho, inputs.p, inputs.k, inputs.d)
    r0 = 2.0 * (1.0 - b_) * inputs.f0_gap / inputs.p
    b_coef = (
        inputs.L
        * (b_ + 2.0 + 4.0 * b_ * b_ * inputs.p)
        * (inputs.G**2 + inputs.varsigma**2 + noise_energy)
        / (inputs.n * (1.0 - b_) ** 3)
    )
    h_coef = (
        8.0 * inputs.p * (inputs.G**2 + noise_energy) * inputs.L**2
        / ((1.0 - b_) ** 2 * c * c)
    )
    d_param = 2.0 * inputs.L / (1.0 - b_) ** 2
    return r0, b_coef, h_coef, d_param


def tuned_alpha(inputs: BoundInputs) -> float:
    """Step size realizing the tuned rate."""
    r0, b_coef, h_coef, d_param = _rate_coefficients(inputs)
    horizon = inputs.T + 1.0
    candidates = [1.0 / d_param]
    if b_coef > 0:
        candidates.append(math.sqrt(r0 / (b_coef * horizon)))
    if h_coef > 0:
        candidates.append((r0 / (h_coef * horizon)) ** (1.0 / 3.0))
    return min(candidates)


def corollary1_rate(inputs: BoundInputs, choice: str = "tuned") -> float:
    """Stationarity rate under the tuned or sqrt(n/T) constant step size."""
    b_ = inputs.beta
    noise_energy = inputs.sigma**2 * inputs.d
    if choice == "tuned":
        r0, b_coef, h_coef, d_param = _rate_coefficients(inputs)
        return step_tuned_rate(r0, b_coef, h_coef, d_param, inputs.T)
    if choice == "sqrt_nT":
        if inputs.T < 4.0 * inputs.n * inputs.L**2 / (1.0 - b_) ** 4:
            raise ValueError(
                f"sqrt(n/T) step requires T >= 4 n L^2/(1-beta)^4 = "
                f"{4.0 * inputs.n * inputs.L ** 2 / (1.0 - b_) ** 4}, got T={inputs.T}"
            )
        c = consensus_contraction(inputs.rho, inputs.p, inputs.k, inputs.d)
        snT = math.sqrt(inputs.n * inputs.T)
        term1 = 2.0 * inputs.f0_gap * (1.0 - b_) / (inputs.p * snT)
        term2 = (
            inputs.L
            * (b_ + 2.0 + 4.0 * b_ * b_ * inputs.p)
            * (inputs.G**2 + inputs.varsigma**2 + noise_energy)
            / ((1.0 - b_) ** 3 * snT)
        )
        term3 = (
            8.0 * inputs.n * inputs.p * (inputs.G**2 + noise_energy) * inputs.L**2
            / ((1.0 - b_) ** 2 * c * c * inputs.T)
        )
        return term1 + term2 + term3
    raise ValueError(f"unknown choice {choice!r}")
