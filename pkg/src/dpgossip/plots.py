"""Figure rendering for experiment outputs.

Renders the two standard views of a sweep to image files next to the CSV
outputs: convergence curves (seed-averaged suboptimality per iteration,
one line per sweep point) and the privacy/accuracy trade-off (final
suboptimality versus the privacy target, one line per communication
configuration).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _label(p: float, k_over_d: float) -> str:
    return f"p={p:g}, k/d={k_over_d:g} (util {p * k_over_d:.0%})"


def render_convergence(
    curves: dict[tuple[float, float, float], tuple[np.ndarray, np.ndarray]],
    path: str | Path,
) -> Path:
    """Plot mean suboptimality vs iteration for each (p, k/d, eps) point.

    curves maps (p, k_over_d, epsilon) -> (iterations, mean suboptimality).
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    for (p, kd, eps), (iters, subopt) in sorted(curves.items()):
        label = _label(p, kd)
        if not np.isnan(eps):
            label += f", eps={eps:g}"
        ax.plot(iters, np.maximum(subopt, 1e-16), label=label)
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("suboptimality")
    ax.legend(fontsize=7)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_tradeoff(
    rows: list[dict],
    path: str | Path,
) -> Path | None:
    """Plot final suboptimality vs epsilon, one line per (p, k/d) config.

    rows are aggregate records with keys p, k_over_d, epsilon,
    subopt_mean, subopt_std. Returns None when there is no epsilon axis.
    """
    configs: dict[tuple[float, float], list[tuple[float, float, float]]] = {}
    for row in rows:
        eps = row["epsilon"]
        if eps is None or (isinstance(eps, float) and np.isnan(eps)):
            continue
        configs.setdefault((row["p"], row["k_over_d"]), []).append(
            (eps, row["subopt_mean"], row["subopt_std"])
        )
    if not configs or all(len(v) < 1 for v in configs.values()):
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    for (p, kd), points in sorted(configs.items()):
        points.sort()
        eps = [pt[0] for pt in points]
        mean = [pt[1] for pt in points]
        std = [pt[2] for pt in points]
        ax.errorbar(eps, mean, yerr=std, marker="o", capsize=3, label=_label(p, kd))
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("privacy target epsilon")
    ax.set_ylabel("final suboptimality (mean over seeds)")
    ax.legend(fontsize=7)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
