"""Configuration-driven experiment runner.

Subcommands:

  run <spec.json> [--out DIR] [--stride N] [--workers N]
      Execute every (sweep point x seed) job, write per-run metrics CSVs
      and manifests, an aggregate CSV, and figures.
  budget <spec.json>
      Print calibrated noise levels and the full accounting ledger for
      every sweep point.
  validate <spec.json>
      Check the spec and exit.

Exit codes: 0 success, 1 validation error, 2 runtime failure.

A spec is a single JSON file:

  {
    "problem":  {"type": "synthetic_logistic", "n": 20, "q": 50, "d": 30,
                 "margin": 2.0, "seed": 7},
    "topology": {"type": "ring_chords", "chord_span": 3, "iota": 7},
    "run":      {"alpha": 0.001, "beta": 0.15, "gamma": 0.05, "T": 300,
                 "G": 1.0, "record_stride": 1},
    "privacy":  {"epsilons": [0.1, 1.0], "delta0": 1e-5},
    "sweep":    {"p": [0.8, 1.0], "k_over_d": [0.3, 1.0]},
    "seeds":    [0, 1, 2],
    "out":      "results"
  }

"gamma" may be the string "auto" to use the analysis' recommended value
(it then depends on the sweep point). "privacy" may instead carry an
explicit {"sigma": ...}; the epsilon-related aggregate columns are left
empty in that case.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from . import problems
from .engine import RunConfig, recommended_gamma, run
from .graph import Topology, WeightMatrix, laplacian_weights, ring_chords
from .privacy import BudgetError, PrivacyBudget, verify_budget

AGGREGATE_COLUMNS = (
    "p",
    "k_over_d",
    "epsilon",
    "sigma",
    "util_rate",
    "subopt_mean",
    "subopt_std",
    "grad_norm_mean",
    "bytes_mean",
    "eps_tilde",
    "delta_tilde",
)


class SpecError(ValueError):
    """Experiment spec failed validation; message lists field paths."""


def load_spec(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: not valid JSON: {exc}") from None
    except OSError as exc:
        raise SpecError(f"{path}: {exc}") from None


def _require(block: dict, key: str, path: str, errors: list[str], types=None):
    if key not in block:
        errors.append(f"{path}.{key}: missing")
        return None
    value = block[key]
    if types is not None and not isinstance(value, types):
        errors.append(f"{path}.{key}: expected {types}, got {type(value).__name__}")
        return None
    return value


def _problem_dims(problem_spec: dict) -> tuple[int, int, int]:
    """(n, d, q) implied by a validated problem spec."""
    kind = problem_spec["type"]
    if kind == "synthetic_logistic":
        return problem_spec["n"], problem_spec["d"], problem_spec["q"]
    if kind == "quadratic":
        return problem_spec["n"], problem_spec["d"], 1
    # svmlight: dimensions only known after parsing the file
    ds = problems.load_svmlight(problem_spec["path"], n_agents=problem_spec["n"])
    return ds.n_agents, ds.dim, ds.q


def validate_spec(raw: dict) -> dict:
    """Validate a raw spec dict; returns it unchanged or raises SpecError."""
    errors: list[str] = []

    problem = _require(raw, "problem", "spec", errors, dict)
    n = d = q = None
    if problem is not None:
        kind = _require(problem, "type", "problem", errors, str)
        if kind == "synthetic_logistic":
            for key in ("n", "q", "d"):
                v = _require(problem, key, "problem", errors, int)
                if v is not None and v < 1:
                    errors.append(f"problem.{key}: must be >= 1")
            seed = _require(problem, "seed", "problem", errors, int)
            if seed is not None and seed < 0:
                errors.append("problem.seed: must be >= 0")
            margin = _require(problem, "margin", "problem", errors, (int, float))
            if margin is not None and margin < 0:
                errors.append("problem.margin: must be nonnegative")
        elif kind == "quadratic":
            for key in ("n", "d"):
                v = _require(problem, key, "problem", errors, int)
                if v is not None and v < 1:
                    errors.append(f"problem.{key}: must be >= 1")
            seed = _require(problem, "seed", "problem", errors, int)
            if seed is not None and seed < 0:
                errors.append("problem.seed: must be >= 0")
            spread = _require(problem, "condition_spread", "problem", errors, (int, float))
            if spread is not None and spread < 1:
                errors.append("problem.condition_spread: must be >= 1")
        elif kind == "svmlight":
            _require(problem, "path", "problem", errors, str)
            v = _require(problem, "n", "problem", errors, int)
            if v is not None and v < 1:
                errors.append("problem.n: must be >= 1")
        elif kind is not None:
            errors.append(f"problem.type: unknown type {kind!r}")
        if not errors:
            try:
                n, d, q = _problem_dims(problem)
            except (ValueError, OSError) as exc:
                errors.append(f"problem: {exc}")

    topo = _require(raw, "topology", "spec", errors, dict)
    if topo is not None:
        t_kind = _require(topo, "type", "topology", errors, str)
        if t_kind is not None and t_kind != "ring_chords":
            errors.append(f"topology.type: unknown type {t_kind!r}")
        span = _require(topo, "chord_span", "topology", errors, int)
        if span is not None and n is not None and not (1 <= span and n > 2 * span):
            errors.append(
                f"topology.chord_span: need 1 <= chord_span and n > 2*chord_span (n={n})"
            )
        if "iota" in topo:
            if not isinstance(topo["iota"], (int, float)) or topo["iota"] <= 2 * (span or 0):
                errors.append("topology.iota: must exceed the maximum degree 2*chord_span")

    run_block = _require(raw, "run", "spec", errors, dict)
    if run_block is not None:
        alpha = _require(run_block, "alpha", "run", errors, (int, float))
        if alpha is not None and alpha <= 0:
            errors.append("run.alpha: must be positive")
        beta = _require(run_block, "beta", "run", errors, (int, float))
        if beta is not None and not 0 < beta < 1:
            errors.append("run.beta: must be in (0, 1)")
        gamma = _require(run_block, "gamma", "run", errors, (int, float, str))
        if isinstance(gamma, str) and gamma != "auto":
            errors.append('run.gamma: must be a positive number or "auto"')
        if isinstance(gamma, (int, float)) and gamma <= 0:
            errors.append("run.gamma: must be positive")
        T = _require(run_block, "T", "run", errors, int)
        if T is not None and T < 1:
            errors.append("run.T: must be >= 1")
        G = _require(run_block, "G", "run", errors, (int, float))
        if G is not None and G <= 0:
            errors.append("run.G: must be positive")
        if "record_stride" in run_block and (
            not isinstance(run_block["record_stride"], int) or run_block["record_stride"] < 1
        ):
            errors.append("run.record_stride: must be an integer >= 1")

    sweep = _require(raw, "sweep", "spec", errors, dict)
    p_values = kd_values = None
    if sweep is not None:
        p_values = _require(sweep, "p", "sweep", errors, list)
        if p_values is not None:
            if not p_values:
                errors.append("sweep.p: must be non-empty")
            for idx, p in enumerate(p_values):
                if not isinstance(p, (int, float)) or not 0.5 <= p <= 1:
                    errors.append(f"sweep.p[{idx}]: must be in [0.5, 1]")
        kd_values = _require(sweep, "k_over_d", "sweep", errors, list)
        if kd_values is not None:
            if not kd_values:
                errors.append("sweep.k_over_d: must be non-empty")
            for idx, v in enumerate(kd_values):
                if not isinstance(v, (int, float)) or not 0 < v <= 1:
                    errors.append(f"sweep.k_over_d[{idx}]: must be in (0, 1]")
                elif d is not None:
                    k = round(v * d)
                    if abs(v * d - k) > 1e-9 or not 1 <= k <= d:
                        errors.append(
                            f"sweep.k_over_d[{idx}]: {v} does not give an integer "
                            f"coordinate count for d={d}"
                        )

    privacy = _require(raw, "privacy", "spec", errors, dict)
    if privacy is not None:
        has_sigma = "sigma" in privacy
        has_eps = "epsilons" in privacy
        if has_sigma == has_eps:
            errors.append('privacy: give exactly one of "sigma" or "epsilons"+"delta0"')
        elif has_sigma:
            if not isinstance(privacy["sigma"], (int, float)) or privacy["sigma"] < 0:
                errors.append("privacy.sigma: must be nonnegative")
        else:
            eps_list = privacy["epsilons"]
            delta0 = _require(privacy, "delta0", "privacy", errors, (int, float))
            if not isinstance(eps_list, list) or not eps_list:
                errors.append("privacy.epsilons: must be a non-empty list")
                eps_list = []
            for idx, e in enumerate(eps_list):
                if not isinstance(e, (int, float)) or not 0 < e <= 1:
                    errors.append(f"privacy.epsilons[{idx}]: must be in (0, 1]")
            if delta0 is not None and not 0 < delta0 <= 1:
                errors.append("privacy.delta0: must be in (0, 1]")
            # calibration side condition for every sweep combination
            if (
                not errors
                and q is not None
                and run_block is not None
                and p_values is not None
            ):
                T = run_block.get("T")
                for ei, e in enumerate(eps_list):
                    for pi, p in enumerate(p_values):
                        need = q * q * e * e / (4.0 * p * p)
                        if T < need:
                            errors.append(
                                f"privacy.epsilons[{ei}] with sweep.p[{pi}]: "
                                f"run.T={T} below the admissible minimum "
                                f"{math.ceil(need)}"
                            )

    seeds = _require(raw, "seeds", "spec", errors, list)
    if seeds is not None:
        if not seeds:
            errors.append("seeds: must be non-empty")
        for idx, s in enumerate(seeds):
            if not isinstance(s, int) or s < 0:
                errors.append(f"seeds[{idx}]: must be a nonnegative integer")

    if errors:
        raise SpecError("invalid spec:\n  " + "\n  ".join(errors))
    return raw


# Per-process cache: problems and their reference solutions are deterministic
# functions of the problem spec, so repeated (sweep point, seed) jobs reuse them.
_PROBLEM_CACHE: dict[str, tuple[object, np.ndarray, float]] = {}


def _cached_problem(problem_spec: dict):
    key = json.dumps(problem_spec, sort_keys=True)
    if key not in _PROBLEM_CACHE:
        problem = build_problem(problem_spec)
        x_star, f_star = problems.solve_reference(problem)
        _PROBLEM_CACHE[key] = (problem, x_star, f_star)
    return _PROBLEM_CACHE[key]


def build_problem(problem_spec: dict):
    kind = problem_spec["type"]
    if kind == "synthetic_logistic":
        data = problems.synthetic_logistic_data(
            n=problem_spec["n"],
            q=problem_spec["q"],
            d=problem_spec["d"],
            margin=float(problem_spec["margin"]),
            seed=problem_spec["seed"],
        )
        return problems.LogisticProblem(data)
    if kind == "quadratic":
        return problems.quadratic_problem(
            n=problem_spec["n"],
            d=problem_spec["d"],
            condition_spread=float(problem_spec["condition_spread"]),
            seed=problem_spec["seed"],
            shared_hessian=bool(problem_spec.get("shared_hessian", False)),
        )
    if kind == "svmlight":
        data = problems.load_svmlight(problem_spec["path"], n_agents=problem_spec["n"])
        return problems.LogisticProblem(data)
    raise SpecError(f"unknown problem type {kind!r}")


def build_topology(topo_spec: dict, n: int) -> tuple[Topology, WeightMatrix]:
    topo = ring_chords(n, topo_spec["chord_span"])
    weights = laplacian_weights(topo, topo_spec.get("iota"))
    return topo, weights


def topology_hash(topo: Topology) -> str:
    return hashlib.sha256(topo.to_edgelist().encode()).hexdigest()


def sweep_points(raw: dict) -> list[tuple[float, float, float | None]]:
    """Sorted (p, k_over_d, epsilon-or-None) combinations."""
    privacy = raw["privacy"]
    eps_axis: list[float | None]
    if "epsilons" in privacy:
        eps_axis = sorted(float(e) for e in privacy["epsilons"])
    else:
        eps_axis = [None]
    points = []
    for p in sorted(float(v) for v in raw["sweep"]["p"]):
        for kd in sorted(float(v) for v in raw["sweep"]["k_over_d"]):
            for eps in eps_axis:
                points.append((p, kd, eps))
    return points


def _job_tag(p: float, kd: float, eps: float | None, seed: int) -> str:
    eps_part = "none" if eps is None else f"{eps:g}"
    return f"p{p:g}_kd{kd:g}_eps{eps_part}_seed{seed}"


def _run_job(payload: dict) -> dict:
    """Execute one (sweep point, seed) run; module-level for process pools."""
    raw = payload["spec"]
    p, kd, eps, seed = payload["p"], payload["kd"], payload["eps"], payload["seed"]
    stride = payload["stride"]

    problem, x_star, f_star = _cached_problem(raw["problem"])
    topo, weights = build_topology(raw["topology"], problem.n)
    d = problem.dim
    k = round(kd * d)
    run_block = raw["run"]

    gamma = run_block["gamma"]
    if gamma == "auto":
        gamma = recommended_gamma(weights.rho, weights.phi, p, k, d)

    budget = None
    ledger = None
    if eps is not None:
        budget = PrivacyBudget.calibrated(
            epsilon=eps,
            delta0=float(raw["privacy"]["delta0"]),
            T=run_block["T"],
            p=p,
            q=problem.q,
            k=k,
            d=d,
            G=float(run_block["G"]),
        )
        ledger = verify_budget(budget)
        sigma = budget.sigma
    else:
        sigma = float(raw["privacy"]["sigma"])

    config = RunConfig(
        alpha=float(run_block["alpha"]),
        gamma=float(gamma),
        beta=float(run_block["beta"]),
        p=p,
        k=k,
        T=run_block["T"],
        sigma=sigma,
        G=float(run_block["G"]),
        seed=seed,
        record_stride=stride if stride is not None else run_block.get("record_stride", 1),
    )

    metrics = run(problem, topo, weights, config, f_star=f_star)

    varsigma_sq = problem.gradient_variance(x_star)
    bound_block = _bound_block(problem, weights, config, f_star, float(np.max(varsigma_sq)))
    manifest = {
        "problem": raw["problem"],
        "topology": {**raw["topology"], "n": problem.n},
        "topology_hash": topology_hash(topo),
        "config": config.to_dict(),
        "f_star": f_star,
        "privacy": (
            {"epsilon": eps, "delta0": raw["privacy"]["delta0"], "sigma": sigma,
             "ledger": ledger.to_dict()}
            if eps is not None
            else {"sigma": sigma}
        ),
        "bounds": bound_block,
        "empirical": {
            "final_suboptimality": float(metrics.suboptimality[-1]),
            "time_avg_grad_norm_sq": metrics.time_avg_grad_norm_sq(),
            "max_consensus_error": float(np.max(metrics.consensus_error)),
            "max_momentum_sq_mean": float(np.max(metrics.momentum_sq_mean)),
            "total_bytes": metrics.total_bytes,
            "varsigma_sq_max": float(np.max(varsigma_sq)),
            "clipped_coordinate_fraction": metrics.clipped_fraction,
        },
    }

    tag = _job_tag(p, kd, eps, seed)
    run_dir = Path(payload["out"]) / "runs" / tag
    run_dir.mkdir(parents=True, exist_ok=True)
    metrics.to_csv(run_dir / "metrics.csv")
    (run_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )

    return {
        "tag": tag,
        "p": p,
        "kd": kd,
        "eps": eps,
        "seed": seed,
        "sigma": sigma,
        "util_rate": p * k / d,
        "final_subopt": float(metrics.suboptimality[-1]),
        "grad_norm_avg": metrics.time_avg_grad_norm_sq(),
        "total_bytes": metrics.total_bytes,
        "eps_tilde": None if ledger is None else ledger.composed_eps,
        "delta_tilde": None if ledger is None else ledger.composed_delta,
        "iters": metrics.iters.tolist(),
        "subopt_curve": metrics.suboptimality.tolist(),
    }


def _bound_block(problem, weights, config: RunConfig, f_star: float, varsigma_sq: float) -> dict:
    L = problem.smoothness()
    x0 = np.zeros(problem.dim) if config.x0 is None else np.asarray(config.x0)
    inputs = dict(
        alpha=config.alpha,
        beta=config.beta,
        gamma=config.gamma,
        p=config.p,
        k=config.k,
        d=problem.dim,
        n=problem.n,
        T=config.T,
        sigma=config.sigma,
        G=config.G,
        varsigma=math.sqrt(varsigma_sq),
        L=L,
        rho=weights.rho,
        phi=weights.phi,
        f0_gap=problem.loss(x0) - f_star,
    )
    block = {
        "rho": weights.rho,
        "phi": weights.phi,
        "L": L,
        "c": bounds_mod.consensus_contraction(weights.rho, config.p, config.k, problem.dim),
        "momentum_bound": bounds_mod.momentum_bound(
            config.p, config.G, config.sigma, problem.dim, config.beta
        ),
        "consensus_bound": bounds_mod.consensus_bound(
            config.alpha, config.p, config.G, config.sigma, problem.dim,
            problem.n, config.beta, weights.rho, config.k,
        ),
    }
    try:
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            block["theorem2_bound"] = bounds_mod.theorem2_bound(bounds_mod.BoundInputs(**inputs))
    except ValueError:
        block["theorem2_bound"] = None  # step size outside the bound's validity range
    return block


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_experiment(
    raw: dict,
    out_dir: str | Path | None = None,
    stride: int | None = None,
    workers: int = 1,
) -> Path:
    """Execute the full sweep; returns the artifact directory.

    Raises SpecError on validation problems and RuntimeError if any job
    fails (after writing a partial-failure report).
    """
    validate_spec(raw)
    out = Path(out_dir if out_dir is not None else raw.get("out", "results"))
    out.mkdir(parents=True, exist_ok=True)

    jobs = [
        {"spec": raw, "p": p, "kd": kd, "eps": eps, "seed": seed,
         "out": str(out), "stride": stride}
        for (p, kd, eps) in sweep_points(raw)
        for seed in sorted(raw["seeds"])
    ]

    results: dict[str, dict] = {}
    failures: list[tuple[str, str]] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_job_safe, jobs))
    else:
        outcomes = [_run_job_safe(job) for job in jobs]
    for job, outcome in zip(jobs, outcomes):
        tag = _job_tag(job["p"], job["kd"], job["eps"], job["seed"])
        if "error" in outcome:
            failures.append((tag, outcome["error"]))
        else:
            results[tag] = outcome

    if failures:
        report = "\n\n".join(f"{tag}:\n{err}" for tag, err in failures)
        (out / "failures.txt").write_text(report + "\n")
        raise RuntimeError(
            f"{len(failures)} of {len(jobs)} runs failed; see {out / 'failures.txt'}"
        )

    agg_rows = _aggregate(raw, results, out)
    _render_figures(raw, results, agg_rows, out)
    return out


def _run_job_safe(payload: dict) -> dict:
    try:
        return _run_job(payload)
    except Exception:
        return {"error": traceback.format_exc()}


def _aggregate(raw: dict, results: dict[str, dict], out: Path) -> list[dict]:
    seeds = sorted(raw["seeds"])
    rows = []
    for p, kd, eps in sweep_points(raw):
        group = [results[_job_tag(p, kd, eps, s)] for s in seeds]
        subopts = np.array([g["final_subopt"] for g in group])
        row = {
            "p": p,
            "k_over_d": kd,
            "epsilon": eps,
            "sigma": group[0]["sigma"],
            "util_rate": group[0]["util_rate"],
            "subopt_mean": float(np.mean(subopts)),
            "subopt_std": float(np.std(subopts, ddof=1)) if len(subopts) > 1 else 0.0,
            "grad_norm_mean": float(np.mean([g["grad_norm_avg"] for g in group])),
            "bytes_mean": float(np.mean([g["total_bytes"] for g in group])),
            "eps_tilde": group[0]["eps_tilde"],
            "delta_tilde": group[0]["delta_tilde"],
        }
        rows.append(row)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(AGGREGATE_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[col]) for col in AGGREGATE_COLUMNS])
    (out / "aggregate.csv").write_text(buf.getvalue())
    return rows


def _render_figures(raw: dict, results: dict[str, dict], agg_rows: list[dict], out: Path):
    from . import plots  # deferred: keeps worker processes free of matplotlib

    seeds = sorted(raw["seeds"])
    curves = {}
    for p, kd, eps in sweep_points(raw):
        group = [results[_job_tag(p, kd, eps, s)] for s in seeds]
        iters = np.asarray(group[0]["iters"])
        mean_curve = np.mean([g["subopt_curve"] for g in group], axis=0)
        curves[(p, kd, math.nan if eps is None else eps)] = (iters, mean_curve)
    fig_dir = out / "figures"
    fig_dir.mkdir(exist_ok=True)
    plots.render_convergence(curves, fig_dir / "convergence.png")
    rows = [dict(row, epsilon=row["epsilon"]) for row in agg_rows]
    plots.render_tradeoff(rows, fig_dir / "tradeoff.png")


def budget_report(raw: dict) -> str:
    """Calibration and accounting report for every sweep point."""
    validate_spec(raw)
    privacy = raw["privacy"]
    if "epsilons" not in privacy:
        raise SpecError("budget report requires a calibration target (epsilons + delta0)")
    problem = build_problem(raw["problem"])
    d, q = problem.dim, problem.q
    T = raw["run"]["T"]
    G = float(raw["run"]["G"])
    delta0 = float(privacy["delta0"])

    lines = []
    for p, kd, eps in sweep_points(raw):
        k = round(kd * d)
        budget = PrivacyBudget.calibrated(
            epsilon=eps, delta0=delta0, T=T, p=p, q=q, k=k, d=d, G=G
        )
        ledger = verify_budget(budget)
        ratio = k * p * p / d
        lines.append(
            f"p={p:g} k/d={kd:g} epsilon={eps:g}: sigma={budget.sigma:.6g} "
            f"(noise variance ratio {ratio:g} vs full-communication baseline)"
        )
        lines.append(ledger.report().rstrip("\n"))
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def replay_manifest(manifest_path: str | Path) -> str:
    """Re-execute a run from its manifest; returns the metrics CSV text."""
    manifest = json.loads(Path(manifest_path).read_text())
    problem = build_problem(manifest["problem"])
    topo, weights = build_topology(manifest["topology"], problem.n)
    cfg_dict = dict(manifest["config"])
    x0 = cfg_dict.pop("x0")
    config = RunConfig(
        x0=None if x0 is None else np.asarray(x0, dtype=float), **cfg_dict
    )
    metrics = run(problem, topo, weights, config, f_star=manifest["f_star"])
    return metrics.to_csv_text()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dpgossip", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment sweep")
    p_run.add_argument("spec", help="path to the spec JSON file")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--stride", type=int, default=None, help="metric recording stride")
    p_run.add_argument("--workers", type=int, default=1, help="parallel run workers")

    p_budget = sub.add_parser("budget", help="print calibrated noise and ledger")
    p_budget.add_argument("spec")

    p_validate = sub.add_parser("validate", help="validate a spec file")
    p_validate.add_argument("spec")

    args = parser.parse_args(argv)
    try:
        raw = load_spec(args.spec)
        if args.command == "validate":
            validate_spec(raw)
            n_jobs = len(sweep_points(raw)) * len(raw["seeds"])
            print(f"spec OK: {n_jobs} runs ({len(sweep_points(raw))} sweep points)")
            return 0
        if args.command == "budget":
            print(budget_report(raw), end="")
            return 0
        out = run_experiment(raw, out_dir=args.out, stride=args.stride, workers=args.workers)
        print(f"wrote {out / 'aggregate.csv'}")
        return 0
    except (SpecError, BudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
