"""Experiment orchestration: replicated sweeps over the horizon and rate fits.

A sweep trains one model per (horizon, replication) cell with seeds
derived from (master seed, T, rep), evaluates its excess risk (exact
spectral projection or Monte-Carlo), aggregates per-horizon means, and
fits the decay exponent of the mean risk by least squares on log-log
axes.  Cell results are keyed by (T, rep), so output files are byte
identical regardless of execution order or worker count.

Schedule presets in experiments are evaluated at reference constants
(by default c_gamma = kappa_sq = 1) rather than at the synthetic
problem's own constants: the guaranteed decay exponent does not depend
on the step-size prefactor, while the conservative exact constants
would leave horizons up to 2**13 still in the pre-asymptotic regime.
The summary reports the feasibility diagnostics under both the
reference and the true problem constants.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import features as ft
from . import learner, rng, schedules, synthetic

DEFAULT_T_GRID = [256, 512, 1024, 2048, 4096, 8192]


@dataclass(frozen=True)
class ExperimentConfig:
    gamma: float = 0.5
    zeta: float = 0.5
    R: float = 1.0
    noise_std: float = 0.1
    N: int = 400
    g_mode: str = "smooth"
    feature_map: str = "spectral"  # "spectral" | "gaussian-rff"
    rff_sigma: float = 1.0
    rff_dim: int = 1
    schedule: str = "constant-capacity"
    epsilon: float = 0.05  # regularized preset only
    ref_c_gamma: float = 1.0
    ref_kappa_sq: float = 1.0
    T_grid: tuple = tuple(DEFAULT_T_GRID)
    replications: int = 50
    master_seed: int = 20250809
    risk_mode: str = "exact"  # "exact" | "mc"
    mc_points: int = 100000
    feature_cache: bool = True

    def __post_init__(self):
        object.__setattr__(self, "T_grid", tuple(int(t) for t in self.T_grid))
        if list(self.T_grid) != sorted(set(self.T_grid)):
            raise ValueError("T_grid must be strictly increasing")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.feature_map not in ("spectral", "gaussian-rff"):
            raise ValueError(f"unknown feature_map: {self.feature_map!r}")
        if self.risk_mode not in ("exact", "mc"):
            raise ValueError(f"unknown risk_mode: {self.risk_mode!r}")
        if self.feature_map == "gaussian-rff" and self.risk_mode == "exact":
            raise ValueError("exact risk requires the spectral feature map")

    def to_dict(self) -> dict:
        return {
            "problem": {
                "gamma": self.gamma,
                "zeta": self.zeta,
                "R": self.R,
                "noise_std": self.noise_std,
                "N": self.N,
                "g_mode": self.g_mode,
            },
            "feature_map": {
                "variant": self.feature_map,
                "sigma": self.rff_sigma,
                "dim": self.rff_dim,
            },
            "schedule": {
                "preset": self.schedule,
                "epsilon": self.epsilon,
                "ref_c_gamma": self.ref_c_gamma,
                "ref_kappa_sq": self.ref_kappa_sq,
            },
            "T_grid": list(self.T_grid),
            "replications": self.replications,
            "master_seed": self.master_seed,
            "risk": {"mode": self.risk_mode, "mc_points": self.mc_points},
            "feature_cache": self.feature_cache,
        }

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        prob = data.get("problem", {})
        fmap = data.get("feature_map", {})
        sched = data.get("schedule", {})
        risk = data.get("risk", {})
        return ExperimentConfig(
            gamma=float(prob.get("gamma", 0.5)),
            zeta=float(prob.get("zeta", 0.5)),
            R=float(prob.get("R", 1.0)),
            noise_std=float(prob.get("noise_std", 0.1)),
            N=int(prob.get("N", 400)),
            g_mode=str(prob.get("g_mode", "smooth")),
            feature_map=str(fmap.get("variant", "spectral")),
            rff_sigma=float(fmap.get("sigma", 1.0)),
            rff_dim=int(fmap.get("dim", 1)),
            schedule=str(sched.get("preset", "constant-capacity")),
            epsilon=float(sched.get("epsilon", 0.05)),
            ref_c_gamma=float(sched.get("ref_c_gamma", 1.0)),
            ref_kappa_sq=float(sched.get("ref_kappa_sq", 1.0)),
            T_grid=tuple(data.get("T_grid", DEFAULT_T_GRID)),
            replications=int(data.get("replications", 50)),
            master_seed=int(data.get("master_seed", 20250809)),
            risk_mode=str(risk.get("mode", "exact")),
            mc_points=int(risk.get("mc_points", 100000)),
            feature_cache=bool(data.get("feature_cache", True)),
        )


@dataclass(frozen=True)
class PerTStats:
    T: int
    mean: float
    stderr: float
    reps: int


@dataclass(frozen=True)
class RateEstimate:
    """OLS fit of ln(mean excess risk) against ln T."""

    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float
    table: tuple

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_stderr": self.slope_stderr,
            "r_squared": self.r_squared,
            "per_T": [
                {"T": s.T, "mean": s.mean, "stderr": s.stderr, "reps": s.reps}
                for s in self.table
            ],
        }


@dataclass(frozen=True)
class TheoremCheck:
    passes: bool
    slope: float
    exponent: float
    tolerance: float
    threshold: float


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list = field(default_factory=list)  # (T, rep, risk)
    per_T: list = field(default_factory=list)
    rate: RateEstimate | None = None


def build_problem(config: ExperimentConfig) -> synthetic.SpectralProblem:
    return synthetic.make_problem(
        gamma=config.gamma,
        zeta=config.zeta,
        R=config.R,
        noise_std=config.noise_std,
        N=config.N,
        g_mode=config.g_mode,
    )


def build_feature_spec(config: ExperimentConfig, problem) -> ft.FeatureMapSpec:
    if config.feature_map == "spectral":
        return ft.SpectralFeatures(problem.operator)
    return ft.GaussianRFF(sigma=config.rff_sigma, dim=config.rff_dim)


def build_schedule(config: ExperimentConfig, T: int) -> schedules.Schedule:
    """Preset for one horizon, evaluated at the reference constants."""
    zeta, gamma = config.zeta, config.gamma
    c_ref, k_ref = config.ref_c_gamma, config.ref_kappa_sq
    name = config.schedule
    if name == "constant-capacity":
        return schedules.make_constant_capacity(zeta, gamma, c_ref, k_ref, T)
    if name == "constant-independent":
        return schedules.make_constant_independent(zeta, k_ref, T)
    if name == "constant-rkhs":
        return schedules.make_constant_rkhs(k_ref, T)
    if name == "decaying":
        return schedules.make_decaying(zeta, gamma, c_ref, k_ref, T)
    if name == "regularized":
        return schedules.make_regularized(zeta, gamma, c_ref, k_ref, T, config.epsilon)
    raise ValueError(f"unknown schedule preset: {name!r}")


def theoretical_exponent(config: ExperimentConfig) -> float:
    """Guaranteed decay exponent of the mean excess risk (log factor aside)."""
    zeta, gamma = config.zeta, config.gamma
    name = config.schedule
    if name == "constant-capacity":
        return -2.0 * zeta / (2.0 * zeta + gamma + 1.0)
    if name in ("constant-independent", "constant-rkhs"):
        z = 0.5 if name == "constant-rkhs" else zeta
        return -z / (z + 1.0)
    if name == "decaying":
        if 2.0 * zeta < 1.0 - gamma:
            return -2.0 * zeta / (2.0 * zeta + gamma + 1.0)
        return (gamma - 1.0) / 2.0
    if name == "regularized":
        return -2.0 * zeta / (2.0 * zeta + gamma + 1.0) + config.epsilon
    raise ValueError(f"unknown schedule preset: {name!r}")


def cell_seed(master_seed: int, T: int, rep: int) -> int:
    """Stream-disjoint seed for one (horizon, replication) cell."""
    return rng.derive_seed(rng.derive_seed(master_seed, T), rep)


def run_replication(config: ExperimentConfig, T: int, rep: int, problem=None) -> float:
    """Train one cell and return its excess risk (deterministic)."""
    if problem is None:
        problem = build_problem(config)
    spec = build_feature_spec(config, problem)
    schedule = build_schedule(config, T)
    cell = cell_seed(config.master_seed, T, rep)
    sample_seed = rng.derive_seed(cell, 1)
    model_seed = rng.derive_seed(cell, 2)
    xs, ys = synthetic.sample(problem, T, sample_seed)
    model, _ = learner.train(
        zip(xs, ys), schedule, spec, model_seed, feature_cache=config.feature_cache
    )
    if config.risk_mode == "exact":
        coeffs = synthetic.project_to_basis(model, problem)
        return synthetic.excess_risk_exact(coeffs, problem)
    est, _ = synthetic.excess_risk_mc(
        model, problem, config.mc_points, rng.derive_seed(cell, 3)
    )
    return est


def _cell_job(args):
    config_dict, T, rep = args
    config = ExperimentConfig.from_dict(config_dict)
    return (T, rep, run_replication(config, T, rep))


def sweep(config: ExperimentConfig, threads: int = 1) -> SweepResult:
    """Run all (T, rep) cells, aggregate per-T stats and fit the rate.

    Results are keyed by cell, so the output is identical for any
    ``threads`` value; a failing cell aborts with its seed reported.
    """
    cells = [(T, rep) for T in config.T_grid for rep in range(config.replications)]
    results: dict = {}
    if threads > 1:
        jobs = [(config.to_dict(), T, rep) for (T, rep) in cells]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for T, rep, risk in pool.map(_cell_job, jobs):
                results[(T, rep)] = risk
    else:
        problem = build_problem(config)
        for T, rep in cells:
            try:
                results[(T, rep)] = run_replication(config, T, rep, problem=problem)
            except Exception as exc:
                raise RuntimeError(
                    f"cell (T={T}, rep={rep}, seed={cell_seed(config.master_seed, T, rep)})"
                    f" failed: {exc}"
                ) from exc

    rows = [(T, rep, results[(T, rep)]) for (T, rep) in cells]
    per_T = []
    for T in config.T_grid:
        risks = np.array([results[(T, rep)] for rep in range(config.replications)])
        se = float(np.std(risks, ddof=1) / np.sqrt(risks.size)) if risks.size > 1 else 0.0
        per_T.append(PerTStats(T=T, mean=float(risks.mean()), stderr=se, reps=risks.size))
    rate = fit_rate(per_T) if len(per_T) >= 3 else None
    return SweepResult(config=config, rows=rows, per_T=per_T, rate=rate)


def fit_rate(per_T) -> RateEstimate:
    """Least squares of ln(mean risk) on ln T, with the slope's stderr."""
    stats = list(per_T)
    if len(stats) < 3:
        raise ValueError("rate fit needs at least 3 horizon points")
    means = np.array([s.mean for s in stats])
    if np.any(means <= 0):
        raise ValueError("rate fit requires positive mean risks")
    x = np.log(np.array([float(s.T) for s in stats]))
    y = np.log(means)
    n = x.size
    xbar = x.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    slope = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    ssr = float(np.sum(resid**2))
    sst = float(np.sum((y - y.mean()) ** 2))
    dof = max(n - 2, 1)
    slope_stderr = float(np.sqrt(ssr / dof / sxx))
    r_squared = 1.0 - ssr / sst if sst > 0 else 1.0
    return RateEstimate(
        slope=slope,
        intercept=intercept,
        slope_stderr=slope_stderr,
        r_squared=r_squared,
        table=tuple(stats),
    )


def check_theorem(estimate: RateEstimate, exponent: float, tolerance: float = 0.15) -> TheoremCheck:
    """Pass when the fitted slope is at most exponent + tolerance.

    The guarantees are upper bounds: decaying faster than predicted
    must never fail the check.
    """
    threshold = exponent + tolerance
    return TheoremCheck(
        passes=bool(estimate.slope <= threshold),
        slope=estimate.slope,
        exponent=exponent,
        tolerance=tolerance,
        threshold=threshold,
    )


def write_outputs(result: SweepResult, out_dir: str, tolerance: float = 0.15):
    """Write raw cells (CSV) and the aggregate summary (JSON); returns paths.

    Floats are rendered in shortest round-trip form and rows in cell
    order, so re-running an identical config reproduces both files byte
    for byte.
    """
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "raw.csv")
    with open(csv_path, "w", newline="\n") as fh:
        fh.write("T,rep,risk\n")
        for T, rep, risk in result.rows:
            fh.write(f"{T},{rep},{risk!r}\n")

    config = result.config
    problem = build_problem(config)
    exponent = theoretical_exponent(config)
    summary = {
        "config": config.to_dict(),
        "truncation": {
            "N": config.N,
            "tail_fraction": synthetic.source_tail_fraction(
                config.gamma, config.zeta, config.N, config.g_mode
            ),
        },
        "problem_constants": {
            "kappa_sq": problem.operator.kappa_sq,
            "c_gamma": problem.c_gamma,
            "frho_norm_sq": problem.frho_norm_sq,
            "bayes_risk": problem.bayes_risk,
        },
        "per_T": [
            {"T": s.T, "mean": s.mean, "stderr": s.stderr, "reps": s.reps}
            for s in result.per_T
        ],
        "rate": result.rate.to_dict() if result.rate else None,
        "theoretical_exponent": exponent,
        "schedule_validation": _validation_block(config, problem),
    }
    if result.rate is not None:
        verdict = check_theorem(result.rate, exponent, tolerance)
        summary["verdict"] = {
            "passes": verdict.passes,
            "slope": verdict.slope,
            "exponent": verdict.exponent,
            "tolerance": verdict.tolerance,
            "threshold": verdict.threshold,
        }
    json_path = os.path.join(out_dir, "summary.json")
    with open(json_path, "w", newline="\n") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return csv_path, json_path


def _diag_dict(diag: schedules.ScheduleDiagnostics) -> dict:
    return {
        "passes": diag.passes,
        "condition": diag.condition,
        "lhs": diag.lhs,
        "rhs": diag.rhs,
        "slack": diag.slack,
        "c_theta_gamma": diag.c_theta_gamma,
    }


def _validation_block(config: ExperimentConfig, problem) -> list:
    block = []
    for T in config.T_grid:
        sched = build_schedule(config, T)
        block.append(
            {
                "T": T,
                "eta1": sched.eta1,
                "theta": sched.theta,
                "lambda": sched.lam,
                "reference_constants": _diag_dict(
                    schedules.validate(sched, config.gamma, config.ref_c_gamma, config.ref_kappa_sq)
                ),
                "problem_constants": _diag_dict(
                    schedules.validate(sched, config.gamma, problem.c_gamma, problem.operator.kappa_sq)
                ),
            }
        )
    return block
