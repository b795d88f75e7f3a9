"""Command-line interface.

Subcommands: ``train`` (single run, writes a model file), ``sweep``
(replicated rate experiment, writes raw CSV plus a JSON summary),
``verify-bounds`` (inequality oracle table), ``kernel-check``
(Monte-Carlo kernel approximation diagnostics) and
``validate-schedule`` (step-size feasibility report).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bounds, features, harness, learner, rng, schedules, synthetic


def _add_common(parser: argparse.ArgumentParser, seed_default: int = 20250809):
    parser.add_argument("--seed", type=int, default=seed_default, help="master seed")
    parser.add_argument("--out", type=str, default=None, help="output path")
    parser.add_argument(
        "--threads", type=int, default=1, help="worker processes for independent cells"
    )


def _add_problem_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--gamma", type=float, default=0.5)
    parser.add_argument("--zeta", type=float, default=0.5)
    parser.add_argument("--R", type=float, default=1.0)
    parser.add_argument("--noise-std", type=float, default=0.1)
    parser.add_argument("--N", type=int, default=400)
    parser.add_argument("--g-mode", choices=synthetic.G_MODES, default="smooth")
    parser.add_argument(
        "--feature-map", choices=["spectral", "gaussian-rff"], default="spectral"
    )
    parser.add_argument("--rff-sigma", type=float, default=1.0)
    parser.add_argument("--rff-dim", type=int, default=1)
    parser.add_argument(
        "--schedule",
        choices=[
            "constant-capacity",
            "constant-independent",
            "constant-rkhs",
            "decaying",
            "regularized",
        ],
        default="constant-capacity",
    )
    parser.add_argument("--epsilon", type=float, default=0.05)
    parser.add_argument("--ref-c-gamma", type=float, default=1.0)
    parser.add_argument("--ref-kappa-sq", type=float, default=1.0)
    parser.add_argument("--risk", choices=["exact", "mc"], default="exact")
    parser.add_argument("--mc-points", type=int, default=100000)
    parser.add_argument("--config", type=str, default=None, help="JSON config file")


def _config_from_args(args, T_grid, replications) -> harness.ExperimentConfig:
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        config = harness.ExperimentConfig.from_dict(data)
        # flag overrides for seed only; other fields come from the file
        return harness.ExperimentConfig.from_dict(
            {**config.to_dict(), "master_seed": args.seed}
        )
    return harness.ExperimentConfig(
        gamma=args.gamma,
        zeta=args.zeta,
        R=args.R,
        noise_std=args.noise_std,
        N=args.N,
        g_mode=args.g_mode,
        feature_map=args.feature_map,
        rff_sigma=args.rff_sigma,
        rff_dim=args.rff_dim,
        schedule=args.schedule,
        epsilon=args.epsilon,
        ref_c_gamma=args.ref_c_gamma,
        ref_kappa_sq=args.ref_kappa_sq,
        T_grid=tuple(T_grid),
        replications=replications,
        master_seed=args.seed,
        risk_mode=args.risk,
        mc_points=args.mc_points,
        feature_cache=getattr(args, "feature_cache", True),
    )


def _cmd_train(args) -> int:
    config = _config_from_args(args, T_grid=[args.T], replications=1)
    problem = harness.build_problem(config)
    spec = harness.build_feature_spec(config, problem)
    schedule = harness.build_schedule(config, args.T)
    cell = harness.cell_seed(config.master_seed, args.T, 0)
    xs, ys = synthetic.sample(problem, args.T, rng.derive_seed(cell, 1))
    risk_fn = None
    if config.feature_map == "spectral":
        risk_fn = lambda m: synthetic.excess_risk_exact(
            synthetic.project_to_basis(m, problem), problem
        )
    model, record = learner.train(
        zip(xs, ys),
        schedule,
        spec,
        rng.derive_seed(cell, 2),
        checkpoints=learner.geometric_checkpoints(args.T),
        feature_cache=args.feature_cache,
        risk_fn=risk_fn,
    )
    out = args.out or "model.json"
    with open(out, "wb") as fh:
        fh.write(learner.serialize(model))
    print(f"wrote model with {model.steps_taken} coefficients to {out}")
    if args.trajectory:
        with open(args.trajectory, "w", newline="\n") as fh:
            fh.write("t,excess_risk,wall_time\n")
            for p in record.points:
                risk = "" if p.excess_risk is None else repr(p.excess_risk)
                fh.write(f"{p.t},{risk},{p.wall_time!r}\n")
        print(f"wrote trajectory ({len(record.points)} checkpoints) to {args.trajectory}")
    return 0


def _cmd_sweep(args) -> int:
    config = _config_from_args(args, args.T_grid, args.replications)
    result = harness.sweep(config, threads=args.threads)
    out_dir = args.out or "sweep-out"
    csv_path, json_path = harness.write_outputs(result, out_dir, tolerance=args.tolerance)
    print(f"wrote {csv_path} and {json_path}")
    if result.rate is not None:
        exponent = harness.theoretical_exponent(config)
        verdict = harness.check_theorem(result.rate, exponent, args.tolerance)
        status = "PASS" if verdict.passes else "FAIL"
        print(
            f"fitted slope {verdict.slope:+.4f} vs guaranteed exponent "
            f"{verdict.exponent:+.4f} (tolerance {verdict.tolerance:.2f}): {status}"
        )
        return 0 if verdict.passes else 1
    return 0


def _cmd_verify_bounds(args) -> int:
    reports = bounds.run_suite(draws=args.draws, seed=args.seed)
    header = f"{'name':<24} {'exact':>14} {'bound':>14} {'slack':>14} {'pass':>5}"
    lines = [header, "-" * len(header)]
    for r in reports:
        lines.append(
            f"{r.name:<24} {r.exact:>14.6g} {r.bound:>14.6g} {r.slack:>14.6g} "
            f"{'yes' if r.passed else 'NO':>5}"
        )
    table = "\n".join(lines)
    print(table)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write("name,exact,bound,slack,pass\n")
            for r in reports:
                fh.write(f"{r.name},{r.exact!r},{r.bound!r},{r.slack!r},{int(r.passed)}\n")
        print(f"wrote {args.out}")
    return 0 if all(r.passed for r in reports) else 1


def _cmd_kernel_check(args) -> int:
    spec = features.GaussianRFF(sigma=args.sigma, dim=args.dim)
    limit = 3.0 * spec.kappa_sq / np.sqrt(args.m)
    within = 0
    rows = []
    for pair in range(args.pairs):
        pair_seed = rng.derive_seed(args.seed, pair + 1)
        x = rng.uniforms(rng.derive_seed(pair_seed, 1), args.dim)
        xp = rng.uniforms(rng.derive_seed(pair_seed, 2), args.dim)
        exact = features.kernel_exact(spec, x, xp)
        mc = features.kernel_mc(spec, x, xp, args.m, rng.derive_seed(pair_seed, 3))
        err = abs(mc - exact)
        within += err <= limit
        rows.append((pair, exact, mc, err))
    frac = within / args.pairs
    print(
        f"gaussian-rff sigma={args.sigma} dim={args.dim}: {within}/{args.pairs} pairs "
        f"within 3*kappa_sq/sqrt(m) = {limit:.6g} at m={args.m} ({100*frac:.1f}%)"
    )
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write("pair,exact,mc,abs_err\n")
            for pair, exact, mc, err in rows:
                fh.write(f"{pair},{exact!r},{mc!r},{err!r}\n")
        print(f"wrote {args.out}")
    return 0 if frac >= 0.95 else 1


def _cmd_validate_schedule(args) -> int:
    if args.preset == "custom":
        sched = schedules.Schedule(
            eta1=args.eta1, theta=args.theta, horizon_T=args.T, lam=args.lam
        )
    else:
        config = harness.ExperimentConfig(
            gamma=args.gamma,
            zeta=args.zeta,
            schedule=args.preset,
            epsilon=args.epsilon,
            ref_c_gamma=args.c_gamma,
            ref_kappa_sq=args.kappa_sq,
            T_grid=(args.T,),
            replications=1,
        )
        sched = harness.build_schedule(config, args.T)
    diag = schedules.validate(sched, args.gamma, args.c_gamma, args.kappa_sq)
    print(
        f"schedule {sched.provenance}: eta1={sched.eta1!r} theta={sched.theta!r} "
        f"lambda={sched.lam!r} T={sched.horizon_T}"
    )
    ctg = "" if diag.c_theta_gamma is None else f" c_theta_gamma={diag.c_theta_gamma:.6g}"
    print(
        f"condition {diag.condition}: lhs={diag.lhs:.6g} rhs={diag.rhs:.6g} "
        f"slack={diag.slack:.6g}{ctg} -> {'PASS' if diag.passes else 'FAIL'}"
    )
    return 0 if diag.passes else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dskl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one model and write it to disk")
    _add_problem_flags(p_train)
    p_train.add_argument("--T", type=int, default=1024, help="number of steps")
    p_train.add_argument(
        "--feature-cache",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="cache realized features during training (default: faithful replay)",
    )
    p_train.add_argument("--trajectory", type=str, default=None, help="checkpoint CSV path")
    _add_common(p_train)
    p_train.set_defaults(func=_cmd_train)

    p_sweep = sub.add_parser("sweep", help="replicated rate experiment")
    _add_problem_flags(p_sweep)
    p_sweep.add_argument(
        "--T-grid", type=int, nargs="+", default=harness.DEFAULT_T_GRID
    )
    p_sweep.add_argument("--replications", type=int, default=50)
    p_sweep.add_argument("--tolerance", type=float, default=0.15)
    p_sweep.add_argument(
        "--feature-cache",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="cache realized features during training",
    )
    _add_common(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_bounds = sub.add_parser("verify-bounds", help="inequality oracle table")
    p_bounds.add_argument("--draws", type=int, default=200)
    _add_common(p_bounds, seed_default=20240801)
    p_bounds.set_defaults(func=_cmd_verify_bounds)

    p_kernel = sub.add_parser("kernel-check", help="Monte-Carlo kernel diagnostics")
    p_kernel.add_argument("--sigma", type=float, default=1.0)
    p_kernel.add_argument("--dim", type=int, default=1)
    p_kernel.add_argument("--pairs", type=int, default=100)
    p_kernel.add_argument("--m", type=int, default=10000)
    _add_common(p_kernel)
    p_kernel.set_defaults(func=_cmd_kernel_check)

    p_val = sub.add_parser("validate-schedule", help="step-size feasibility report")
    p_val.add_argument(
        "--preset",
        choices=[
            "constant-capacity",
            "constant-independent",
            "constant-rkhs",
            "decaying",
            "regularized",
            "custom",
        ],
        default="constant-capacity",
    )
    p_val.add_argument("--zeta", type=float, default=0.5)
    p_val.add_argument("--gamma", type=float, default=0.5)
    p_val.add_argument("--c-gamma", type=float, default=1.0)
    p_val.add_argument("--kappa-sq", type=float, default=1.0)
    p_val.add_argument("--T", type=int, default=4096)
    p_val.add_argument("--epsilon", type=float, default=0.05)
    p_val.add_argument("--eta1", type=float, default=0.01, help="custom preset only")
    p_val.add_argument("--theta", type=float, default=0.0, help="custom preset only")
    p_val.add_argument("--lam", type=float, default=0.0, help="custom preset only")
    _add_common(p_val)
    p_val.set_defaults(func=_cmd_validate_schedule)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
