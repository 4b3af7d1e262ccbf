"""Command-line interface: run, sweep, verify, instance-info.

Exit codes: 0 success, 2 configuration error (including environment
constraint violations, reported verbatim), 3 invariant-suite failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from banditlab import envs
from banditlab.config import (
    ConfigError,
    ExperimentConfig,
    load_config,
    resolve_instance,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.out is not None:
        cfg.out = args.out
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.jobs is not None:
        cfg.jobs = args.jobs
    return cfg


def _out_dir(cfg: ExperimentConfig, default: str) -> Path:
    return Path(cfg.out if cfg.out is not None else default)


def cmd_run(args) -> int:
    from banditlab.experiments import run_and_export

    cfg = _load(args)
    written = run_and_export(cfg, _out_dir(cfg, "runs"), figures=args.figures)
    for path in written:
        print(path)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from banditlab.experiments import run_sweep

    cfg = _load(args)
    if args.no_figures:
        cfg.figures = False
    out = run_sweep(cfg, _out_dir(cfg, "sweep"))
    for row in out.aggregate:
        print(f"T={row.T} mean_regret={row.mean:.6g} stderr={row.stderr:.3g} (n={row.runs})")
    if out.fit is not None:
        print(
            f"fit: alpha={out.fit.alpha:.4f} prefactor={out.fit.prefactor:.4g} "
            f"r2={out.fit.r2:.4f} points={len(out.fit.points)}"
        )
    else:
        print(f"fit refused: {out.fit_warning}")
    print(out.aggregate_csv)
    print(out.fit_json)
    for p in out.figure_paths:
        print(p)
    return EXIT_OK


def cmd_verify(args) -> int:
    from banditlab.verify import run_checks

    results = run_checks(level=args.level)
    width = max(len(r.name) for r in results)
    failures = 0
    for r in results:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  [{r.seconds:6.2f}s]  {r.detail}")
        failures += 0 if r.passed else 1
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return EXIT_OK if failures == 0 else EXIT_INVARIANT


def _print_instance_info(cfg: ExperimentConfig, master_seed: int) -> None:
    import numpy as np

    T = cfg.horizons[0] if cfg.horizons else int(cfg.instance.get("T", 0))
    inst = resolve_instance(cfg.instance, T)
    inst = inst.materialize(np.random.default_rng(master_seed))
    print(f"instance: {inst.name}")
    if isinstance(inst, envs.EpochAdversaryInstance):
        eps, d, D = inst.epsilon, inst.epoch_length, inst.epoch_count
        budget = 8 * eps * eps * d
        tv = eps * math.sqrt(2 * d)
        print(f"epsilon = {eps!r}")
        print(f"d = {d}")
        print(f"D = {D}")
        print(f"8*eps^2*d = {budget!r}")
        print(f"check epsilon <= 1/4: {'pass' if eps <= 0.25 else 'FAIL'}")
        print(f"check 8*eps^2*d <= 1: {'pass' if budget <= 1 + 1e-12 else 'FAIL'}")
        print(f"check eps*sqrt(2*d) <= 1/2: {'pass' if tv <= 0.5 + 1e-12 else 'FAIL'}")
        print(f"I0 = {sorted(n + 1 for n in inst.I0)}")
        print(f"I1 = {sorted(n + 1 for n in inst.I1)}")
    stats = envs.global_stats(inst)
    means = ", ".join(repr(float(v)) for v in stats.global_means)
    gaps = ", ".join(repr(float(v)) for v in stats.gaps)
    print(f"global means = [{means}]")
    print(f"optimal arm = {stats.optimal_arm + 1}")
    print(f"gaps = [{gaps}]")
    if getattr(inst, "latent", None) is not None:
        print(f"latent coin = {inst.latent.x}")


def cmd_instance_info(args) -> int:
    cfg = _load(args)
    _print_instance_info(cfg, cfg.master_seed)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="banditlab",
        description="Decentralized multi-agent bandit simulator and hard-instance laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="config path (key-value text or JSON)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--jobs", type=int, default=None, help="parallel (T, seed) cells")

    p_run = sub.add_parser("run", help="run each (T, seed) cell and export trajectory CSVs")
    common(p_run)
    p_run.add_argument("--figures", action="store_true", help="also render per-run curves")
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the grid, aggregate, fit the scaling exponent")
    common(p_sweep)
    p_sweep.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the invariant check suites")
    p_verify.add_argument("--level", choices=("fast", "full"), default="fast")
    p_verify.set_defaults(fn=cmd_verify)

    p_info = sub.add_parser("instance-info", help="print global stats and bound checks")
    common(p_info)
    p_info.set_defaults(fn=cmd_instance_info)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, envs.InstanceError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
