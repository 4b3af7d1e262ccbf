"""Sweep orchestration: seeded cells, aggregation, fits, report files.

Seed derivation rule: the stream seed of cell (horizon index hi, seed index
si) is the tuple (master_seed, hi, si) fed as SeedSequence entropy; inside a
run that sequence spawns separate environment and policy generators.
Changing one cell's seed therefore cannot perturb any other cell, and the
(T, seed)-sorted merge makes sweep outputs byte-deterministic.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from banditlab.analysis import (
    AggregateRow,
    AnalysisError,
    RunSummary,
    ScalingFit,
    aggregate_runs,
    fit_scaling_exponent,
)
from banditlab.config import (
    ExperimentConfig,
    describe_config,
    resolve_graph,
    resolve_instance,
    resolve_policy,
)
from banditlab.sim import Trajectory, export_trajectory_csv, run, write_json

__all__ = [
    "CellResult",
    "cell_seed",
    "run_cell",
    "run_all_cells",
    "SweepOutputs",
    "run_sweep",
    "run_and_export",
]

CURVE_POINTS = 256


def cell_seed(master_seed: int, horizon_index: int, seed_index: int) -> tuple[int, int, int]:
    """Documented stream-seed mix for one (T, seed) cell."""
    return (int(master_seed), int(horizon_index), int(seed_index))


@dataclass(frozen=True)
class CellResult:
    T: int
    seed_index: int
    final_regret: float
    curve_t: np.ndarray
    curve_r: np.ndarray


def _decimate(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    T = traj.horizon
    idx = np.unique(np.linspace(1, T, min(T, CURVE_POINTS)).astype(np.int64))
    return idx, traj.regret_curve[idx - 1]


def run_cell(cfg: ExperimentConfig, horizon_index: int, seed_index: int) -> CellResult:
    """Build instance/graph/policy fresh and run one (T, seed) cell."""
    T = cfg.horizons[horizon_index]
    inst = resolve_instance(cfg.instance, T)
    model = resolve_graph(cfg.graph, inst)
    policy = resolve_policy(cfg.policy)
    traj = run(inst, model, policy, T, cell_seed(cfg.master_seed, horizon_index, seed_index))
    idx, curve = _decimate(traj)
    return CellResult(
        T=T,
        seed_index=seed_index,
        final_regret=traj.final_regret,
        curve_t=idx,
        curve_r=curve,
    )


def _run_cell_star(args) -> CellResult:
    return run_cell(*args)


def run_all_cells(cfg: ExperimentConfig, jobs: int = 1) -> list[CellResult]:
    """Run the (horizon, seed) grid, merged deterministically by (T, seed)."""
    grid = [
        (cfg, hi, si)
        for hi in range(len(cfg.horizons))
        for si in cfg.seeds
    ]
    if jobs > 1 and len(grid) > 1:
        with multiprocessing.Pool(processes=jobs) as pool:
            results = pool.map(_run_cell_star, grid)
    else:
        results = [_run_cell_star(g) for g in grid]
    return sorted(results, key=lambda c: (c.T, c.seed_index))


@dataclass(frozen=True)
class SweepOutputs:
    aggregate: list[AggregateRow]
    fit: ScalingFit | None
    fit_warning: str | None
    aggregate_csv: Path
    fit_json: Path
    figure_paths: list[Path]


def _aggregate_csv_text(rows: list[AggregateRow]) -> str:
    lines = ["T,mean_regret,stderr"]
    for row in rows:
        lines.append(f"{row.T},{row.mean!r},{row.stderr!r}")
    return "\n".join(lines) + "\n"


def _fit_payload(fit: ScalingFit | None, warning: str | None) -> dict:
    if fit is None:
        return {
            "alpha": None,
            "prefactor": None,
            "r2": None,
            "points_used": 0,
            "warning": warning,
        }
    return {
        "alpha": fit.alpha,
        "prefactor": fit.prefactor,
        "r2": fit.r2,
        "points_used": len(fit.points),
    }


def _curve_bands(results: list[CellResult]) -> list[dict]:
    """Pointwise mean and 95% band of the regret curve per horizon."""
    out = []
    for T in sorted({c.T for c in results}):
        group = sorted((c for c in results if c.T == T), key=lambda c: c.seed_index)
        stack = np.stack([c.curve_r for c in group])
        mean = stack.mean(axis=0)
        if stack.shape[0] > 1:
            se = stack.std(axis=0, ddof=1) / np.sqrt(stack.shape[0])
        else:
            se = np.zeros_like(mean)
        out.append(
            {
                "T": T,
                "t": group[0].curve_t,
                "mean": mean,
                "lo": mean - 1.96 * se,
                "hi": mean + 1.96 * se,
            }
        )
    return out


def run_sweep(cfg: ExperimentConfig, out_dir, jobs: int | None = None) -> SweepOutputs:
    """Run the full grid, aggregate, fit, and write the report files.

    Writes ``aggregate.csv`` (T,mean_regret,stderr), ``fit.json``
    ({alpha, prefactor, r2, points_used}), and — unless figures are
    disabled — log-log and curve figures alongside them.
    """
    from banditlab.config import ConfigError

    if len(cfg.horizons) < 3:
        raise ConfigError("sweep needs at least 3 horizons")
    if len(cfg.seeds) < 2:
        raise ConfigError("sweep needs at least 2 seeds")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = run_all_cells(cfg, jobs=jobs if jobs is not None else cfg.jobs)

    rows = aggregate_runs(
        RunSummary(T=c.T, seed=c.seed_index, final_regret=c.final_regret)
        for c in results
    )
    fit: ScalingFit | None
    warning: str | None
    try:
        fit = fit_scaling_exponent([(r.T, r.mean) for r in rows], min_T=min(cfg.horizons))
        warning = None
    except AnalysisError as exc:
        fit = None
        warning = str(exc)

    agg_path = out_dir / "aggregate.csv"
    fit_path = out_dir / "fit.json"
    _atomic_write_text(agg_path, _aggregate_csv_text(rows))
    write_json(fit_path, _fit_payload(fit, warning))
    write_json(out_dir / "sweep_meta.json", describe_config(cfg))

    figure_paths: list[Path] = []
    if cfg.figures:
        from banditlab.figures import save_curves_figure, save_loglog_figure

        figure_paths.append(save_loglog_figure(rows, fit, out_dir / "regret_loglog.png"))
        figure_paths.append(
            save_curves_figure(_curve_bands(results), out_dir / "regret_curves.png")
        )
    return SweepOutputs(
        aggregate=rows,
        fit=fit,
        fit_warning=warning,
        aggregate_csv=agg_path,
        fit_json=fit_path,
        figure_paths=figure_paths,
    )


def _atomic_write_text(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data)
    import os

    os.replace(tmp, path)


def run_and_export(cfg: ExperimentConfig, out_dir, figures: bool = False) -> list[Path]:
    """cmd-run path: one CSV per (T, seed) plus a single metadata JSON."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    cells = []
    for hi, T in enumerate(cfg.horizons):
        for si in cfg.seeds:
            inst = resolve_instance(cfg.instance, T)
            model = resolve_graph(cfg.graph, inst)
            policy = resolve_policy(cfg.policy)
            seed = cell_seed(cfg.master_seed, hi, si)
            traj = run(inst, model, policy, T, seed)
            path = out_dir / f"run_T{T}_s{si}.csv"
            export_trajectory_csv(traj, path)
            written.append(path)
            cells.append(
                {
                    "T": T,
                    "seed_index": si,
                    "stream_seed": list(seed),
                    "csv": path.name,
                    "final_regret": traj.final_regret,
                    "T_d": traj.T_d,
                }
            )
            if figures:
                from banditlab.figures import save_single_curve_figure

                written.append(
                    save_single_curve_figure(traj, out_dir / f"run_T{T}_s{si}.png")
                )
    meta_path = out_dir / "run_meta.json"
    write_json(meta_path, {"config": describe_config(cfg), "runs": cells})
    written.append(meta_path)
    return written
