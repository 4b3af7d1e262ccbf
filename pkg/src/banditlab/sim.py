"""Interaction protocol: graph emission, arm pulls, messaging, regret accounting.

Each step runs in a fixed order: (1) the graph model emits G_t, (2) every
client acts on information through step t-1, (3) rewards are drawn, (4)
messages travel along G_t's edges per the policy's information model, and
(5) regret is accumulated against the true means. Runs are deterministic
given the full parameter set and the seed.

Pseudo-regret charges each pull by the global (client-averaged) gap of the
pulled arm, `(1/M) * sum_m gap[a_m^t]`, which is non-negative per step and
makes the cumulative curve non-decreasing. Realized regret (optimal global
mean minus the average sampled reward) is kept as a secondary column.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from banditlab.envs import EpochAdversaryInstance, GlobalStats, global_stats
from banditlab.graphs import Graph, StaticGraph, metropolis_weights
from banditlab.policies import InfoModel, Policy

__all__ = [
    "SimulationError",
    "Trajectory",
    "AgreementDecomposition",
    "run",
    "pseudo_regret_step",
    "agreement_decomposition",
    "epoch_pull_counts",
    "export_trajectory_csv",
    "write_json",
]


class SimulationError(RuntimeError):
    """Protocol violation detected while running a simulation."""


@dataclass(frozen=True)
class Trajectory:
    """One run's record: actions, counts, regret curves, agreement tallies."""

    horizon: int
    M: int
    K: int
    actions: np.ndarray            # (M, T) arm indices
    pull_counts: np.ndarray        # (M, K)
    regret_curve: np.ndarray       # (T,) cumulative pseudo-regret
    realized_curve: np.ndarray     # (T,) cumulative realized regret
    disagree: np.ndarray           # (T,) bool, True where actions not all equal
    seed: object
    epoch_length: int | None = None
    epoch_count: int | None = None

    @property
    def T_d(self) -> int:
        return int(self.disagree.sum())

    @property
    def T_a(self) -> int:
        return self.horizon - self.T_d

    @property
    def final_regret(self) -> float:
        return float(self.regret_curve[-1])

    @property
    def disagree_cumulative(self) -> np.ndarray:
        return np.cumsum(self.disagree.astype(np.int64))


def pseudo_regret_step(actions, stats: GlobalStats) -> float:
    """Per-step pseudo-regret of an action vector: (1/M) * sum_m gap[a_m]."""
    return float(stats.gaps[np.asarray(actions, dtype=int)].mean())


def run(instance, graph_model, policy: Policy, T: int, seed) -> Trajectory:
    """Run one trajectory of length T.

    ``seed`` may be an int or a tuple of ints; it feeds a SeedSequence that
    spawns separate environment and policy streams, so identical inputs
    reproduce the trajectory bit for bit. Latent state (coin or epoch
    sequence) is materialized from the environment stream before stepping.
    """
    if T < 1:
        raise SimulationError(f"horizon must be >= 1, got {T}")
    M = instance.M
    if graph_model.node_count != M:
        raise SimulationError(
            f"instance has M={M} but graph model has M={graph_model.node_count}"
        )
    ss = np.random.SeedSequence(seed)
    env_ss, policy_ss = ss.spawn(2)
    env_rng = np.random.default_rng(env_ss)
    policy_rng = np.random.default_rng(policy_ss)

    inst = instance.materialize(env_rng)
    if isinstance(inst, EpochAdversaryInstance) and inst.T != T:
        raise SimulationError(
            f"adversarial instance built for T={inst.T}, run asked for T={T}"
        )
    stats = global_stats(inst)
    K = stats.K
    gaps = stats.gaps
    mu_star = float(stats.global_means[stats.optimal_arm])

    policy.reset(M, K, policy_rng)
    wants_full = policy.info_model is InfoModel.FULL_NEIGHBORS

    static = getattr(graph_model, "is_static", False)
    if static:
        g_static = graph_model.graph_at(1, env_rng)
        w_static = metropolis_weights(g_static)

    actions = np.empty((M, T), dtype=np.int16)
    regret_steps = np.empty(T)
    realized_steps = np.empty(T)
    disagree = np.empty(T, dtype=bool)
    rows = np.arange(M)

    for t in range(1, T + 1):
        if static:
            g, w = g_static, w_static
        else:
            g = graph_model.graph_at(t, env_rng)
            w = metropolis_weights(g)
        acts = np.asarray(policy.act_all(t))
        if t == 1 and (acts.shape != (M,) or acts.min() < 0 or acts.max() >= K):
            raise SimulationError(f"policy returned invalid actions {acts!r}")
        rewards = inst.sample_rewards(t, env_rng)
        pulled = rewards[rows, acts]
        actions[:, t - 1] = acts
        regret_steps[t - 1] = gaps[acts].sum() / M
        realized_steps[t - 1] = mu_star - pulled.sum() / M
        disagree[t - 1] = bool((acts != acts[0]).any())
        policy.observe_all(t, g, w, acts, pulled, rewards if wants_full else None)

    pull_counts = np.stack([np.bincount(actions[m], minlength=K) for m in range(M)])
    if not (pull_counts.sum(axis=1) == T).all():
        raise SimulationError("pull-count conservation failed")
    if regret_steps.min() < 0:
        raise SimulationError("negative per-step pseudo-regret")

    epoch_length = inst.epoch_length if isinstance(inst, EpochAdversaryInstance) else None
    epoch_count = inst.epoch_count if isinstance(inst, EpochAdversaryInstance) else None
    return Trajectory(
        horizon=T,
        M=M,
        K=K,
        actions=actions,
        pull_counts=pull_counts,
        regret_curve=np.cumsum(regret_steps),
        realized_curve=np.cumsum(realized_steps),
        disagree=disagree,
        seed=seed,
        epoch_length=epoch_length,
        epoch_count=epoch_count,
    )


@dataclass(frozen=True)
class AgreementDecomposition:
    """Split of a two-armed run's regret into agreement and disagreement parts.

    ``disagreement_regret`` is the exact charge sum over disagreement steps
    (each step contributes gap * k_t / M with k_t clients on the worse arm);
    ``disagreement_bound`` is the step-count form T_d * gap, which dominates
    the exact charge. ``identity_residual`` is |R_T - (agreement_regret +
    disagreement_regret)| with both parts recomputed from the actions; None
    when the identity check does not apply (K > 2).
    """

    T_a: int
    T_d: int
    agreement_regret: float
    disagreement_regret: float
    disagreement_bound: float
    identity_residual: float | None
    reason: str = ""


def agreement_decomposition(traj: Trajectory, stats: GlobalStats) -> AgreementDecomposition:
    """Count agreement/disagreement steps and verify the regret split (K = 2).

    For K > 2 the counts are still returned but the identity check is
    refused (residual None).
    """
    acts = traj.actions
    dis = (acts != acts[0:1, :]).any(axis=0)
    if not np.array_equal(dis, traj.disagree):
        raise SimulationError("recorded disagreement flags do not match actions")
    T_d = int(dis.sum())
    T_a = traj.horizon - T_d
    if stats.K != 2:
        return AgreementDecomposition(
            T_a=T_a,
            T_d=T_d,
            agreement_regret=float("nan"),
            disagreement_regret=float("nan"),
            disagreement_bound=float("nan"),
            identity_residual=None,
            reason=f"identity check refused for K={stats.K} (stated for two arms)",
        )
    worse = 1 - stats.optimal_arm
    gap = float(stats.gaps[worse])
    agree_actions = acts[0, ~dis]
    agreement_regret = float(stats.gaps[agree_actions].sum())
    k_t = (acts[:, dis] == worse).sum(axis=0)
    disagreement_regret = gap * float(k_t.sum()) / traj.M
    residual = abs(traj.final_regret - (agreement_regret + disagreement_regret))
    return AgreementDecomposition(
        T_a=T_a,
        T_d=T_d,
        agreement_regret=agreement_regret,
        disagreement_regret=disagreement_regret,
        disagreement_bound=T_d * gap,
        identity_residual=residual,
    )


def epoch_pull_counts(traj: Trajectory, inst: EpochAdversaryInstance) -> np.ndarray:
    """n_{m,1}(T, j): first-arm pulls of each client per epoch, shape (M, D).

    The trailing partial epoch folds into epoch D. Row sums reproduce the
    total first-arm pull counts.
    """
    if not isinstance(inst, EpochAdversaryInstance):
        raise SimulationError("epoch pull counts need an adversarial instance")
    if traj.epoch_length is None or traj.horizon != inst.T:
        raise SimulationError("trajectory was not produced by this adversarial instance")
    d, D = inst.epoch_length, inst.epoch_count
    starts = np.arange(D) * d
    arm1 = (traj.actions == 0).astype(np.int64)
    counts = np.add.reduceat(arm1, starts, axis=1)
    if not np.array_equal(counts.sum(axis=1), traj.pull_counts[:, 0]):
        raise SimulationError("epoch pull counts do not sum to total pull counts")
    return counts


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data)
    os.replace(tmp, path)


def export_trajectory_csv(traj: Trajectory, path, metadata: dict | None = None) -> None:
    """Write the per-step CSV (t,cum_regret,realized_regret,T_d_so_far).

    When ``metadata`` is given, a JSON sidecar with the same stem is written
    next to the CSV.
    """
    path = Path(path)
    td = traj.disagree_cumulative
    cum = traj.regret_curve.tolist()
    realized = traj.realized_curve.tolist()
    lines = ["t,cum_regret,realized_regret,T_d_so_far"]
    for t in range(traj.horizon):
        lines.append(f"{t + 1},{cum[t]!r},{realized[t]!r},{td[t]}")
    _atomic_write(path, "\n".join(lines) + "\n")
    if metadata is not None:
        write_json(path.with_suffix(".json"), metadata)


def write_json(path, payload: dict) -> None:
    """Deterministic JSON: sorted keys, fixed separators, trailing newline."""
    path = Path(path)
    _atomic_write(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")
