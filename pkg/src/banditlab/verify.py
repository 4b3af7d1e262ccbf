"""Invariant check suites behind the `verify` subcommand.

Each check returns a CheckResult; the fast level trims sample counts so the
whole table finishes in well under a minute, the full level runs the heavy
grids (including the exhaustive information-ordering enumeration).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from banditlab import analysis, envs, graphs, sim
from banditlab.enumeration import enumerate_min_regret, information_ordering_grid
from banditlab.policies import InfoModel, make_policy

__all__ = ["CheckResult", "run_checks", "LEVELS"]

LEVELS = ("fast", "full")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _floyd_warshall(g: graphs.Graph) -> np.ndarray:
    M = g.node_count
    dist = np.full((M, M), np.inf)
    np.fill_diagonal(dist, 0.0)
    off = g.adjacency & ~np.eye(M, dtype=bool)
    dist[off] = 1.0
    for k in range(M):
        dist = np.minimum(dist, dist[:, k : k + 1] + dist[k : k + 1, :])
    return dist


def check_graph_invariants(n_graphs: int, rng: np.random.Generator) -> CheckResult:
    """Every produced graph is symmetric with a true diagonal."""
    t0 = time.perf_counter()
    bad = 0
    for _ in range(n_graphs):
        M = int(rng.integers(2, 24))
        c = float(rng.random())
        for g in (
            graphs.make_complete_graph(M),
            graphs.make_path_graph(M),
            graphs.sample_er_graph(M, c, rng),
            graphs.sample_random_connected_graph(M, c, rng),
        ):
            adj = g.adjacency
            if not np.array_equal(adj, adj.T) or not adj.diagonal().all():
                bad += 1
    return CheckResult(
        "graph.symmetry_and_diagonal",
        bad == 0,
        f"{4 * n_graphs} graphs checked, {bad} bad",
        time.perf_counter() - t0,
    )


def check_metropolis(n_graphs: int, rng: np.random.Generator) -> CheckResult:
    """Metropolis weights are doubly stochastic to 1e-12 on random connected graphs."""
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(n_graphs):
        M = int(rng.integers(2, 32))
        g = graphs.sample_random_connected_graph(M, float(rng.random()), rng)
        W = graphs.metropolis_weights(g)
        worst = max(
            worst,
            float(np.abs(W.sum(axis=1) - 1).max()),
            float(np.abs(W.sum(axis=0) - 1).max()),
        )
        graphs.check_weight_matrix(W, g)
    return CheckResult(
        "graph.metropolis_doubly_stochastic",
        worst < 1e-12,
        f"max row/col deviation {worst:.2e} over {n_graphs} graphs",
        time.perf_counter() - t0,
    )


def check_random_connected(n_samples: int, rng: np.random.Generator) -> CheckResult:
    """Every random connected sample across random (M, c) is connected."""
    t0 = time.perf_counter()
    failures = 0
    for _ in range(n_samples):
        M = int(rng.integers(2, 40))
        c = float(rng.random())
        if not graphs.is_connected(graphs.sample_random_connected_graph(M, c, rng)):
            failures += 1
    return CheckResult(
        "graph.random_connected_always_connected",
        failures == 0,
        f"{n_samples} samples, {failures} disconnected",
        time.perf_counter() - t0,
    )


def check_set_distance_oracle(n_graphs: int, rng: np.random.Generator) -> CheckResult:
    """set_distance agrees with a Floyd-Warshall oracle on graphs with M <= 12."""
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(n_graphs):
        M = int(rng.integers(2, 13))
        g = graphs.sample_er_graph(M, float(rng.random()), rng)
        dist = _floyd_warshall(g)
        a = rng.choice(M, size=int(rng.integers(1, M + 1)), replace=False)
        b = rng.choice(M, size=int(rng.integers(1, M + 1)), replace=False)
        oracle = float(dist[np.ix_(a, b)].min())
        got = graphs.set_distance(g, a, b)
        if got != oracle and not (math.isinf(got) and math.isinf(oracle)):
            mismatches += 1
    return CheckResult(
        "graph.set_distance_vs_floyd_warshall",
        mismatches == 0,
        f"{n_graphs} random set pairs, {mismatches} mismatches",
        time.perf_counter() - t0,
    )


def check_two_expander_grid() -> CheckResult:
    """Dumbbell distance >= ceil(eta*M/8) over the (M, eta) grid."""
    t0 = time.perf_counter()
    failures = []
    for M in range(4, 65, 4):
        for eta in (0.5, 1.0, 2.0, 4.0):
            g, i0, i1 = graphs.make_two_expander_graph(M, eta)
            need = math.ceil(eta * M / 8)
            got = graphs.set_distance(g, i0, i1)
            if not (graphs.is_connected(g) and got >= need):
                failures.append((M, eta, got, need))
    return CheckResult(
        "graph.two_expander_distance_grid",
        not failures,
        f"grid M in 4..64 step 4, eta in {{0.5,1,2,4}}; failures: {failures}",
        time.perf_counter() - t0,
    )


def check_clique_conflict_gaps() -> CheckResult:
    """Isolated-clique gap equals (M-3)*delta/M exactly across a grid."""
    t0 = time.perf_counter()
    worst = 0.0
    count = 0
    for M in (4, 5, 6, 8, 12, 16):
        for Q in (1, 2, 3):
            if Q >= M:
                continue
            for delta in (0.1, 0.25, 0.4):
                if (M - 1) / (M - Q) * delta > 1 or 2 * delta / Q > 1:
                    continue
                inst = envs.make_isolated_clique_instance(M, Q, delta)
                stats = envs.global_stats(inst)
                worst = max(worst, abs(stats.gaps[1] - (M - 3) * delta / M))
                count += 1
    return CheckResult(
        "env.isolated_clique_gap_formula",
        worst < 1e-12,
        f"{count} grid points, max |gap - (M-3)d/M| = {worst:.2e}",
        time.perf_counter() - t0,
    )


def check_latent_coin_flip(rng: np.random.Generator) -> CheckResult:
    """Optimal arm flips with the coin; the gap is coin-independent."""
    t0 = time.perf_counter()
    seen: dict[int, envs.GlobalStats] = {}
    for _ in range(64):
        inst = envs.make_latent_coin_instance(4, 1, rng)
        seen[inst.latent.x] = envs.global_stats(inst)
        if len(seen) == 2:
            break
    ok = (
        len(seen) == 2
        and seen[1].optimal_arm == 0
        and seen[0].optimal_arm == 1
        and seen[0].gaps.max() == seen[1].gaps.max() == 3.0 / 8.0
    )
    return CheckResult(
        "env.latent_coin_flip",
        ok,
        f"optimal arms {{x: stats.optimal_arm}} = { {x: s.optimal_arm for x, s in seen.items()} }",
        time.perf_counter() - t0,
    )


def check_epoch_adversary_arithmetic() -> CheckResult:
    """Schedule arithmetic and feasibility bounds of the adversary construction."""
    t0 = time.perf_counter()
    inst = envs.make_epoch_adversary_instance(4, 262144, 4.0)
    stats = envs.global_stats(inst)
    checks = [
        inst.epsilon == 0.125,
        inst.epoch_length == 2,
        inst.epoch_count == 131072,
        8 * inst.epsilon**2 * inst.epoch_length == 0.25,
        bool(stats.global_means[0] == 0.140625),
        bool(stats.global_means[1] == 0.125),
    ]
    feasible = True
    for M in (4, 8, 16, 32, 64):
        for eps in (1 / 64, 1 / 32, 1 / 16):
            i = envs.make_epoch_adversary_instance(M, 262144, 4.0, epsilon=eps)
            feasible &= i.epsilon <= 0.25
            feasible &= 8 * i.epsilon**2 * i.epoch_length <= 1 + 1e-12
            feasible &= i.epsilon * math.sqrt(2 * i.epoch_length) <= 0.5 + 1e-12
            feasible &= i.epoch_count * i.epoch_length <= i.T < (i.epoch_count + 1) * i.epoch_length
    return CheckResult(
        "env.epoch_adversary_arithmetic",
        all(checks) and feasible,
        f"reference schedule checks {checks}, feasibility grid ok={feasible}",
        time.perf_counter() - t0,
    )


def check_reward_means(draws: int, rng: np.random.Generator) -> CheckResult:
    """Monte Carlo reward means match global stats within 3 sigma per preset."""
    t0 = time.perf_counter()
    presets = [
        envs.make_isolated_clique_instance(8, 1, 0.4),
        envs.make_latent_coin_instance(4, 1, rng),
        envs.make_bernoulli_instance(4, [0.7, 0.5]),
    ]
    failures = []
    for inst in presets:
        u = rng.random((draws, inst.M, inst.K))
        samples = np.where(inst._bernoulli_mask, (u < inst.means), inst.means)
        emp = samples.mean(axis=(0, 1))
        stats = envs.global_stats(inst)
        sigma = np.sqrt(0.25 / (draws * inst.M))  # Bernoulli variance bound
        if np.any(np.abs(emp - stats.global_means) > 3 * sigma + 1e-12):
            failures.append(inst.name)
    # Epoch adversary: conditional means of the current epoch state.
    adv = envs.make_epoch_adversary_instance(4, 262144, 4.0).materialize(rng)
    adv = envs.resample_epoch_state(adv, 1, rng)
    cond = adv.conditional_means(adv.epoch_states[0])
    emp = (rng.random((draws, 4, 2)) < cond).mean(axis=0)
    if np.abs(emp - cond).max() > 3 * math.sqrt(0.25 / draws):
        failures.append(adv.name)
    return CheckResult(
        "env.monte_carlo_means",
        not failures,
        f"{draws} draws per preset; failures: {failures}",
        time.perf_counter() - t0,
    )


def check_kl_bound(grid_size: int, kl_fn: Callable[[float], float] | None = None) -> CheckResult:
    """per-step KL <= 4 eps^2 on a dense grid over [0, 1/4]."""
    t0 = time.perf_counter()
    fn = kl_fn or analysis.per_step_kl
    eps = np.linspace(0.0, 0.25, grid_size)
    bad = [float(e) for e in eps if fn(float(e)) > 4 * e * e + 1e-15]
    return CheckResult(
        "analysis.per_step_kl_quadratic_bound",
        not bad,
        f"{grid_size} grid points over [0, 1/4]; violations at {bad[:3]}",
        time.perf_counter() - t0,
    )


def check_pinsker_chain(
    n_random: int,
    rng: np.random.Generator,
    kl_fn: Callable[[float], float] | None = None,
) -> CheckResult:
    """Exact TV <= sqrt(d * per-step KL / 2) <= eps * sqrt(2 d) on random (eps, d).

    Also cross-checks the per-step KL against the independent Bernoulli KL
    closed form, so a tampered KL fails even where the bound chain has slack.
    """
    t0 = time.perf_counter()
    fn = kl_fn or analysis.per_step_kl
    failures = 0
    for _ in range(n_random):
        d = int(rng.integers(1, analysis.MAX_EXACT_TV_EPOCH + 1))
        eps = float(rng.uniform(0.0, 1.0)) / math.sqrt(8.0 * d)  # keeps 8 eps^2 d <= 1
        step = fn(eps)
        tv = analysis.exact_tv_small_epoch(eps, d)
        pinsker = math.sqrt(d * step / 2.0)
        cap = eps * math.sqrt(2.0 * d)
        oracle_ok = abs(step - analysis.kl_bernoulli(0.5, 0.5 + eps)) <= 1e-12
        if not (
            oracle_ok
            and tv <= pinsker + 1e-12
            and pinsker <= cap + 1e-12
            and cap <= 0.5 + 1e-12
        ):
            failures += 1
    return CheckResult(
        "analysis.pinsker_chain_vs_exact_tv",
        failures == 0,
        f"{n_random} random (eps, d) with 8*eps^2*d <= 1; {failures} failures",
        time.perf_counter() - t0,
    )


def check_fit_recovery() -> CheckResult:
    """Planted exponents {0, 1/2, 2/3, 1} recovered within 1e-6 on noiseless data."""
    t0 = time.perf_counter()
    horizons = [2**k for k in range(10, 17)]
    worst = 0.0
    for alpha in (0.0, 0.5, 2.0 / 3.0, 1.0):
        pts = [(T, 3.0 * T**alpha) for T in horizons]
        fit = analysis.fit_scaling_exponent(pts)
        worst = max(worst, abs(fit.alpha - alpha))
    return CheckResult(
        "analysis.fit_exponent_recovery",
        worst < 1e-6,
        f"max |alpha - planted| = {worst:.2e}",
        time.perf_counter() - t0,
    )


def _random_k2_run(rng: np.random.Generator):
    """One random K=2 run mixing instances, graphs, and policies."""
    kind = rng.integers(0, 4)
    if kind == 0:
        inst = envs.make_isolated_clique_instance(4, 1, 0.4)
        model = graphs.StaticGraph(graphs.make_disconnected_clique_graph(4, 1))
    elif kind == 1:
        inst = envs.make_latent_coin_instance(4, 1, rng)
        model = graphs.StaticGraph(graphs.make_disconnected_clique_graph(4, 1))
    elif kind == 2:
        inst = envs.make_bernoulli_instance(5, [0.8, 0.4])
        model = graphs.ErdosRenyiModel(5, 0.5)
    else:
        inst = envs.make_bernoulli_instance(4, [0.6, 0.55])
        model = graphs.StaticGraph(graphs.make_complete_graph(4))
    policy = [
        make_policy("uniform_random"),
        make_policy("fixed", k=1),
        make_policy("fixed", k=2),
        make_policy("gossip_ucb", C=2.0),
        make_policy("exp3_gossip"),
        make_policy("full_info_leader"),
    ][int(rng.integers(0, 6))]
    T = int(rng.integers(20, 200))
    seed = int(rng.integers(0, 2**31))
    traj = sim.run(inst, model, policy, T, seed)
    return traj, envs.global_stats(inst)


def check_agreement_identity(n_runs: int, rng: np.random.Generator) -> CheckResult:
    """Regret splits exactly into disagreement charge plus agreement sum (K=2)."""
    t0 = time.perf_counter()
    worst = 0.0
    bound_ok = True
    for _ in range(n_runs):
        traj, stats = _random_k2_run(rng)
        dec = sim.agreement_decomposition(traj, stats)
        worst = max(worst, dec.identity_residual)
        bound_ok &= dec.disagreement_regret <= dec.disagreement_bound + 1e-9
        bound_ok &= dec.T_a + dec.T_d == traj.horizon
    return CheckResult(
        "sim.agreement_identity",
        worst <= 1e-9 and bound_ok,
        f"{n_runs} random K=2 runs, max residual {worst:.2e}, bound ok={bound_ok}",
        time.perf_counter() - t0,
    )


def check_regret_monotone(n_runs: int, rng: np.random.Generator) -> CheckResult:
    """Cumulative pseudo-regret is non-negative and non-decreasing."""
    t0 = time.perf_counter()
    ok = True
    for _ in range(n_runs):
        traj, _ = _random_k2_run(rng)
        steps = np.diff(np.concatenate([[0.0], traj.regret_curve]))
        ok &= bool(steps.min() >= -1e-12)
        ok &= bool((traj.pull_counts.sum(axis=1) == traj.horizon).all())
    return CheckResult(
        "sim.regret_monotone_and_conserved",
        ok,
        f"{n_runs} random runs",
        time.perf_counter() - t0,
    )


def check_information_ordering() -> CheckResult:
    """Full-information minimum never exceeds the bandit minimum on the grid."""
    t0 = time.perf_counter()
    violations = []
    cases = information_ordering_grid()
    for case in cases:
        f = enumerate_min_regret(case.instance, case.graph, 2, InfoModel.FULL_NEIGHBORS)
        b = enumerate_min_regret(case.instance, case.graph, 2, InfoModel.BANDIT_NEIGHBORS)
        if not f <= b:
            violations.append(case.label)
    return CheckResult(
        "policy.information_ordering_enumeration",
        not violations,
        f"{len(cases)} enumerable cases; violations: {violations}",
        time.perf_counter() - t0,
    )


class _TailFlippedInstance:
    """Test double: flips Bernoulli rewards after a cutoff step, same rng use."""

    def __init__(self, inner, cutoff: int):
        self.inner = inner
        self.cutoff = cutoff

    @property
    def M(self):
        return self.inner.M

    @property
    def K(self):
        return self.inner.K

    @property
    def means(self):
        return self.inner.means

    def materialize(self, rng):
        self.inner = self.inner.materialize(rng)
        return self

    def sample_rewards(self, t, rng):
        r = self.inner.sample_rewards(t, rng)
        return (1.0 - r) if t > self.cutoff else r


def check_no_lookahead(rng: np.random.Generator) -> CheckResult:
    """Perturbing rewards beyond step t leaves all actions at steps <= t unchanged."""
    t0 = time.perf_counter()
    cutoff = 40
    T = 80
    ok = True
    for name, params in [
        ("gossip_ucb", {"C": 2.0}),
        ("exp3_gossip", {}),
        ("full_info_leader", {}),
        ("fixed", {"k": 1}),
        ("uniform_random", {}),
    ]:
        inst = envs.make_bernoulli_instance(4, [0.7, 0.4])
        model = graphs.StaticGraph(graphs.make_complete_graph(4))
        base = sim.run(inst, model, make_policy(name, **params), T, 12345)
        flipped = sim.run(
            _TailFlippedInstance(inst, cutoff), model, make_policy(name, **params), T, 12345
        )
        ok &= bool(
            np.array_equal(base.actions[:, :cutoff], flipped.actions[:, :cutoff])
        )
    return CheckResult(
        "policy.no_lookahead",
        ok,
        f"5 policies, cutoff {cutoff} of T={T}",
        time.perf_counter() - t0,
    )


def run_checks(
    level: str = "fast",
    kl_fn: Callable[[float], float] | None = None,
    seed: int = 20240817,
) -> list[CheckResult]:
    """Run the invariant suites. ``kl_fn`` substitutes the per-step KL under test."""
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}, got {level!r}")
    full = level == "full"
    rng = np.random.default_rng(seed)
    results = [
        check_graph_invariants(60 if not full else 250, rng),
        check_metropolis(250 if not full else 1000, rng),
        check_random_connected(1000 if not full else 10000, rng),
        check_set_distance_oracle(40 if not full else 200, rng),
        check_two_expander_grid(),
        check_clique_conflict_gaps(),
        check_latent_coin_flip(rng),
        check_epoch_adversary_arithmetic(),
        check_reward_means(20000 if not full else 100000, rng),
        check_kl_bound(200 if not full else 2000, kl_fn),
        check_pinsker_chain(200 if not full else 1000, rng, kl_fn),
        check_fit_recovery(),
        check_agreement_identity(25 if not full else 100, rng),
        check_regret_monotone(10 if not full else 40, rng),
        check_no_lookahead(rng),
    ]
    if full:
        results.append(check_information_ordering())
    return results
