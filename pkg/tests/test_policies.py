from __future__ import annotations

import math

import numpy as np
import pytest

from banditlab import envs, graphs, sim
from banditlab.envs import instance_from_means, make_bernoulli_instance
from banditlab.graphs import (
    StaticGraph,
    make_complete_graph,
    make_disconnected_clique_graph,
    make_path_graph,
    metropolis_weights,
)
from banditlab.policies import (
    Exp3GossipPolicy,
    FullInfoLeaderPolicy,
    GossipUCBPolicy,
    InfoModel,
    Message,
    PolicyError,
    build_messages,
    make_policy,
)


def pointmass(rows, name="pm"):
    return instance_from_means(rows, kind="pointmass", name=name)


# -- act basics ---------------------------------------------------------------


def test_fixed_policy_always_plays_its_arm():
    inst = pointmass([[1.0, 0.0]] * 3)
    traj = sim.run(inst, StaticGraph(make_complete_graph(3)), make_policy("fixed", k=2), 20, 0)
    assert (traj.actions == 1).all()


def test_gossip_ucb_round_robin_initialization():
    inst = pointmass([[0.2, 0.9, 0.1]] * 3)
    traj = sim.run(inst, StaticGraph(make_complete_graph(3)), make_policy("gossip_ucb"), 10, 0)
    # arm t at steps t <= K, for every client
    for t in range(3):
        assert (traj.actions[:, t] == t).all()
    assert (traj.pull_counts > 0).all()


def test_exp3_uniform_weights_chi_square():
    policy = Exp3GossipPolicy()
    policy.reset(M=1, K=4, rng=np.random.default_rng(0))
    n = 100000
    draws = np.concatenate([policy.act_all(1) for _ in range(n)])
    counts = np.bincount(draws, minlength=4)
    chi2 = float(((counts - n / 4) ** 2 / (n / 4)).sum())
    # 3-sigma-equivalent quantile for chi2 with 3 dof
    assert chi2 < 14.2


def test_uniform_random_policy_covers_arms():
    inst = pointmass([[0.5, 0.5]] * 3)
    traj = sim.run(inst, StaticGraph(make_complete_graph(3)), make_policy("uniform_random"), 200, 1)
    assert set(np.unique(traj.actions)) == {0, 1}


# -- gossip UCB behavior -------------------------------------------------------


def test_gossip_ucb_greedy_lock_with_c0():
    # C = 0 is pure greedy after the round-robin: locks the point-mass optimum.
    inst = pointmass([[1.0, 0.0]] * 3)
    traj = sim.run(inst, StaticGraph(make_complete_graph(3)), make_policy("gossip_ucb", C=0.0), 400, 0)
    assert (traj.actions[:, 2:] == 0).all()


def test_gossip_ucb_c2_revisits_are_log_sparse():
    # With C = 2 the bonus forces occasional arm-2 revisits; on the unit-gap
    # point-mass pair those revisits number O(log T) per client.
    inst = pointmass([[1.0, 0.0]] * 3)
    T = 2000
    traj = sim.run(inst, StaticGraph(make_complete_graph(3)), make_policy("gossip_ucb", C=2.0), T, 0)
    bad = traj.pull_counts[:, 1]
    assert (bad >= 1).all()
    assert (bad <= 10 * math.log(T)).all()


def test_gossip_ucb_unpulled_arm_gets_pulled_within_k_steps():
    inst = pointmass([[0.9, 0.8, 0.1, 0.0]] * 4)
    traj = sim.run(inst, StaticGraph(make_complete_graph(4)), make_policy("gossip_ucb"), 4, 0)
    assert (traj.pull_counts == 1).all()


def test_gossip_ucb_isolated_client_follows_local_means():
    inst = envs.make_isolated_clique_instance(4, 1, 0.4)
    model = StaticGraph(make_disconnected_clique_graph(4, 1))
    traj = sim.run(inst, model, make_policy("gossip_ucb", C=0.0), 100, 0)
    # greedy isolated client locks its local optimum (arm 2)
    assert (traj.actions[0, 2:] == 1).all()
    assert (traj.actions[1:, 2:] == 0).all()


def test_gossip_ucb_consensus_contracts_at_second_eigenvalue():
    # Static connected graph, point-mass rewards: after the round-robin the
    # increment stream freezes, so the consensus disagreement must contract
    # at the weight matrix's second-largest eigenvalue modulus.
    rows = [[1.0, 0.0], [0.5, 0.25], [0.0, 0.75], [0.25, 1.0], [0.75, 0.5]]
    inst = pointmass(rows)
    g = make_path_graph(5)
    W = metropolis_weights(g)
    eig = np.sort(np.abs(np.linalg.eigvalsh(W)))
    slem = float(eig[-2])

    policy = GossipUCBPolicy(C=2.0)
    policy.reset(5, 2, np.random.default_rng(0))
    rng = np.random.default_rng(1)
    rows_idx = np.arange(5)
    deviations = []
    for t in range(1, 40):
        acts = policy.act_all(t)
        rewards = inst.sample_rewards(t, rng)
        policy.observe_all(t, g, W, acts, rewards[rows_idx, acts], None)
        z = policy.consensus
        deviations.append(float(np.linalg.norm(z - z.mean(axis=0), ord="fro")))
    window = deviations[3:25]  # increments frozen from t = K + 1 = 3 on
    ratios = [b / a for a, b in zip(window, window[1:]) if a > 1e-13]
    assert max(ratios) <= slem + 1e-9
    # max client-pair disagreement decays geometrically at rate <= slem
    assert window[10] / window[0] <= (slem + 0.02) ** 10


def test_gossip_ucb_consensus_tracks_global_mean_average():
    inst = pointmass([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0], [0.5, 0.0]])
    g = make_complete_graph(4)
    W = metropolis_weights(g)
    policy = GossipUCBPolicy()
    policy.reset(4, 2, np.random.default_rng(0))
    rng = np.random.default_rng(1)
    rows_idx = np.arange(4)
    for t in range(1, 60):
        acts = policy.act_all(t)
        rewards = inst.sample_rewards(t, rng)
        policy.observe_all(t, g, W, acts, rewards[rows_idx, acts], None)
    target = inst.means.mean(axis=0)
    assert np.abs(policy.consensus - target).max() < 1e-6


# -- EXP3 behavior -------------------------------------------------------------


def test_exp3_gamma_zero_never_updates():
    inst = pointmass([[1.0, 0.0]] * 3)
    policy = Exp3GossipPolicy(gamma0=0.0)
    traj = sim.run(inst, StaticGraph(make_complete_graph(3)), policy, 3000, 0)
    assert np.array_equal(policy.logw, np.zeros((3, 2)))
    frac = float((traj.actions == 0).mean())
    assert abs(frac - 0.5) < 0.05


def test_exp3_probabilities_stay_on_simplex_after_1e5_steps():
    inst = make_bernoulli_instance(3, [0.7, 0.3])
    policy = Exp3GossipPolicy()
    sim.run(inst, StaticGraph(make_complete_graph(3)), policy, 100000, 2)
    p = policy.probabilities(100000)
    assert np.abs(p.sum(axis=1) - 1.0).max() < 1e-9
    assert (p > 0).all() and (p < 1).all()


def test_exp3_locks_pointmass_optimum_by_1e4():
    # Monte Carlo over 20 seeds: arm-1 probability above 0.99 at t = 1e4.
    inst = pointmass([[1.0, 0.0]] * 3)
    model = StaticGraph(make_complete_graph(3))
    for seed in range(20):
        policy = Exp3GossipPolicy()
        sim.run(inst, model, policy, 10000, seed)
        assert (policy.probabilities(10000)[:, 0] > 0.99).all()


# -- information models and messages -------------------------------------------


def test_bandit_messages_are_subset_of_full_messages():
    inst = make_bernoulli_instance(4, [0.6, 0.4])
    g = make_path_graph(4)
    rng = np.random.default_rng(0)
    actions = rng.integers(0, 2, size=4)
    rewards = inst.sample_rewards(1, rng)
    bandit = build_messages(InfoModel.BANDIT_NEIGHBORS, g, actions, rewards)
    full = build_messages(InfoModel.FULL_NEIGHBORS, g, actions, rewards)
    for m in range(4):
        full_by_sender = {msg.sender: msg for msg in full[m]}
        assert len(bandit[m]) == len(full[m])
        for msg in bandit[m]:
            counterpart = full_by_sender[msg.sender]
            assert counterpart.arm == msg.arm
            # the bandit content is recoverable from the full content
            assert counterpart.all_rewards[msg.arm] == msg.reward
            assert msg.all_rewards is None


def test_observe_rejects_messages_from_non_neighbors():
    policy = FullInfoLeaderPolicy()
    policy.reset(4, 2, np.random.default_rng(0))
    g = make_path_graph(4)
    forged = [Message(sender=3, arm=0, reward=1.0, all_rewards=np.array([1.0, 0.0]))]
    with pytest.raises(PolicyError, match="non-neighbor"):
        policy.observe(0, 1, forged, g.neighbors(0))


def test_isolated_client_updates_from_own_rewards_only():
    inst = pointmass([[0.0, 1.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    model = StaticGraph(make_disconnected_clique_graph(4, 1))
    policy = FullInfoLeaderPolicy()
    traj = sim.run(inst, model, policy, 50, 0)
    # isolated client 0 sees only itself: obs_count stays t, others 3t
    assert policy.obs_count[0] == 50
    assert (policy.obs_count[1:] == 150).all()
    assert (traj.actions[0, 1:] == 1).all()  # local leader on its own vector


def test_full_info_symmetric_states_on_complete_graph():
    inst = pointmass([[0.9, 0.1], [0.5, 0.5], [0.1, 0.9]])
    policy = FullInfoLeaderPolicy()
    sim.run(inst, StaticGraph(make_complete_graph(3)), policy, 30, 0)
    for m in (1, 2):
        assert np.array_equal(policy.obs_sum[0], policy.obs_sum[m])
        assert policy.obs_count[0] == policy.obs_count[m]


def test_full_info_leader_locks_optimum_from_t2_on_complete_graph():
    inst = pointmass([[0.2, 0.7], [0.1, 0.9], [0.3, 0.8]])
    traj = sim.run(inst, StaticGraph(make_complete_graph(3)), FullInfoLeaderPolicy(), 20, 0)
    assert (traj.actions[:, 1:] == 1).all()


def test_full_info_leader_breaks_ties_to_lowest_arm():
    inst = pointmass([[0.5, 0.5]] * 3)
    traj = sim.run(inst, StaticGraph(make_complete_graph(3)), FullInfoLeaderPolicy(), 10, 0)
    assert (traj.actions == 0).all()


# -- no-lookahead ---------------------------------------------------------------


class TailFlipped:
    """Wrapper flipping rewards after a cutoff; rng consumption unchanged."""

    def __init__(self, inner, cutoff):
        self.inner = inner
        self.cutoff = cutoff
        self.M, self.K = inner.M, inner.K

    @property
    def means(self):
        return self.inner.means

    def materialize(self, rng):
        self.inner = self.inner.materialize(rng)
        return self

    def sample_rewards(self, t, rng):
        r = self.inner.sample_rewards(t, rng)
        return 1.0 - r if t > self.cutoff else r


@pytest.mark.parametrize(
    "name,params",
    [
        ("gossip_ucb", {"C": 2.0}),
        ("exp3_gossip", {}),
        ("full_info_leader", {}),
        ("fixed", {"k": 1}),
        ("uniform_random", {}),
    ],
)
def test_no_lookahead_for_every_shipped_policy(name, params):
    inst = make_bernoulli_instance(4, [0.7, 0.4])
    model = StaticGraph(make_complete_graph(4))
    cutoff, T = 50, 100
    base = sim.run(inst, model, make_policy(name, **params), T, 99)
    flipped = sim.run(TailFlipped(inst, cutoff), model, make_policy(name, **params), T, 99)
    assert np.array_equal(base.actions[:, :cutoff], flipped.actions[:, :cutoff])


def test_make_policy_rejects_unknown_names_and_missing_params():
    with pytest.raises(PolicyError):
        make_policy("nope")
    with pytest.raises(PolicyError):
        make_policy("fixed")
