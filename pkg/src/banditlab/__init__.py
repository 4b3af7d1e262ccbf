"""Decentralized multi-agent bandit simulator and hard-instance laboratory.

A library plus CLI for constructing communication graphs (static and
temporal), stochastic and epoch-adversarial reward environments, running
decentralized bandit policies on them, and measuring how cumulative regret
scales with the horizon.
"""

from banditlab.graphs import (
    Graph,
    make_complete_graph,
    make_disconnected_clique_graph,
    make_path_graph,
    make_two_expander_graph,
    metropolis_weights,
)
from banditlab.envs import (
    EpochAdversaryInstance,
    GlobalStats,
    Instance,
    global_stats,
    make_epoch_adversary_instance,
    make_isolated_clique_instance,
    make_latent_coin_instance,
)
from banditlab.sim import Trajectory, run

__all__ = [
    "Graph",
    "make_complete_graph",
    "make_path_graph",
    "make_disconnected_clique_graph",
    "make_two_expander_graph",
    "metropolis_weights",
    "Instance",
    "EpochAdversaryInstance",
    "GlobalStats",
    "global_stats",
    "make_isolated_clique_instance",
    "make_latent_coin_instance",
    "make_epoch_adversary_instance",
    "Trajectory",
    "run",
]

__version__ = "0.1.0"
