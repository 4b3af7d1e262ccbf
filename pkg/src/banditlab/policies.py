"""Decentralized bandit policies and the information-model contract.

A policy declares which information model it runs under:

* ``BANDIT_NEIGHBORS`` — each step a client sees, for every neighbor (self
  included), the tuple (neighbor id, pulled arm, realized reward).
* ``FULL_NEIGHBORS`` — additionally the full realized reward vector of every
  neighbor, i.e. all K arms.

The bandit-model message content is always derivable from the full-model
content, so the bandit message set is a subset of the full one.

Arms and clients are 0-based in code. Ties in every argmax break toward the
lowest arm index. Gossip policies mix their per-client state rows with
neighbor rows through the step's doubly stochastic weight matrix at the end
of each step; the mixing moves information one hop per step along the
current graph's edges.
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple

import numpy as np

from banditlab.graphs import Graph

__all__ = [
    "InfoModel",
    "Message",
    "PolicyError",
    "Policy",
    "FixedArmPolicy",
    "UniformRandomPolicy",
    "GossipUCBPolicy",
    "Exp3GossipPolicy",
    "FullInfoLeaderPolicy",
    "build_messages",
    "make_policy",
    "POLICY_NAMES",
]


class PolicyError(ValueError):
    """Invalid policy construction or protocol violation."""


class InfoModel(enum.Enum):
    BANDIT_NEIGHBORS = "bandit_neighbors"
    FULL_NEIGHBORS = "full_neighbors"


class Message(NamedTuple):
    """One neighbor's step report. ``all_rewards`` is None under the bandit model."""

    sender: int
    arm: int
    reward: float
    all_rewards: np.ndarray | None


def build_messages(
    model: InfoModel,
    graph: Graph,
    actions: np.ndarray,
    reward_matrix: np.ndarray,
) -> list[list[Message]]:
    """Per-client message lists for one step, senders sorted, self included."""
    M = graph.node_count
    out: list[list[Message]] = []
    for m in range(M):
        msgs = []
        for j in graph.neighbors(m):
            a = int(actions[j])
            if model is InfoModel.FULL_NEIGHBORS:
                msgs.append(Message(j, a, float(reward_matrix[j, a]), reward_matrix[j].copy()))
            else:
                msgs.append(Message(j, a, float(reward_matrix[j, a]), None))
        out.append(msgs)
    return out


class Policy:
    """Base policy: per-client decision rule under a declared information model.

    The simulator drives the batch interface (`act_all`, `observe_all`);
    the default implementations loop over the per-client `act` / `observe`
    hooks so simple policies only implement those.
    """

    info_model: InfoModel = InfoModel.BANDIT_NEIGHBORS
    name: str = "base"

    def __init__(self) -> None:
        self.M = 0
        self.K = 0
        self.rng: np.random.Generator | None = None

    def params(self) -> dict:
        return {}

    def reset(self, M: int, K: int, rng: np.random.Generator) -> None:
        self.M = M
        self.K = K
        self.rng = rng

    # -- batch interface driven by the simulator ---------------------------

    def act_all(self, t: int) -> np.ndarray:
        return np.array([self.act(m, t) for m in range(self.M)], dtype=np.int64)

    def observe_all(
        self,
        t: int,
        graph: Graph,
        weights: np.ndarray,
        actions: np.ndarray,
        pulled: np.ndarray,
        reward_matrix: np.ndarray | None,
    ) -> None:
        if self.info_model is InfoModel.FULL_NEIGHBORS:
            if reward_matrix is None:
                raise PolicyError("full-information policy needs the reward matrix")
            matrix = reward_matrix
        else:
            # Bandit model: reconstruct the visible matrix from pulled entries only.
            matrix = np.zeros((self.M, self.K))
            matrix[np.arange(self.M), actions] = pulled
        msgs = build_messages(self.info_model, graph, actions, matrix)
        for m in range(self.M):
            self.observe(m, t, msgs[m], graph.neighbors(m))

    # -- per-client hooks ---------------------------------------------------

    def act(self, m: int, t: int) -> int:
        raise NotImplementedError

    def observe(self, m: int, t: int, messages: list[Message], neighbors) -> None:
        raise NotImplementedError

    @staticmethod
    def check_senders(m: int, messages: list[Message], neighbors) -> None:
        """Guard against simulator bugs: reject messages from non-neighbors."""
        allowed = set(int(j) for j in neighbors) | {m}
        for msg in messages:
            if msg.sender not in allowed:
                raise PolicyError(
                    f"client {m} received a message from non-neighbor {msg.sender}"
                )


class FixedArmPolicy(Policy):
    """Always pulls the same arm (0-based)."""

    name = "fixed"

    def __init__(self, arm: int) -> None:
        super().__init__()
        if arm < 0:
            raise PolicyError(f"arm must be >= 0, got {arm}")
        self.arm = arm

    def params(self) -> dict:
        return {"arm": self.arm}

    def reset(self, M: int, K: int, rng: np.random.Generator) -> None:
        super().reset(M, K, rng)
        if self.arm >= K:
            raise PolicyError(f"fixed arm {self.arm} out of range for K={K}")

    def act_all(self, t: int) -> np.ndarray:
        return np.full(self.M, self.arm, dtype=np.int64)

    def act(self, m: int, t: int) -> int:
        return self.arm

    def observe_all(self, t, graph, weights, actions, pulled, reward_matrix) -> None:
        pass

    def observe(self, m, t, messages, neighbors) -> None:
        pass


class UniformRandomPolicy(Policy):
    """Every client pulls a uniformly random arm each step."""

    name = "uniform_random"

    def act_all(self, t: int) -> np.ndarray:
        return self.rng.integers(0, self.K, size=self.M)

    def observe_all(self, t, graph, weights, actions, pulled, reward_matrix) -> None:
        pass


class GossipUCBPolicy(Policy):
    """UCB on gossip-averaged mean estimates.

    Each client tracks its own sample means and a consensus estimate of the
    global arm means, updated once per step as z <- W z + (own-mean
    increments). The first K steps are a forced round-robin (arm t at step
    t <= K) so every count is positive before indices apply; afterwards a
    client plays argmax_i z_i + sqrt(C * log t / n_i) on its own counts.
    """

    name = "gossip_ucb"

    def __init__(self, C: float = 2.0) -> None:
        super().__init__()
        if C < 0:
            raise PolicyError(f"exploration constant must be >= 0, got {C}")
        self.C = float(C)

    def params(self) -> dict:
        return {"C": self.C}

    def reset(self, M: int, K: int, rng: np.random.Generator) -> None:
        super().reset(M, K, rng)
        self.counts = np.zeros((M, K), dtype=np.int64)
        self.sums = np.zeros((M, K))
        self._prev_means = np.zeros((M, K))
        self.consensus = np.zeros((M, K))

    def act_all(self, t: int) -> np.ndarray:
        if t <= self.K:
            return np.full(self.M, t - 1, dtype=np.int64)
        bonus = np.sqrt(self.C * math.log(t) / np.maximum(self.counts, 1))
        bonus[self.counts == 0] = np.inf
        return np.argmax(self.consensus + bonus, axis=1)

    def observe_all(self, t, graph, weights, actions, pulled, reward_matrix) -> None:
        rows = np.arange(self.M)
        self.counts[rows, actions] += 1
        self.sums[rows, actions] += pulled
        means = self.sums / np.maximum(self.counts, 1)
        self.consensus = weights @ self.consensus + (means - self._prev_means)
        self._prev_means = means


class Exp3GossipPolicy(Policy):
    """Per-client EXP3 with importance-weighted own-reward estimates.

    Probabilities are (1 - gamma_t) * softmax(logw) + gamma_t / K with
    gamma_t = min(1, gamma0 * sqrt(log K / t)); after each step the
    log-weights are averaged with neighbors through the weight matrix.
    gamma0 = 0 disables learning entirely (stays uniform).
    """

    name = "exp3_gossip"

    def __init__(self, gamma0: float = 1.0) -> None:
        super().__init__()
        if gamma0 < 0:
            raise PolicyError(f"gamma0 must be >= 0, got {gamma0}")
        self.gamma0 = float(gamma0)

    def params(self) -> dict:
        return {"gamma0": self.gamma0}

    def reset(self, M: int, K: int, rng: np.random.Generator) -> None:
        super().reset(M, K, rng)
        self.logw = np.zeros((M, K))
        self._last_probs: np.ndarray | None = None

    def gamma(self, t: int) -> float:
        if self.gamma0 == 0.0:
            return 0.0
        return min(1.0, self.gamma0 * math.sqrt(math.log(self.K) / t))

    def probabilities(self, t: int) -> np.ndarray:
        g = self.gamma(t)
        z = self.logw - self.logw.max(axis=1, keepdims=True)
        w = np.exp(z)
        p = w / w.sum(axis=1, keepdims=True)
        return (1.0 - g) * p + g / self.K

    def act_all(self, t: int) -> np.ndarray:
        p = self.probabilities(t)
        self._last_probs = p
        u = self.rng.random((self.M, 1))
        arms = (np.cumsum(p, axis=1) < u).sum(axis=1)
        return np.minimum(arms, self.K - 1)

    def observe_all(self, t, graph, weights, actions, pulled, reward_matrix) -> None:
        g = self.gamma(t)
        if g == 0.0:
            return
        p = self._last_probs if self._last_probs is not None else self.probabilities(t)
        rows = np.arange(self.M)
        estimates = pulled / p[rows, actions]
        self.logw[rows, actions] += g * estimates / self.K
        self.logw = weights @ self.logw
        self.logw -= self.logw.max(axis=1, keepdims=True)


class FullInfoLeaderPolicy(Policy):
    """Follow-the-leader on all observed full reward vectors.

    Under the full-information model every message carries a neighbor's
    complete reward vector; each client plays the argmax of the running
    average over everything it has seen (zeros before any observation,
    ties to the lowest index). An isolated client reduces to the local
    leader on its own full vectors.
    """

    name = "full_info_leader"
    info_model = InfoModel.FULL_NEIGHBORS

    def reset(self, M: int, K: int, rng: np.random.Generator) -> None:
        super().reset(M, K, rng)
        self.obs_sum = np.zeros((M, K))
        self.obs_count = np.zeros(M, dtype=np.int64)

    def act(self, m: int, t: int) -> int:
        if self.obs_count[m] == 0:
            return 0
        return int(np.argmax(self.obs_sum[m] / self.obs_count[m]))

    def observe(self, m: int, t: int, messages: list[Message], neighbors) -> None:
        self.check_senders(m, messages, neighbors)
        for msg in messages:
            if msg.all_rewards is None:
                raise PolicyError("full-information message lacks the reward vector")
            self.obs_sum[m] += msg.all_rewards
            self.obs_count[m] += 1


POLICY_NAMES = (
    "gossip_ucb",
    "exp3_gossip",
    "full_info_leader",
    "fixed",
    "uniform_random",
)


def make_policy(name: str, **params) -> Policy:
    """Config-facing policy factory. ``fixed`` takes a 1-based arm ``k``."""
    if name == "gossip_ucb":
        return GossipUCBPolicy(C=float(params.get("C", 2.0)))
    if name == "exp3_gossip":
        return Exp3GossipPolicy(gamma0=float(params.get("gamma0", 1.0)))
    if name == "full_info_leader":
        return FullInfoLeaderPolicy()
    if name == "fixed":
        if "k" not in params:
            raise PolicyError("fixed policy needs arm parameter k (1-based)")
        return FixedArmPolicy(arm=int(params["k"]) - 1)
    if name == "uniform_random":
        return UniformRandomPolicy()
    raise PolicyError(f"unknown policy {name!r}; known: {', '.join(POLICY_NAMES)}")
