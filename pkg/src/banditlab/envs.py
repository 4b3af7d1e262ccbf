"""Reward environments: generic stochastic instances and the hard constructions.

Three named constructions ship with the package:

* ``isolated_clique`` — a disconnected-clique conflict instance: clients in
  the clique see a point-mass payout only on arm 2, everyone else only on
  arm 1, so the clique's local optimum is globally suboptimal.
* ``latent_coin`` — a two-armed instance where arm 1 of every non-clique
  client pays a coin value x drawn uniformly from {0, 1} once per run and
  fixed; the identity of the globally optimal arm flips with x.
* ``epoch_adversary`` — an epoch-resampled environment on a dumbbell graph:
  only the left end set I0 earns anything, one secretly favored I0 client
  (redrawn every ``epoch_length`` steps) has a Bernoulli(1/2 + eps) first
  arm, everything else in I0 is Bernoulli(1/2), and rewards outside I0 are
  identically zero.

All rewards live in [0, 1] (Bernoulli or point mass). Global statistics
average per-client means across clients; ties on the optimal arm go to the
lowest arm index.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "InstanceError",
    "Bernoulli",
    "PointMass",
    "LatentCoin",
    "GlobalStats",
    "Instance",
    "EpochAdversaryInstance",
    "LatentCoinSpec",
    "global_stats",
    "instance_from_means",
    "make_bernoulli_instance",
    "make_isolated_clique_instance",
    "make_latent_coin_instance",
    "latent_coin_spec",
    "make_epoch_adversary_instance",
    "epoch_schedule",
    "resample_epoch_state",
    "sample_rewards",
    "load_means_instance",
]


class InstanceError(ValueError):
    """Invalid instance construction or use."""


@dataclass(frozen=True)
class Bernoulli:
    """Bernoulli arm with success probability p; rewards in {0, 1}."""

    p: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise InstanceError(f"Bernoulli parameter must be in [0, 1], got {self.p}")

    @property
    def mean(self) -> float:
        return self.p


@dataclass(frozen=True)
class PointMass:
    """Deterministic arm paying v every pull."""

    v: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.v <= 1.0:
            raise InstanceError(f"PointMass value must be in [0, 1], got {self.v}")

    @property
    def mean(self) -> float:
        return self.v


ArmDistribution = Bernoulli | PointMass


@dataclass(frozen=True)
class LatentCoin:
    """Coin value drawn once at run start and fixed for the whole horizon."""

    x: int

    def __post_init__(self) -> None:
        if self.x not in (0, 1):
            raise InstanceError(f"latent coin must be 0 or 1, got {self.x}")


@dataclass(frozen=True)
class GlobalStats:
    """Per-arm global means, the optimal arm, and suboptimality gaps."""

    global_means: np.ndarray
    optimal_arm: int
    gaps: np.ndarray

    @property
    def K(self) -> int:
        return self.global_means.shape[0]


@dataclass(frozen=True)
class Instance:
    """Stochastic instance: an M x K grid of arm distributions.

    ``latent`` records the realized coin for latent-coin constructions; the
    per-client means already reflect it.
    """

    name: str
    dists: tuple[tuple[ArmDistribution, ...], ...]
    latent: LatentCoin | None = None

    def __post_init__(self) -> None:
        if len(self.dists) < 3:
            raise InstanceError(f"need at least 3 clients, got {len(self.dists)}")
        K = len(self.dists[0])
        if K < 2:
            raise InstanceError(f"need at least 2 arms, got {K}")
        if any(len(row) != K for row in self.dists):
            raise InstanceError("all clients must have the same arm count")

    @property
    def M(self) -> int:
        return len(self.dists)

    @property
    def K(self) -> int:
        return len(self.dists[0])

    @cached_property
    def means(self) -> np.ndarray:
        """Per-client per-arm means, shape (M, K)."""
        out = np.array([[d.mean for d in row] for row in self.dists])
        out.setflags(write=False)
        return out

    @cached_property
    def _bernoulli_mask(self) -> np.ndarray:
        out = np.array(
            [[isinstance(d, Bernoulli) for d in row] for row in self.dists]
        )
        out.setflags(write=False)
        return out

    def materialize(self, rng: np.random.Generator) -> "Instance":
        return self

    def sample_rewards(self, t: int, rng: np.random.Generator) -> np.ndarray:
        """One M x K reward matrix; clients draw independently."""
        u = rng.random((self.M, self.K))
        return np.where(self._bernoulli_mask, (u < self.means).astype(float), self.means)


@dataclass(frozen=True)
class LatentCoinSpec:
    """Deferred latent-coin instance; the coin is drawn when a run materializes it."""

    M: int
    Q: int
    name: str = "latent_coin"

    @property
    def K(self) -> int:
        return 2

    def materialize(self, rng: np.random.Generator) -> Instance:
        return make_latent_coin_instance(self.M, self.Q, rng)


@dataclass(frozen=True)
class EpochAdversaryInstance:
    """Epoch-resampled adversary on two distinguished node sets.

    Bound bookkeeping held by construction: epsilon <= 1/4,
    8*epsilon^2*epoch_length <= 1 (hence epsilon*sqrt(2*epoch_length) <= 1/2),
    and epoch_count = floor(T / epoch_length). When the horizon is not a
    multiple of the epoch length, the trailing partial epoch reuses the last
    state.
    """

    M: int
    T: int
    eta: float
    epsilon: float
    epoch_length: int
    epoch_count: int
    I0: frozenset[int]
    I1: frozenset[int]
    epoch_states: tuple[int, ...] | None = None
    name: str = "epoch_adversary"

    @property
    def K(self) -> int:
        return 2

    @cached_property
    def _i0_rows(self) -> np.ndarray:
        out = np.array(sorted(self.I0), dtype=int)
        out.setflags(write=False)
        return out

    @cached_property
    def means(self) -> np.ndarray:
        """Per-client means marginalized over the uniform epoch state."""
        q = len(self.I0)
        out = np.zeros((self.M, 2))
        out[self._i0_rows, 0] = 0.5 + self.epsilon / (q + 1)
        out[self._i0_rows, 1] = 0.5
        out.setflags(write=False)
        return out

    def materialize(self, rng: np.random.Generator) -> "EpochAdversaryInstance":
        """Draw the whole epoch-state sequence X_1..X_D uniformly on {0..|I0|}."""
        if self.epoch_states is not None:
            return self
        states = rng.integers(0, len(self.I0) + 1, size=self.epoch_count)
        return dataclasses.replace(self, epoch_states=tuple(int(x) for x in states))

    def epoch_of_step(self, t: int) -> int:
        """1-based epoch index of step t; the partial tail folds into the last epoch."""
        if not 1 <= t <= self.T:
            raise InstanceError(f"step {t} outside horizon 1..{self.T}")
        return min(self.epoch_count, (t - 1) // self.epoch_length + 1)

    def state_at_step(self, t: int) -> int:
        if self.epoch_states is None:
            raise InstanceError("epoch states not materialized; call materialize(rng)")
        return self.epoch_states[self.epoch_of_step(t) - 1]

    def conditional_means(self, state: int) -> np.ndarray:
        """Per-client means during an epoch with the given state (0 = nobody favored)."""
        out = np.zeros((self.M, 2))
        out[self._i0_rows, :] = 0.5
        if state >= 1:
            out[state - 1, 0] = 0.5 + self.epsilon
        return out

    def sample_rewards(self, t: int, rng: np.random.Generator) -> np.ndarray:
        p = self.conditional_means(self.state_at_step(t))
        u = rng.random((self.M, 2))
        return (u < p).astype(float)


def global_stats(inst) -> GlobalStats:
    """Global per-arm means (client average), the optimal arm, and gaps.

    Epoch adversaries report means marginalized over the uniform epoch
    state; latent-coin instances report the means of the realized coin.
    Ties on the optimal arm break toward the lowest arm index.
    """
    means = np.asarray(inst.means)
    g = means.mean(axis=0)
    best = int(np.argmax(g))
    gaps = g[best] - g
    g.setflags(write=False)
    gaps.setflags(write=False)
    return GlobalStats(global_means=g, optimal_arm=best, gaps=gaps)


def sample_rewards(inst, t: int, rng: np.random.Generator) -> np.ndarray:
    """Sample the M x K reward matrix of step t."""
    return inst.sample_rewards(t, rng)


def instance_from_means(
    means, kind: str = "bernoulli", name: str = "custom"
) -> Instance:
    """Build an instance from an M x K mean table (Bernoulli or point-mass arms)."""
    arr = np.asarray(means, dtype=float)
    if arr.ndim != 2:
        raise InstanceError(f"mean table must be 2-D, got shape {arr.shape}")
    if kind == "bernoulli":
        mk = Bernoulli
    elif kind == "pointmass":
        mk = PointMass
    else:
        raise InstanceError(f"unknown arm kind {kind!r}")
    rows = tuple(tuple(mk(float(v)) for v in row) for row in arr)
    return Instance(name=name, dists=rows)


def make_bernoulli_instance(M: int, arm_means) -> Instance:
    """Homogeneous instance: every client shares the same Bernoulli arm means."""
    row = [float(v) for v in arm_means]
    return instance_from_means(
        [row] * M, kind="bernoulli", name=f"bernoulli(M={M},means={row})"
    )


def make_isolated_clique_instance(M: int, Q: int, delta: float, K: int = 2) -> Instance:
    """Disconnected-clique conflict instance (point-mass arms).

    Clients outside the clique pay (M-1)/(M-Q)*delta on arm 1 and nothing
    elsewhere; the Q clique clients pay 2*delta/Q on arm 2 only. Globally
    arm 1 has mean (M-1)*delta/M, arm 2 has 2*delta/M, and the gap of arm 2
    is (M-3)*delta/M.
    """
    if M <= 3:
        raise InstanceError(f"need M > 3 for a positive gap, got M={M}")
    if not 1 <= Q < M:
        raise InstanceError(f"need 1 <= Q < M, got M={M}, Q={Q}")
    if K < 2:
        raise InstanceError(f"need at least 2 arms, got K={K}")
    if delta <= 0:
        raise InstanceError(f"delta must be positive, got {delta}")
    outside = (M - 1) / (M - Q) * delta
    clique = 2.0 * delta / Q
    if outside > 1.0:
        raise InstanceError(
            f"(M-1)/(M-Q)*delta = {outside} exceeds 1; need delta <= (M-Q)/(M-1)"
        )
    if clique > 1.0:
        raise InstanceError(f"2*delta/Q = {clique} exceeds 1")
    zero = PointMass(0.0)
    clique_row = (zero, PointMass(clique)) + (zero,) * (K - 2)
    outside_row = (PointMass(outside), zero) + (zero,) * (K - 2)
    rows = tuple(clique_row if m < Q else outside_row for m in range(M))
    return Instance(name=f"isolated_clique(M={M},Q={Q},delta={delta})", dists=rows)


def make_latent_coin_instance(M: int, Q: int, rng: np.random.Generator) -> Instance:
    """Coin-flip instance (two arms, point masses).

    Draws x uniformly from {0, 1} once; non-clique clients pay x on arm 1
    and 1/2 on arm 2, clique clients pay 1/2 on both. The optimal arm is
    arm 1 when x = 1 and arm 2 when x = 0; the gap is (M-Q)/(2M) either way.
    """
    if M < 3:
        raise InstanceError(f"need M >= 3, got {M}")
    if not 1 <= Q < M:
        raise InstanceError(f"need 1 <= Q < M, got M={M}, Q={Q}")
    x = int(rng.integers(0, 2))
    half = PointMass(0.5)
    rows = tuple(
        (half, half) if m < Q else (PointMass(float(x)), half) for m in range(M)
    )
    return Instance(
        name=f"latent_coin(M={M},Q={Q})", dists=rows, latent=LatentCoin(x)
    )


def latent_coin_spec(M: int, Q: int) -> LatentCoinSpec:
    """Deferred latent-coin instance: each run draws its own coin."""
    if M < 3:
        raise InstanceError(f"need M >= 3, got {M}")
    if not 1 <= Q < M:
        raise InstanceError(f"need 1 <= Q < M, got M={M}, Q={Q}")
    return LatentCoinSpec(M=M, Q=Q)


def _cbrt(T: int) -> float:
    """Cube root, exact for perfect cubes (keeps schedule arithmetic exact)."""
    r = round(T ** (1.0 / 3.0))
    for cand in (r - 1, r, r + 1):
        if cand > 0 and cand**3 == T:
            return float(cand)
    return T ** (1.0 / 3.0)


def epoch_schedule(M: int, T: int, eta: float) -> tuple[float, int, int]:
    """The (epsilon, epoch_length, epoch_count) triple of the adversary's schedule.

    epsilon = sqrt(4/eta) * (M^2/2) * T^(-1/3), epoch_length = ceil(eta*M/8),
    epoch_count = floor(T / epoch_length).
    """
    d = math.ceil(eta * M / 8)
    eps = math.sqrt(4.0 / eta) * (M * M / 2.0) / _cbrt(T)
    return eps, d, T // d


def make_epoch_adversary_instance(
    M: int, T: int, eta: float, epsilon: float | None = None
) -> EpochAdversaryInstance:
    """Epoch-resampled adversary with end sets I0 = first M/4, I1 = last M/4 nodes.

    With ``epsilon=None`` the advantage follows the horizon schedule
    sqrt(4/eta)*(M^2/2)*T^(-1/3); an explicit epsilon overrides it (used by
    the desk-scale sweep presets). Either way the construction's feasibility
    constraints are enforced and violations name the failing inequality.
    """
    if M < 4 or M % 4 != 0:
        raise InstanceError(f"M mod 4 = 0 violated: M = {M}")
    if T <= 8:
        raise InstanceError(f"T > 8 violated: T = {T}")
    if not 0 < eta <= 4:
        raise InstanceError(f"0 < eta <= 4 violated: eta = {eta}")
    sched_eps, d, D = epoch_schedule(M, T, eta)
    eps = sched_eps if epsilon is None else float(epsilon)
    if eps <= 0:
        raise InstanceError(f"epsilon > 0 violated: epsilon = {eps}")
    if eps > 0.25:
        raise InstanceError(f"epsilon <= 1/4 violated: epsilon = {eps}")
    if 8.0 * eps * eps * d > 1.0 + 1e-12:
        raise InstanceError(
            f"8*epsilon^2*d <= 1 violated: 8*{eps}^2*{d} = {8.0 * eps * eps * d}"
        )
    # Follows from the previous bound; asserted because later Pinsker
    # bookkeeping depends on it.
    assert eps * math.sqrt(2.0 * d) <= 0.5 + 1e-12
    if D < 1:
        raise InstanceError(f"floor(T/d) >= 1 violated: T = {T}, d = {d}")
    q = M // 4
    return EpochAdversaryInstance(
        M=M,
        T=T,
        eta=eta,
        epsilon=eps,
        epoch_length=d,
        epoch_count=D,
        I0=frozenset(range(q)),
        I1=frozenset(range(3 * q, M)),
    )


def resample_epoch_state(
    inst: EpochAdversaryInstance, j: int, rng: np.random.Generator
) -> EpochAdversaryInstance:
    """Redraw epoch j's state uniformly on {0, .., |I0|}; returns the new instance."""
    if inst.epoch_states is None:
        raise InstanceError("epoch states not materialized; call materialize(rng)")
    if not 1 <= j <= inst.epoch_count:
        raise InstanceError(f"epoch index {j} outside 1..{inst.epoch_count}")
    states = list(inst.epoch_states)
    states[j - 1] = int(rng.integers(0, len(inst.I0) + 1))
    return dataclasses.replace(inst, epoch_states=tuple(states))


def load_means_instance(path, kind: str = "bernoulli") -> Instance:
    """Read a whitespace-separated M x K mean table, one client per row."""
    text = Path(path).read_text()
    rows = []
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        rows.append([float(v) for v in ln.split()])
    if not rows:
        raise InstanceError(f"no mean rows found in {path}")
    return instance_from_means(rows, kind=kind, name=f"custom({path})")
