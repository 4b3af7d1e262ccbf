"""Exhaustive minimal-regret search on tiny two-armed instances.

This is the desk-scale oracle for the information-ordering property: the
best achievable expected pseudo-regret under full neighbor information is
never worse than under bandit neighbor information, because every bandit
message is a function of the corresponding full message.

The enumerable instances carry exactly one stochastic cell — a latent bit
drawn uniformly from {0, 1} once per run and paid deterministically by that
(client, arm) cell at every step — and point masses everywhere else, so a
whole run has a single bit of environment randomness. The search enumerates
every deterministic policy: a step-1 arm per client plus, for T = 2, a
step-2 arm per client per distinguishable step-1 history under the declared
information model. Expected regret is the bit-average of the conditional
pseudo-regret (global-gap accounting, conditioned on the bit), computed in
exact rational arithmetic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from banditlab.envs import Bernoulli, Instance, PointMass
from banditlab.graphs import Graph, make_complete_graph, make_path_graph
from banditlab.policies import InfoModel

__all__ = [
    "EnumerationError",
    "enumerate_min_regret",
    "GridCase",
    "information_ordering_grid",
]

MAX_CLIENTS = 3
MAX_HORIZON = 2


class EnumerationError(ValueError):
    """Instance outside the enumerability bound."""


def _exact_means(inst: Instance) -> tuple[list[list[Fraction]], tuple[int, int] | None]:
    """Point-mass means as exact fractions plus the latent-bit cell position.

    At most one stochastic cell is allowed; an all-point-mass instance has
    no bit and both policy classes reduce to the same deterministic search.
    """
    if inst.K != 2:
        raise EnumerationError(f"enumeration needs K=2, got K={inst.K}")
    if inst.M > MAX_CLIENTS:
        raise EnumerationError(f"enumeration needs M <= {MAX_CLIENTS}, got M={inst.M}")
    bit_cell = None
    means: list[list[Fraction]] = []
    for m, row in enumerate(inst.dists):
        out_row = []
        for i, dist in enumerate(row):
            if isinstance(dist, Bernoulli):
                if dist.p != 0.5:
                    raise EnumerationError(
                        f"stochastic cell must be Bernoulli(1/2), got p={dist.p}"
                    )
                if bit_cell is not None:
                    raise EnumerationError("more than one stochastic cell")
                bit_cell = (m, i)
                out_row.append(Fraction(1, 2))  # placeholder, replaced per bit value
            elif isinstance(dist, PointMass):
                out_row.append(Fraction(dist.v))
            else:
                raise EnumerationError(f"unsupported arm distribution {dist!r}")
        means.append(out_row)
    return means, bit_cell


def _conditional_tables(means, bit_cell, M):
    """Per-bit reward tables, global means, and gap vectors."""
    rewards, gaps = {}, {}
    for x in (0, 1):
        table = [row.copy() for row in means]
        if bit_cell is not None:
            table[bit_cell[0]][bit_cell[1]] = Fraction(x)
        g = [sum(table[m][i] for m in range(M)) / M for i in range(2)]
        best = max(g)
        rewards[x] = table
        gaps[x] = [best - g[i] for i in range(2)]
    return rewards, gaps


def _history(model, graph, m, profile, rewards):
    """Client m's step-1 observation tuple under the information model."""
    out = []
    for j in graph.neighbors(m).tolist():
        a = profile[j]
        if model is InfoModel.FULL_NEIGHBORS:
            out.append((j, a, rewards[j][0], rewards[j][1]))
        else:
            out.append((j, a, rewards[j][a]))
    return tuple(out)


def enumerate_min_regret(inst: Instance, graphs, T: int, model: InfoModel) -> Fraction:
    """Exact minimal expected pseudo-regret over all deterministic policies.

    ``graphs`` is a single static graph or a per-step sequence; only the
    step-1 graph carries information into step 2. Returns an exact
    Fraction.
    """
    if not 1 <= T <= MAX_HORIZON:
        raise EnumerationError(f"enumeration needs T <= {MAX_HORIZON}, got T={T}")
    if isinstance(graphs, Graph):
        graphs = [graphs] * T
    graphs = list(graphs)
    if len(graphs) < T:
        raise EnumerationError(f"need a graph per step: got {len(graphs)} for T={T}")
    M = inst.M
    if any(g.node_count != M for g in graphs):
        raise EnumerationError("graph node count does not match the instance")
    means, bit_cell = _exact_means(inst)
    rewards, gaps = _conditional_tables(means, bit_cell, M)

    def step_regret(x: int, actions) -> Fraction:
        return sum(gaps[x][a] for a in actions) / M

    best_total: Fraction | None = None
    for profile in itertools.product((0, 1), repeat=M):
        step1 = (step_regret(0, profile) + step_regret(1, profile)) / 2
        if T == 1:
            total = step1
        else:
            g1 = graphs[0]
            h0 = [_history(model, g1, m, profile, rewards[0]) for m in range(M)]
            h1 = [_history(model, g1, m, profile, rewards[1]) for m in range(M)]
            # Step-2 map per client: one arm per distinguishable history.
            choice_sets = [
                itertools.product((0, 1), repeat=2) if h0[m] != h1[m] else [(a, a) for a in (0, 1)]
                for m in range(M)
            ]
            best_step2: Fraction | None = None
            for maps in itertools.product(*choice_sets):
                a0 = [maps[m][0] for m in range(M)]
                a1 = [maps[m][1] for m in range(M)]
                value = (step_regret(0, a0) + step_regret(1, a1)) / 2
                if best_step2 is None or value < best_step2:
                    best_step2 = value
            total = step1 + best_step2
        if best_total is None or total < best_total:
            best_total = total
    return best_total


@dataclass(frozen=True)
class GridCase:
    """One enumerable test case: instance plus a named graph."""

    label: str
    instance: Instance
    graph_name: str
    graph: Graph


def information_ordering_grid() -> list[GridCase]:
    """Enumerable M=3, K=2, T=2 cases over complete and path graphs.

    Point-mass values come from the binary-exact set {0, 1/4, 1/2, 3/4, 1};
    the latent-bit cell rotates over every (client, arm) position.
    """
    value_patterns = [
        # (bit client's other arm, other clients' rows)
        (0.5, ((0.5, 0.5), (0.5, 0.5))),
        (0.75, ((0.25, 0.75), (0.5, 0.25))),
        (0.25, ((1.0, 0.0), (0.0, 1.0))),
        (1.0, ((0.5, 0.75), (0.25, 0.5))),
        # Revealing the bit costs more than playing the safe arm, so the
        # bandit-model minimum is strictly above the full-information one.
        (0.75, ((0.0, 0.0), (0.0, 0.0))),
    ]
    graphs = [("complete", make_complete_graph(3)), ("path", make_path_graph(3))]
    cases = []
    for bit_client, bit_arm in itertools.product(range(3), range(2)):
        for p_idx, (other_arm_value, other_rows) in enumerate(value_patterns):
            rows = []
            others = iter(other_rows)
            for m in range(3):
                if m == bit_client:
                    row = [None, None]
                    row[bit_arm] = Bernoulli(0.5)
                    row[1 - bit_arm] = PointMass(other_arm_value)
                    rows.append(tuple(row))
                else:
                    a, b = next(others)
                    rows.append((PointMass(a), PointMass(b)))
            inst = Instance(
                name=f"tiny(bit=({bit_client},{bit_arm}),pattern={p_idx})",
                dists=tuple(rows),
            )
            for graph_name, graph in graphs:
                cases.append(
                    GridCase(
                        label=f"{inst.name}@{graph_name}",
                        instance=inst,
                        graph_name=graph_name,
                        graph=graph,
                    )
                )
    return cases
