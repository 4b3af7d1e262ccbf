from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from banditlab.enumeration import (
    EnumerationError,
    enumerate_min_regret,
    information_ordering_grid,
)
from banditlab.envs import Bernoulli, Instance, PointMass
from banditlab.graphs import Graph, make_complete_graph, make_path_graph
from banditlab.policies import InfoModel


def tiny(rows):
    return Instance(name="tiny", dists=tuple(tuple(r) for r in rows))


def edgeless(M):
    return Graph(np.eye(M, dtype=bool))


BIT = Bernoulli(0.5)


def test_all_pointmass_instance_has_zero_minimum_in_both_classes():
    inst = tiny([[PointMass(0.75), PointMass(0.25)]] * 3)
    g = make_complete_graph(3)
    for model in InfoModel:
        assert enumerate_min_regret(inst, g, 2, model) == 0


def test_full_information_never_worse_than_bandit():
    inst = tiny(
        [
            [BIT, PointMass(0.75)],
            [PointMass(0.0), PointMass(0.0)],
            [PointMass(0.0), PointMass(0.0)],
        ]
    )
    g = make_complete_graph(3)
    f = enumerate_min_regret(inst, g, 2, InfoModel.FULL_NEIGHBORS)
    b = enumerate_min_regret(inst, g, 2, InfoModel.BANDIT_NEIGHBORS)
    assert f <= b
    # Frozen oracle values: revealing the bit costs the bandit class extra.
    assert f == Fraction(1, 24)
    assert b == Fraction(5, 72)


def test_exact_values_are_rational():
    inst = tiny(
        [
            [BIT, PointMass(0.5)],
            [PointMass(0.5), PointMass(0.5)],
            [PointMass(0.5), PointMass(0.5)],
        ]
    )
    value = enumerate_min_regret(inst, make_complete_graph(3), 2, InfoModel.FULL_NEIGHBORS)
    assert isinstance(value, Fraction)
    assert value == Fraction(1, 12)


def test_horizon_one_identical_across_models():
    inst = tiny(
        [
            [BIT, PointMass(0.75)],
            [PointMass(0.25), PointMass(0.5)],
            [PointMass(1.0), PointMass(0.0)],
        ]
    )
    g = make_path_graph(3)
    f = enumerate_min_regret(inst, g, 1, InfoModel.FULL_NEIGHBORS)
    b = enumerate_min_regret(inst, g, 1, InfoModel.BANDIT_NEIGHBORS)
    assert f == b  # no messages arrive before the only decision


def test_edgeless_step1_graph_weakly_increases_both_minima():
    inst = tiny(
        [
            [BIT, PointMass(0.75)],
            [PointMass(0.0), PointMass(0.0)],
            [PointMass(0.0), PointMass(0.0)],
        ]
    )
    comp = make_complete_graph(3)
    for model in InfoModel:
        base = enumerate_min_regret(inst, comp, 2, model)
        degraded = enumerate_min_regret(inst, [edgeless(3), comp], 2, model)
        assert degraded >= base


def test_edgeless_step2_graph_changes_nothing():
    # Information for the step-2 decision flows along the step-1 graph only.
    inst = tiny(
        [
            [BIT, PointMass(0.75)],
            [PointMass(0.0), PointMass(0.0)],
            [PointMass(0.0), PointMass(0.0)],
        ]
    )
    comp = make_complete_graph(3)
    for model in InfoModel:
        assert enumerate_min_regret(inst, [comp, edgeless(3)], 2, model) == (
            enumerate_min_regret(inst, comp, 2, model)
        )


def test_ordering_holds_on_whole_grid():
    for case in information_ordering_grid():
        f = enumerate_min_regret(case.instance, case.graph, 2, InfoModel.FULL_NEIGHBORS)
        b = enumerate_min_regret(case.instance, case.graph, 2, InfoModel.BANDIT_NEIGHBORS)
        assert f <= b, case.label


def test_grid_contains_strictly_separated_cases():
    strict = 0
    for case in information_ordering_grid():
        f = enumerate_min_regret(case.instance, case.graph, 2, InfoModel.FULL_NEIGHBORS)
        b = enumerate_min_regret(case.instance, case.graph, 2, InfoModel.BANDIT_NEIGHBORS)
        strict += f < b
    assert strict >= 4


def test_enumerability_bounds_enforced():
    ok = tiny(
        [
            [BIT, PointMass(0.5)],
            [PointMass(0.5), PointMass(0.5)],
            [PointMass(0.5), PointMass(0.5)],
        ]
    )
    g = make_complete_graph(3)
    with pytest.raises(EnumerationError):
        enumerate_min_regret(ok, g, 3, InfoModel.FULL_NEIGHBORS)
    two_bits = tiny(
        [
            [BIT, BIT],
            [PointMass(0.5), PointMass(0.5)],
            [PointMass(0.5), PointMass(0.5)],
        ]
    )
    with pytest.raises(EnumerationError):
        enumerate_min_regret(two_bits, g, 2, InfoModel.FULL_NEIGHBORS)
    biased = tiny(
        [
            [Bernoulli(0.6), PointMass(0.5)],
            [PointMass(0.5), PointMass(0.5)],
            [PointMass(0.5), PointMass(0.5)],
        ]
    )
    with pytest.raises(EnumerationError):
        enumerate_min_regret(biased, g, 2, InfoModel.FULL_NEIGHBORS)
    with pytest.raises(EnumerationError):
        enumerate_min_regret(ok, make_complete_graph(4), 2, InfoModel.FULL_NEIGHBORS)
