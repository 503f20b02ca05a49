import numpy as np
import pytest

from causalbands.bounds import (
    BoundPair,
    Query,
    ate_of,
    ate_vs_best,
    backdoor_box_bounds,
    backdoor_point,
    graph_factorization,
    lp_bounds,
    slack_lp_bounds,
    tian_pearl_bow,
)
from causalbands.canon import interventional_joint, observational_joint
from causalbands.confset import confidence_box
from causalbands.dist import DiscreteJoint, sample
from causalbands.errors import CapabilityError, InfeasibleError, InputError, MismatchError, PositivityError
from causalbands.graph import backdoor_graph, bow_graph, iv_graph, two_confounder_graph, two_instrument_graph

from conftest import random_compatible_joint, random_scm

Q1 = Query("X", 1, "Y", 1)


def test_bound_pair_validation():
    with pytest.raises(InputError):
        BoundPair(0.6, 0.4, Q1, "lp")
    with pytest.raises(InputError):
        BoundPair(-0.5, 0.4, Q1, "lp")
    BoundPair(-0.5, 0.4, Query("X", 1, "Y", 1, 0), "lp")


@pytest.mark.parametrize("seed", range(10))
def test_bow_lp_equals_closed_form(seed):
    p = DiscreteJoint.random(bow_graph().nodes, seed)
    for x in (0, 1):
        for y in (0, 1):
            q = Query("X", x, "Y", y)
            lp, cf = lp_bounds(p, bow_graph(), q), tian_pearl_bow(p, x, y)
            assert abs(lp.lower - cf.lower) < 1e-9 and abs(lp.upper - cf.upper) < 1e-9


def test_closed_form_capability():
    with pytest.raises(CapabilityError):
        tian_pearl_bow(DiscreteJoint.uniform((("X", 3), ("Y", 2))))


@pytest.mark.parametrize("g", [iv_graph(), backdoor_graph(confounded=True), bow_graph()])
def test_truth_inside_lp_bounds(g):
    for seed in range(5):
        scm = random_scm(g, seed)
        p = observational_joint(scm)
        b = lp_bounds(p, g, Q1)
        truth = interventional_joint(scm, {"X": 1}).prob(Y=1)
        assert b.lower - 1e-9 <= truth <= b.upper + 1e-9


def test_markovian_graph_gives_point():
    g = two_confounder_graph()
    scm = random_scm(g, seed=1)
    b = lp_bounds(observational_joint(scm), g, Q1)
    assert b.width < 1e-9
    assert b.lower == pytest.approx(interventional_joint(scm, {"X": 1}).prob(Y=1), abs=1e-9)
    assert b.lower == pytest.approx(backdoor_point(observational_joint(scm), g, Q1), abs=1e-9)


def test_ate_bounds_and_optimizers():
    g = iv_graph()
    scm = random_scm(g, seed=8)
    p = observational_joint(scm)
    ate = Query("X", 1, "Y", 1, 0)
    b, xlo, xhi = lp_bounds(p, g, ate, return_optimizers=True)
    assert b.lower - 1e-9 <= ate_of(scm, "X", "Y") <= b.upper + 1e-9
    assert xlo.sum() == pytest.approx(1) and np.all(xhi >= -1e-12)
    best = ate_vs_best(p, g, "X", "Y", 1)
    assert best.lower == pytest.approx(b.lower) and best.upper == pytest.approx(b.upper)


def test_ate_vs_best_three_actions():
    g = bow_graph(card=3)
    g = type(g)((("X", 3), ("Y", 2)), g.directed_edges, g.bidirected_edges)
    scm = random_scm(g, seed=2)
    p = observational_joint(scm)
    b = ate_vs_best(p, g, "X", "Y", 0)
    assert b.query.baseline == -1
    assert b.lower - 1e-9 <= ate_of(scm, "X", "Y", 0) <= b.upper + 1e-9


def test_incompatible_joint():
    g = two_instrument_graph()
    t = random_compatible_joint(g, seed=0).table
    cond = t / t.sum(axis=(2, 3), keepdims=True)
    # same mechanisms, but I1 and I2 made dependent
    p = DiscreteJoint(g.nodes, cond * np.array([[0.4, 0.1], [0.1, 0.4]])[:, :, None, None])
    f, residual = graph_factorization(p, g)
    assert residual > 1e-6
    with pytest.raises(InfeasibleError):
        lp_bounds(p, g, Q1)
    lp_bounds(p, g, Q1, strict=False)


def test_mismatch():
    with pytest.raises(MismatchError):
        lp_bounds(DiscreteJoint.uniform((("X", 2), ("Z", 2))), bow_graph(), Q1)


def test_backdoor_point_and_box():
    g = backdoor_graph()
    scm = random_scm(g, seed=4)
    p = observational_joint(scm)
    truth = interventional_joint(scm, {"X": 1}).prob(Y=1)
    assert backdoor_point(p, g, Q1) == pytest.approx(truth, abs=1e-12)
    box = confidence_box(sample(p, 5000, seed=1), g)
    b = backdoor_box_bounds(box, g, Q1)
    assert b.lower <= truth <= b.upper
    with pytest.raises(CapabilityError):
        backdoor_point(observational_joint(random_scm(bow_graph(), 0)), bow_graph(), Q1)


def test_backdoor_positivity():
    g = backdoor_graph()
    t = np.zeros((2, 2, 2))
    t[0, 0, :] = 0.25
    t[1, 1, :] = 0.25
    with pytest.raises(PositivityError):
        backdoor_point(DiscreteJoint(g.nodes, t), g, Q1)


def test_slack_lp_widens_and_matches_at_zero():
    g = iv_graph()
    p = random_compatible_joint(g, seed=5)
    exact = lp_bounds(p, g, Q1)
    zero = slack_lp_bounds(p, g, Q1, 0.0)
    assert zero.lower == pytest.approx(exact.lower, abs=1e-8)
    assert zero.upper == pytest.approx(exact.upper, abs=1e-8)
    wide = slack_lp_bounds(p, g, Q1, 0.05)
    assert wide.lower <= exact.lower + 1e-9 and wide.upper >= exact.upper - 1e-9
