import math

import numpy as np
import pytest

from causalbands.canon import observational_joint
from causalbands.bounds import graph_factorization
from causalbands.confset import (
    Coordinate,
    build_epsilon_net,
    centroids,
    confidence_box,
    hoeffding_halfwidth,
    instrumental_inequality,
    reject_incompatible,
)
from causalbands.dist import Dataset, DiscreteJoint, sample
from causalbands.errors import InputError, MismatchError
from causalbands.graph import bow_graph, iv_graph

from conftest import random_scm


def test_hoeffding_values():
    assert hoeffding_halfwidth(1000, 0.05) == pytest.approx(math.sqrt(math.log(40) / 2000), abs=1e-12)
    with pytest.raises(InputError):
        hoeffding_halfwidth(10, 1.5)


def _iv_data(n=2000, seed=0):
    scm = random_scm(iv_graph(), seed=1)
    return scm, sample(observational_joint(scm), n, seed)


def test_box_coordinates_and_bonferroni():
    _, d = _iv_data()
    box = confidence_box(d, iv_graph(), alpha=0.1)
    # P(I=1), P(X=1|I=i), P(Y=1|I=i,X=x)
    assert box.m_total == 1 + 2 + 4
    assert box.coordinate_alpha == pytest.approx(0.1 / 7)
    for c in box.coordinates:
        assert 0 <= c.lo <= c.estimate <= c.hi <= 1
        assert c.hi - c.lo <= 2 * hoeffding_halfwidth(c.n, box.coordinate_alpha) + 1e-12
    assert sum(box.sample_counts[("X", (i,))] for i in (0, 1)) == len(d)


def test_box_contains_truth_at_large_n():
    scm, d = _iv_data(n=20000)
    g = iv_graph()
    f, _ = graph_factorization(observational_joint(scm), g)
    box = confidence_box(d, g)
    assert box.contains(f)
    assert box.center() is not None


def test_unobserved_history_gets_full_interval():
    d = Dataset((("X", 2), ("Y", 2)), np.array([[0, 0], [0, 1], [0, 1]]))
    box = confidence_box(d, bow_graph())
    c = next(c for c in box.coordinates if c.history == (1,))
    assert (c.lo, c.hi, c.n) == (0.0, 1.0, 0)


def test_misaligned_data():
    d = Dataset((("X", 2), ("Z", 2)), np.zeros((4, 2), dtype=int))
    with pytest.raises(MismatchError):
        confidence_box(d, bow_graph())
    d = Dataset((("X", 3), ("Y", 2)), np.zeros((4, 2), dtype=int))
    with pytest.raises(MismatchError):
        confidence_box(d, bow_graph())


def test_centroids_cover_interval():
    c = Coordinate("X", (), (), 1, 0.5, 0.3, 0.7, 100)
    pts = centroids(c, 0.05)
    assert np.allclose(pts, [0.35, 0.45, 0.55, 0.65])
    grid = np.linspace(0.3, 0.7, 1001)
    assert np.abs(grid[:, None] - pts[None, :]).min(axis=1).max() <= 0.05 + 1e-12
    assert np.allclose(centroids(Coordinate("X", (), (), 1, 0.5, 0.46, 0.54, 100), 0.01), [0.47, 0.49, 0.51, 0.53])
    assert np.array_equal(centroids(c, 1.0), [0.5])


def test_net_exhaustive_and_sampled():
    _, d = _iv_data()
    box = confidence_box(d, iv_graph())
    big = build_epsilon_net(box, eps_s=0.5, m=10**6)
    assert big.exhaustive and len(big) + big.invalid_draws == big.lattice_size
    small = build_epsilon_net(box, eps_s=0.01, m=50, seed=3)
    assert not small.exhaustive and len(small) == 50
    again = build_epsilon_net(box, eps_s=0.01, m=50, seed=3)
    assert [c.values for c in small.candidates] == [c.values for c in again.candidates]
    assert len({c.values for c in small.candidates}) == 50
    for cand in small.candidates:
        assert box.contains(cand.factorization, tol=1e-12)
    with pytest.raises(InputError):
        build_epsilon_net(box, eps_s=0)


def test_instrumental_inequality_rejection():
    g = iv_graph()
    ok = observational_joint(random_scm(g, seed=2))
    assert instrumental_inequality(ok, "I", "X", "Y") <= 1 + 1e-12
    # X and Y copy I exactly under opposite codings: violates the inequality
    t = np.zeros((2, 2, 2))
    t[0, 0, 0] = t[1, 0, 1] = 0.5
    bad = DiscreteJoint(g.nodes, t)
    assert instrumental_inequality(bad, "I", "X", "Y") > 1
    _, d = _iv_data()
    net = build_epsilon_net(confidence_box(d, g), eps_s=0.02, m=100)
    kept = reject_incompatible(net, g, "I", "X", "Y")
    assert len(kept) + kept.rejected_count == len(net)
    with pytest.raises(InputError):
        reject_incompatible(net, g, "X", "I", "Y")
