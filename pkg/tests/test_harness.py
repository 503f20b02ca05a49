import json

import numpy as np
import pytest

from causalbands.bounds import Query, lp_bounds
from causalbands.canon import interventional_joint, observational_joint
from causalbands.errors import CapabilityError, InputError
from causalbands.graph import backdoor_graph, iv_graph
from causalbands.harness import (
    ExperimentSpec,
    Setup,
    brute_force_bounds,
    gen_random_scm,
    random_feasible_points,
    run_experiment,
    scm1,
    scm1_experiment,
    scm2_experiment,
    scm_from_cpts,
    true_effect,
    vertex_extremes,
)
from causalbands.bounds import canonical_constraints, graph_factorization

Q1 = Query("X", 1, "Y", 1)


def test_random_scm_is_seeded():
    a, b = gen_random_scm(iv_graph(), 5), gen_random_scm(iv_graph(), 5)
    assert all(np.array_equal(a.q[k], b.q[k]) for k in a.q)


def test_scm_from_cpts_reproduces_tables():
    g = backdoor_graph()
    cpts = {"Z": [0.3, 0.7], "X": [[0.9, 0.1], [0.2, 0.8]], "Y": [[[0.5, 0.5], [0.4, 0.6]], [[0.1, 0.9], [0.3, 0.7]]]}
    scm = scm_from_cpts(g, cpts)
    p = observational_joint(scm)
    assert p.prob(Z=1) == pytest.approx(0.7)
    assert p.prob(Z=1, X=1, Y=1) == pytest.approx(0.7 * 0.8 * 0.7)
    # no confounding: P(y | do(x)) is the adjustment formula
    assert true_effect(scm, Q1) == pytest.approx(0.3 * 0.6 + 0.7 * 0.7)
    with pytest.raises(InputError):
        scm_from_cpts(g, {**cpts, "Z": [0.3, 0.6]})


def test_vertex_extremes_small():
    A = np.array([[1.0, 1.0, 1.0]])
    lo, hi = vertex_extremes(A, np.array([1.0]), np.array([0.2, 0.5, 0.9]))
    assert (lo, hi) == (0.2, 0.9)
    with pytest.raises(CapabilityError):
        vertex_extremes(np.ones((5, 64)) + np.eye(5, 64), np.ones(5), np.zeros(64), limit=10)


def test_brute_force_agrees_with_lp():
    g = iv_graph()
    p = observational_joint(gen_random_scm(g, 9))
    lp, bf = lp_bounds(p, g, Q1), brute_force_bounds(p, g, Q1)
    assert abs(lp.lower - bf.lower) < 1e-8 and abs(lp.upper - bf.upper) < 1e-8


def test_random_feasible_points_stay_inside():
    g = iv_graph()
    scm = gen_random_scm(g, 2)
    f, _ = graph_factorization(observational_joint(scm), g)
    sys = canonical_constraints(f, g, "X")
    pts = random_feasible_points(sys.A_eq, sys.b_eq, 500, seed=1)
    assert len(pts) > 0
    assert np.all(pts >= 0)
    assert np.abs(pts @ sys.A_eq.T - sys.b_eq).max() < 1e-7


def test_scm1_fixture():
    scm = scm1()
    assert 0.2 < true_effect(scm, Query("X", 1, "Y", 1, 0)) < 0.3
    assert interventional_joint(scm, {"X": 1}).prob(Y=1) > interventional_joint(scm, {"X": 0}).prob(Y=1)


def test_spec_validation():
    g = iv_graph()
    with pytest.raises(InputError):
        ExperimentSpec(g, None, (), scm1_experiment().query)
    with pytest.raises(InputError):
        ExperimentSpec(g, None, (Setup("a", ("X", "Y"), 500), Setup("b", ("Y", "X"), 500)), scm1_experiment().query)
    with pytest.raises(InputError):
        ExperimentSpec(g, None, (Setup("a", ("Q",), 500),), scm1_experiment().query)


def test_spec_round_trip(tmp_path):
    spec = scm2_experiment()
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec.to_dict()))
    back = ExperimentSpec.load(path)
    assert back.setups == spec.setups and back.query == spec.query and back.graph == spec.graph


@pytest.mark.slow
def test_scm1_experiment_pattern(tmp_path):
    res = run_experiment(scm1_experiment(out_dir=tmp_path))
    assert {p.name for p in tmp_path.iterdir()} == {
        "setup1.json", "setup2.json", "setup3.json", "setup4.json", "summary.csv", "claims.json"
    }
    widths = {}
    for r in res.rows:
        widths.setdefault(r["setup"], []).append(r["mean_width"])
    # adding instruments narrows the candidate intervals
    assert np.mean(widths["setup1"]) > np.mean(widths["setup2"]) > np.mean(widths["setup3"])
    assert all(res.claims[k] for k in res.claims if k.startswith("mean_width_shrinks"))
