import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalbands.dist import (
    Dataset,
    DiscreteJoint,
    compose,
    conditional,
    empirical_joint,
    factorize,
    marginal,
    reorder,
    sample,
    tvd,
)
from causalbands.errors import CompositionError, InputError, PositivityError

VARS = (("A", 2), ("B", 3), ("C", 2))


def test_table_validation():
    with pytest.raises(InputError):
        DiscreteJoint(VARS, np.full(12, 0.1))
    with pytest.raises(InputError):
        DiscreteJoint(VARS, np.r_[-0.1, 1.1, np.zeros(10)])
    with pytest.raises(InputError):
        DiscreteJoint(VARS, np.zeros(11))


def test_prob_and_marginal():
    p = DiscreteJoint.random(VARS, seed=1)
    assert p.prob() == pytest.approx(1.0)
    m = marginal(p, ["C", "A"])
    assert m.names == ("A", "C")
    assert m.prob(A=1, C=0) == pytest.approx(p.prob(A=1, C=0))


def test_conditional_positivity():
    p = DiscreteJoint.point_mass(VARS, (0, 1, 1))
    assert np.allclose(conditional(p, "C", {"A": 0}), [0, 1])
    with pytest.raises(PositivityError):
        conditional(p, "C", {"A": 1})


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.permutations(["A", "B", "C"]))
def test_factorize_compose_round_trip(seed, order):
    p = DiscreteJoint.random(VARS, seed)
    back = compose(factorize(p, order))
    assert tvd(back, reorder(p, order)) < 1e-12


def test_degenerate_rows_need_resolution():
    p = DiscreteJoint.point_mass(VARS, (0, 0, 0))
    f = factorize(p, ["A", "B", "C"])
    assert f.has_degenerate
    with pytest.raises(CompositionError):
        compose(f)
    assert compose(f.resolved()).prob(A=0, B=0, C=0) == pytest.approx(1.0)


def test_factorize_rejects_bad_order():
    p = DiscreteJoint.uniform(VARS)
    with pytest.raises(InputError):
        factorize(p, ["A", "B"])
    with pytest.raises(InputError):
        factorize(p, ["A", "B", "C"], given={"A": ("B",), "B": (), "C": ()})


def test_sample_is_seeded_and_consistent():
    p = DiscreteJoint.random(VARS, seed=2)
    d1, d2 = sample(p, 20000, seed=5), sample(p, 20000, seed=5)
    assert np.array_equal(d1.rows, d2.rows)
    assert tvd(empirical_joint(d1), p) < 0.03


def test_dataset_csv_round_trip(tmp_path):
    d = sample(DiscreteJoint.uniform(VARS), 50, seed=0)
    path = tmp_path / "d.csv"
    path.write_text(d.to_csv())
    back = Dataset.from_csv(path, cards={"A": 2, "B": 3, "C": 2})
    assert back.variables == d.variables
    assert np.array_equal(back.rows, d.rows)


@pytest.mark.parametrize("text", ["A,B\n0,x\n", "A,B\n0\n", "A,B\n0,-1\n", ""])
def test_dataset_csv_errors(text):
    with pytest.raises(InputError):
        Dataset.from_csv(text, is_text=True)


def test_empirical_joint_needs_rows():
    with pytest.raises(InputError):
        empirical_joint(Dataset((("A", 2),), np.zeros((0, 1), dtype=int)))
