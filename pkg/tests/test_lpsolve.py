import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from causalbands.dist import make_rng
from causalbands.errors import InputError
from causalbands.lpsolve import LinearProgram, minimize, solve


def test_small_max():
    # max x + 2y, x + y <= 4, x <= 3, y <= 2
    lp = LinearProgram([1, 2], A_ub=[[1, 1]], b_ub=[4], hi=[3, 2])
    res = solve(lp)
    assert res.status == "optimal"
    assert res.value == pytest.approx(6.0)
    assert np.allclose(res.x, [2, 2])


def test_infeasible_and_unbounded():
    lp = LinearProgram([1, 1], A_eq=[[1, 1]], b_eq=[-1])
    assert solve(lp).status == "infeasible"
    assert solve(lp).infeasibility > 0
    lp = LinearProgram([1, 0], A_eq=[[0, 1]], b_eq=[1])
    assert solve(lp).status == "unbounded"


def test_degenerate_lp_terminates():
    # many redundant rows and ties
    A = np.vstack([np.ones((1, 6)), np.eye(6)[:3], np.eye(6)[:3]])
    b = np.r_[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    res = solve(LinearProgram(np.arange(6.0), A, b))
    assert res.status == "optimal"
    assert res.value == pytest.approx(5.0)


def test_bad_shapes():
    with pytest.raises(InputError):
        LinearProgram([1, 2], A_eq=[[1, 2, 3]], b_eq=[1])
    with pytest.raises(InputError):
        LinearProgram([1], lo=[1], hi=[0], A_eq=[[1]], b_eq=[1])
    with pytest.raises(InputError):
        LinearProgram([1, 1])


def test_result_unpacks():
    value, x, status = minimize(LinearProgram([1, 1], A_eq=[[1, 1]], b_eq=[1]))
    assert status == "optimal" and value == pytest.approx(1.0) and x.sum() == pytest.approx(1.0)


def _random_lp(seed):
    rng = make_rng(seed)
    n = int(rng.integers(2, 12))
    m_eq = int(rng.integers(0, 4))
    m_ub = int(rng.integers(0, 4))
    x0 = rng.uniform(0, 1, n)
    A_eq = rng.normal(size=(m_eq, n))
    A_ub = rng.normal(size=(m_ub, n))
    hi = np.where(rng.random(n) < 0.5, 1.5, np.inf)
    # keep the feasible region bounded with a simplex-type row
    A_ub = np.vstack([A_ub, np.ones(n)])
    b_ub = np.r_[A_ub[:-1] @ x0 + rng.uniform(0, 1, m_ub), x0.sum() + 1.0]
    return LinearProgram(rng.normal(size=n), A_eq if m_eq else None, A_eq @ x0 if m_eq else None, 0.0, hi, A_ub, b_ub)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_matches_highs(seed):
    lp = _random_lp(seed)
    ours = solve(lp)
    ref = linprog(
        -lp.c,
        A_ub=lp.A_ub,
        b_ub=lp.b_ub,
        A_eq=lp.A_eq if lp.A_eq.size else None,
        b_eq=lp.b_eq if lp.A_eq.size else None,
        bounds=list(zip(lp.lo, [None if np.isinf(h) else h for h in lp.hi])),
        method="highs",
    )
    assert ref.status == 0
    assert ours.status == "optimal"
    assert ours.value == pytest.approx(-ref.fun, abs=1e-8)
    x = ours.x
    assert np.all(x >= -1e-9) and np.all(x <= lp.hi + 1e-9)
    assert np.allclose(lp.A_eq @ x, lp.b_eq, atol=1e-8)
    assert np.all(lp.A_ub @ x <= lp.b_ub + 1e-8)
