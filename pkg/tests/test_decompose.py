import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalbands.bounds import BoundPair, Query
from causalbands.decompose import (
    ExploreConfig,
    Move,
    QuerySpec,
    combine_moves,
    decide_multi,
    decide_single,
    explore,
    four_quantities,
    interval_difference,
    interval_intersection,
    interval_union,
)
from causalbands.errors import InputError, InvariantError
from causalbands.harness import decision_fixtures, simulate_canonical

Q1 = Query("X", 1, "Y", 1)
ATE = Query("X", 1, "Y", 1, 0)


def _results(pairs, q=Q1, method="lp"):
    return [(k, BoundPair(a, b, q, method)) for k, (a, b) in enumerate(pairs)]


def test_four_quantities_simple():
    dec = four_quantities(_results([(0.1, 0.7), (0.2, 0.9), (0.15, 0.8)]))
    assert (dec.L_lo, dec.L_hi, dec.U_lo, dec.U_hi) == (0.1, 0.2, 0.7, 0.9)
    assert dec.inner == (0.2, 0.7)
    assert dec.outer == ((0.1, 0.2), (0.7, 0.9))
    assert dec.inner_width == pytest.approx(0.5)
    assert dec.outer_width == pytest.approx(0.3)


def test_empty_inner_warns():
    with pytest.warns(UserWarning, match="empty"):
        dec = four_quantities(_results([(0.1, 0.3), (0.5, 0.6)]))
    assert dec.inner is None and dec.inner_width == 0.0


def test_aggregation_input_errors():
    with pytest.raises(InputError):
        four_quantities([])
    mixed = _results([(0.1, 0.5)]) + [(1, BoundPair(0.1, 0.5, Q1.with_action(0), "lp"))]
    with pytest.raises(InputError):
        four_quantities(mixed)
    with pytest.raises(InputError):
        four_quantities(_results([(0.1, 0.5)]) + [(1, BoundPair(0.1, 0.5, Q1, "gradient"))])


def test_check_catches_disorder():
    dec = four_quantities(_results([(0.1, 0.7)]))
    bad = type(dec)(Q1, 0.3, 0.2, 0.7, 0.7, 1)
    with pytest.raises(InvariantError):
        bad.check()


def test_interval_helpers():
    assert interval_union([(0.5, 0.6), (0.1, 0.3), (0.2, 0.4)]) == [(0.1, 0.4), (0.5, 0.6)]
    assert interval_intersection([(0.1, 0.5), (0.3, 0.9)]) == (0.3, 0.5)
    assert interval_intersection([(0.1, 0.2), (0.3, 0.9)]) is None
    assert interval_difference([(0.1, 0.9)], (0.3, 0.5)) == [(0.1, 0.3), (0.5, 0.9)]


def brute_identities(pairs):
    """Inner region and outer band from a fine grid, independent of the aggregation code."""
    lo = np.array([a for a, _ in pairs])
    hi = np.array([b for _, b in pairs])
    inner = (lo.max(), hi.min()) if lo.max() <= hi.min() else None
    return inner, (lo.min(), hi.max())


@settings(max_examples=1000, deadline=None)
@given(
    st.lists(
        st.tuples(st.floats(0, 1, allow_nan=False), st.floats(0, 1, allow_nan=False)).map(lambda t: (min(t), max(t))),
        min_size=1,
        max_size=30,
    )
)
def test_identities_on_random_candidate_sets(pairs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dec = four_quantities(_results(pairs))
    inner, hull = brute_identities(pairs)
    assert (dec.inner is None) == (inner is None)
    if inner is not None:
        assert abs(dec.inner[0] - inner[0]) <= 1e-12 and abs(dec.inner[1] - inner[1]) <= 1e-12
        # each point of the union outside the inner region lies in the outer band
        for a, b in pairs:
            for x in (a, b, (a + b) / 2):
                if not inner[0] < x < inner[1]:
                    assert any(p - 1e-12 <= x <= q + 1e-12 for p, q in dec.outer)
    assert dec.L_lo == hull[0] and dec.U_hi == hull[1]


def _direct_single(l_lo, l_hi, u_lo, u_hi, g):
    if g < l_lo:
        return "Return"
    if g > u_hi:
        return "Return"
    if l_hi < g < u_lo:
        return "Observe"
    return "Collect"


GRID = [i / 8 for i in range(9)]


def test_single_decision_grid():
    seen = set()
    for l_lo, l_hi, u_lo, u_hi in itertools.product(GRID, repeat=4):
        if not (l_lo <= l_hi and u_lo <= u_hi and l_lo <= u_lo and l_hi <= u_hi):
            continue
        dec = type(four_quantities(_results([(0.0, 1.0)])))(Q1, l_lo, l_hi, u_lo, u_hi, 2)
        for g in GRID[::2] + [0.0625, 0.9375]:
            m = decide_single(dec, g)
            assert m.kind == _direct_single(l_lo, l_hi, u_lo, u_hi, g)
            seen.add(m.kind)
            if m.kind == "Return":
                assert m.conclusion == ("beneficial" if g < l_lo else "harmful")
    assert seen == {"Return", "Observe", "Collect"}


def test_single_decision_gamma_interval():
    dec = four_quantities(_results([(0.2, 0.6), (0.3, 0.7)]))
    assert decide_single(dec, 0.45).kind == "Observe"
    assert decide_single(dec, 0.45, gamma_halfwidth=0.2).kind == "Collect"
    assert decide_single(dec, (0.1, 0.15)).kind == "Return"
    assert decide_single(dec, (0.1, 0.25)).kind == "Collect"


def test_multi_decision_grid():
    vals = [-1 + i / 4 for i in range(9)]
    for l_lo, l_hi, u_lo, u_hi in itertools.product(vals, repeat=4):
        if not (l_lo <= l_hi and u_lo <= u_hi and l_lo <= u_lo and l_hi <= u_hi):
            continue
        dec = type(four_quantities(_results([(0.0, 1.0)])))(ATE, l_lo, l_hi, u_lo, u_hi, 2)
        m = decide_multi(dec)
        expected = "Return" if (l_lo > 0 or u_hi < 0) else "Observe" if l_hi < 0 < u_lo else "Collect"
        assert m.kind == expected


def test_combine_moves():
    r = Move("Return", "", "beneficial", 1)
    o = Move("Observe", "", None, 0)
    c = Move("Collect", "", None, 0)
    assert combine_moves([r, r]).kind == "Return"
    assert combine_moves([r, o]).kind == "Observe"
    assert combine_moves([c, o]).kind == "Observe"
    assert combine_moves([r, c]).kind == "Collect"
    best = Move("Return", "", "best", 1)
    assert combine_moves([c, best], mode="ate") is best
    with pytest.raises(InputError):
        Move("Stop", "")


@pytest.mark.parametrize("mode", ["single", "ate"])
@pytest.mark.parametrize("kind", ["Return", "Observe", "Collect"])
def test_fixtures_reach_their_moves(mode, kind):
    fx = decision_fixtures(mode)[kind]
    d = simulate_canonical(fx.scm, n=fx.n, seed=0)
    res = explore(d, fx.graph, fx.spec, fx.config)
    assert res.move.kind == kind
    for dec, mv in zip(res.decompositions, res.moves):
        if mode == "ate":
            assert mv == decide_multi(dec)
        else:
            assert mv == decide_single(dec, res.gamma, res.gamma_halfwidth)


def test_explore_workers_do_not_change_results():
    fx = decision_fixtures()["Observe"]
    d = simulate_canonical(fx.scm, n=2000, seed=1)
    cfg = ExploreConfig(eps_s=0.03, m=60)
    a = explore(d, fx.graph, fx.spec, cfg)
    b = explore(d, fx.graph, fx.spec, ExploreConfig(eps_s=0.03, m=60, workers=4))
    assert a == b


def test_explore_config_validation():
    with pytest.raises(InputError):
        ExploreConfig(solver="simplex")
    with pytest.raises(InputError):
        QuerySpec("X", "Y", mode="best")
