"""Bounds on ``P(y | do(x))`` and on ATE for one fixed observational distribution.

Three routes are available: the closed-form bow-graph bound, the exact LP
over the canonical model of the treatment's c-component, and (for graphs
where the treatment is unconfounded) the backdoor adjustment.  The LP is the
reference everything else is checked against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .canon import _observable_map, build_response_space, c_factor, interventional_joint, query_vector
from .dist import ConditionalFactorization, DiscreteJoint, compose, factorize, reorder
from .errors import CapabilityError, InfeasibleError, InputError, MismatchError, PositivityError
from .graph import Admg, conditioning_sets, topological_order
from .lpsolve import LinearProgram, minimize, solve

COMPAT_TOL = 1e-9
BOUND_TOL = 1e-9


@dataclass(frozen=True)
class Query:
    """``P(outcome = outcome_value | do(treatment = action))``, or an ATE when ``baseline`` is set.

    The ATE form is ``E[Y | do(action)] - E[Y | do(baseline)]`` for a
    0/1-coded outcome.
    """

    treatment: str
    action: int
    outcome: str
    outcome_value: int = 1
    baseline: int | None = None

    @property
    def is_ate(self) -> bool:
        return self.baseline is not None

    def describe(self) -> str:
        if self.is_ate:
            return f"ATE({self.treatment}={self.action} vs {self.baseline}; {self.outcome})"
        return f"P({self.outcome}={self.outcome_value}|do({self.treatment}={self.action}))"

    def with_action(self, action: int) -> Query:
        return Query(self.treatment, action, self.outcome, self.outcome_value, self.baseline)


@dataclass(frozen=True)
class BoundPair:
    lower: float
    upper: float
    query: Query
    method: str  # "closed_form" | "lp" | "gradient" | "backdoor"

    def __post_init__(self):
        if self.lower > self.upper + BOUND_TOL:
            raise InputError(f"lower {self.lower} exceeds upper {self.upper}")
        lo_lim = -1.0 if self.query.is_ate else 0.0
        if self.lower < lo_lim - BOUND_TOL or self.upper > 1.0 + BOUND_TOL:
            raise InputError(f"bounds [{self.lower}, {self.upper}] leave the admissible range")

    @property
    def width(self) -> float:
        return self.upper - self.lower


# -- factorization helpers -------------------------------------------------


def graph_factorization(p: DiscreteJoint, g: Admg) -> tuple[ConditionalFactorization, float]:
    """Factorize ``p`` with graph-reduced histories; also return how far ``p`` is from the result.

    The residual is the largest absolute difference between ``p`` and the
    joint recomposed from the reduced conditionals (zero when ``p`` obeys
    the independences the graph implies).
    """
    if set(p.names) != set(g.names):
        raise MismatchError(f"joint variables {list(p.names)} do not match graph nodes {list(g.names)}")
    for name, card in p.variables:
        if g.card(name) != card:
            raise MismatchError(f"cardinality of {name!r}: joint {card}, graph {g.card(name)}")
    order = topological_order(g)
    f = factorize(p, order, given=conditioning_sets(g, order))
    recomposed = compose(f.resolved())
    residual = float(np.abs(recomposed.table - reorder(p, order).table).max())
    return f, residual


def as_factorization(p, g: Admg, strict: bool = True) -> ConditionalFactorization:
    if isinstance(p, ConditionalFactorization):
        return p
    f, residual = graph_factorization(p, g)
    if strict and residual > COMPAT_TOL:
        raise InfeasibleError(
            f"distribution violates independences implied by the graph (residual {residual:.3g})", residual
        )
    return f


# -- closed form ------------------------------------------------------------


def tian_pearl_bow(p: DiscreteJoint, x: int = 1, y: int = 1, treatment: str = "X", outcome: str = "Y") -> BoundPair:
    """``[P(x, y), P(x, y) + 1 - P(x)]`` for ``P(y | do(x))`` on the bow graph."""
    if set(p.names) != {treatment, outcome}:
        raise CapabilityError("closed form needs a joint over exactly the treatment and the outcome")
    if any(c != 2 for c in p.cards):
        raise CapabilityError("closed form is implemented for binary variables only")
    pxy = p.prob(**{treatment: x, outcome: y})
    px = p.prob(**{treatment: x})
    q = Query(treatment, x, outcome, y)
    return BoundPair(pxy, min(1.0, pxy + 1.0 - px), q, "closed_form")


# -- canonical LP -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CanonicalLP:
    A_eq: np.ndarray
    b_eq: np.ndarray
    n_profiles: int
    component: tuple[str, ...]


def canonical_constraints(f: ConditionalFactorization, g: Admg, treatment: str) -> CanonicalLP:
    """``A q = Q[S](f)`` and ``sum(q) = 1`` for the treatment's c-component ``S``."""
    space = build_response_space(g)
    comp = space.component_of(treatment)
    om = _observable_map(space, comp)
    b, constrained = c_factor(f, om)
    A = np.vstack([om.A[constrained], np.ones((1, comp.n_profiles))])
    b = np.concatenate([b[constrained], [1.0]])
    return CanonicalLP(A, b, comp.n_profiles, comp.members)


def effect_vector(f: ConditionalFactorization, g: Admg, query: Query) -> np.ndarray:
    space = build_response_space(g)
    if query.is_ate:
        if g.card(query.outcome) != 2 or query.outcome_value != 1:
            raise CapabilityError("ATE needs a binary outcome coded 0/1 (outcome_value=1)")
        c1 = query_vector(space, (query.treatment, query.action), (query.outcome, 1), f)
        c0 = query_vector(space, (query.treatment, query.baseline), (query.outcome, 1), f)
        return c1 - c0
    return query_vector(space, (query.treatment, query.action), (query.outcome, query.outcome_value), f)


def _extremes(lp: LinearProgram):
    hi = solve(lp)
    if hi.status == "infeasible":
        raise InfeasibleError(
            f"no canonical model reproduces the distribution (phase-1 residual {hi.infeasibility:.3g})",
            hi.infeasibility,
        )
    lo = minimize(lp)
    return lo, hi


def lp_bounds(p, g: Admg, query: Query, strict: bool = True, return_optimizers: bool = False):
    """Sharp bounds on ``query`` over every canonical model reproducing ``p``.

    ``p`` is a joint or a graph-reduced factorization.  With ``strict`` a
    joint that breaks the graph's implied independences raises
    :class:`InfeasibleError`; otherwise it is replaced by its graph-reduced
    recomposition.
    """
    f = as_factorization(p, g, strict)
    sys = canonical_constraints(f, g, query.treatment)
    c = effect_vector(f, g, query)
    lp = LinearProgram(c, sys.A_eq, sys.b_eq, lo=0.0)
    lo, hi = _extremes(lp)
    lim = (-1.0, 1.0) if query.is_ate else (0.0, 1.0)
    pair = BoundPair(float(np.clip(lo.value, *lim)), float(np.clip(hi.value, *lim)), query, "lp")
    if return_optimizers:
        return pair, lo.x, hi.x
    return pair


def ate_vs_best(p, g: Admg, treatment: str, outcome: str, action: int, strict: bool = True) -> BoundPair:
    """Bounds on ``E[Y|do(action)] - max_{b != action} E[Y|do(b)]``.

    The lower end is exact (``min_b`` of pairwise lower bounds); the upper
    end is ``min_b`` of pairwise upper bounds, a valid outer bound that is
    exact for binary treatments.
    """
    f = as_factorization(p, g, strict)
    others = [b for b in range(g.card(treatment)) if b != action]
    if not others:
        raise CapabilityError("ATE needs at least two actions")
    pairs = [lp_bounds(f, g, Query(treatment, action, outcome, 1, b)) for b in others]
    q = Query(treatment, action, outcome, 1, others[0] if len(others) == 1 else -1)
    return BoundPair(min(b.lower for b in pairs), min(b.upper for b in pairs), q, "lp")


def ate_of(scm, treatment: str, outcome: str, action: int = 1, baseline: int | None = None) -> float:
    """Exact ATE of a canonical SCM.

    Without ``baseline`` a binary treatment compares against the other
    action and a k-ary one against the best remaining action.
    """
    g = scm.graph
    if g.card(outcome) != 2:
        raise CapabilityError("ATE needs a binary outcome coded 0/1")

    def mean(a):
        return interventional_joint(scm, {treatment: a}).prob(**{outcome: 1})

    if baseline is not None:
        return mean(action) - mean(baseline)
    others = [b for b in range(g.card(treatment)) if b != action]
    return mean(action) - max(mean(b) for b in others)


# -- backdoor --------------------------------------------------------------------


def _backdoor_set(g: Admg, query: Query) -> tuple[str, ...]:
    if g.spouses(query.treatment):
        raise CapabilityError(
            f"{query.treatment!r} is latently confounded; no observed backdoor set is available"
        )
    return g.parents(query.treatment)


def backdoor_point(p: DiscreteJoint, g: Admg, query: Query) -> float:
    """``sum_z P(y | x, z) P(z)`` with ``z`` the treatment's parents."""
    z = _backdoor_set(g, query)

    def single(action):
        names = list(z) + [query.treatment, query.outcome]
        axes = [p.axis(n) for n in names]
        drop = tuple(i for i in range(len(p.names)) if i not in axes)
        m = p.table.sum(axis=drop) if drop else p.table
        remaining = [i for i in range(len(p.names)) if i in axes]
        m = np.transpose(m, [remaining.index(a) for a in axes])  # (z..., x, y)
        pz = m.sum(axis=(-1, -2))
        pxz = m[..., action, :].sum(axis=-1)
        if np.any((pz > 0) & (pxz <= 0)):
            raise PositivityError(f"P({query.treatment}={action}, z) = 0 for some z with P(z) > 0")
        with np.errstate(invalid="ignore", divide="ignore"):
            py = np.where(pxz > 0, m[..., action, query.outcome_value] / np.where(pxz > 0, pxz, 1), 0.0)
        return float((py * pz).sum())

    if query.is_ate:
        if query.outcome_value != 1:
            raise CapabilityError("ATE needs outcome_value=1")
        return single(query.action) - single(query.baseline)
    return single(query.action)


def backdoor_box_bounds(box, g: Admg, query: Query) -> BoundPair:
    """Extremes of the backdoor formula over a confidence box.

    Conditionals ``P(y | x, z)`` are pinned at their interval endpoints and
    the ``P(z)`` weights range over their intervals intersected with the
    simplex, which is one small LP per direction.  With several adjustment
    variables the ``P(z)`` intervals are products of per-factor intervals,
    which makes the result an outer bound.
    """
    if query.is_ate:
        raise CapabilityError("box bounds are implemented for P(y|do(x)) queries")
    z = _backdoor_set(g, query)
    cards = dict(box.variables)
    by_var = {}
    for c in box.coordinates:
        by_var.setdefault(c.var, []).append(c)
    y_given = tuple(box.given[query.outcome])
    if set(y_given) != set(z) | {query.treatment}:
        raise CapabilityError(
            f"outcome conditional is on {y_given}; box bounds need exactly the treatment and its parents"
        )
    for zv in z:
        if not set(box.given[zv]) <= set(z):
            raise CapabilityError(f"conditional of {zv!r} involves variables outside the adjustment set")

    def interval(var, assign):
        hist = tuple(assign[gv] for gv in box.given[var])
        coords = [c for c in by_var.get(var, []) if c.history == hist]
        val = assign[var]
        if val >= 1:
            c = next(c for c in coords if c.value == val)
            return c.lo, c.hi
        return max(0.0, 1.0 - sum(c.hi for c in coords)), max(0.0, 1.0 - sum(c.lo for c in coords))

    zcards = [cards[v] for v in z]
    z_configs = list(np.ndindex(*zcards)) if z else [()]
    w_lo, w_hi, y_lo, y_hi = [], [], [], []
    for zc in z_configs:
        assign = dict(zip(z, zc))
        lo = hi = 1.0
        for zv in z:
            a, b = interval(zv, assign)
            lo, hi = lo * a, hi * b
        w_lo.append(lo)
        w_hi.append(hi)
        assign[query.treatment] = query.action
        assign[query.outcome] = query.outcome_value
        a, b = interval(query.outcome, assign)
        y_lo.append(a)
        y_hi.append(b)
    ones = np.ones((1, len(z_configs)))
    lp_hi = LinearProgram(np.array(y_hi), ones, [1.0], lo=np.array(w_lo), hi=np.array(w_hi))
    lp_lo = LinearProgram(np.array(y_lo), ones, [1.0], lo=np.array(w_lo), hi=np.array(w_hi))
    up = solve(lp_hi)
    dn = minimize(lp_lo)
    if up.status != "optimal" or dn.status != "optimal":
        raise InfeasibleError("P(z) intervals do not intersect the simplex", up.infeasibility)
    return BoundPair(float(np.clip(dn.value, 0, 1)), float(np.clip(up.value, 0, 1)), query, "backdoor")


# -- model-side conditionals (shared with the relaxed trainer) -----------------


@dataclass(frozen=True, eq=False)
class ConditionalRows:
    """Linear forms giving a model's conditionals inside the treatment's c-component.

    For profile distribution ``q``, conditional ``k`` of the model equals
    ``N[k] @ q / (D[k] @ q)``, to be compared with ``target[k]``.
    """

    labels: tuple[str, ...]
    N: np.ndarray  # (K, card, P)
    D: np.ndarray  # (K, P)
    target: np.ndarray  # (K, card)


def conditional_rows(f: ConditionalFactorization, g: Admg, treatment: str) -> ConditionalRows:
    space = build_response_space(g)
    comp = space.component_of(treatment)
    om = _observable_map(space, comp)
    names = f.order
    cards = tuple(g.card(v) for v in names)
    n_cfg = int(np.prod(cards, dtype=np.int64))
    configs = np.stack(np.unravel_index(np.arange(n_cfg), cards), axis=1)
    col = {v: k for k, v in enumerate(names)}
    rows = np.ravel_multi_index(tuple(configs[:, [col[c] for c in om.columns]].T), om.cards)
    A_full = om.A[rows]
    w = np.ones(n_cfg)
    for v in names:
        if v in comp.members:
            continue
        fac = f.factor(v)
        idx = tuple(configs[:, col[gv]] for gv in fac.given) + (configs[:, col[v]],)
        w = w * np.nan_to_num(fac.table[idx])
    WA = w[:, None] * A_full
    labels, Ns, Ds, targets = [], [], [], []
    for v in comp.members:
        fac = f.factor(v)
        k = g.card(v)
        for hist in np.ndindex(*(g.card(gv) for gv in fac.given)) if fac.given else [()]:
            if fac.given and fac.degenerate[hist]:
                continue
            match = np.ones(n_cfg, dtype=bool)
            for gv, h in zip(fac.given, hist):
                match &= configs[:, col[gv]] == h
            D = WA[match].sum(axis=0)
            N = np.stack([WA[match & (configs[:, col[v]] == s)].sum(axis=0) for s in range(k)])
            labels.append(f"{v}|" + ",".join(f"{a}={b}" for a, b in zip(fac.given, hist)))
            Ns.append(N)
            Ds.append(D)
            targets.append(np.asarray(fac.table[hist], dtype=float))
    card_max = max(n.shape[0] for n in Ns)
    if any(n.shape[0] != card_max for n in Ns):
        # pad to a common state count; padded states have zero numerator and target
        Ns = [np.vstack([n, np.zeros((card_max - n.shape[0], n.shape[1]))]) for n in Ns]
        targets = [np.concatenate([t, np.zeros(card_max - t.size)]) for t in targets]
    return ConditionalRows(tuple(labels), np.stack(Ns), np.stack(Ds), np.stack(targets))


def slack_lp_bounds(p, g: Admg, query: Query, slack: float, strict: bool = True) -> BoundPair:
    """Bounds when each model conditional may sit within TVD ``slack`` of the target.

    ``TVD(N/D, t) <= slack`` is linear once multiplied through by ``D``:
    ``sum_s |N_s - t_s D| <= 2 slack D``.  This dominates anything the
    relaxed trainer can reach with the same slack.
    """
    f = as_factorization(p, g, strict)
    rows = conditional_rows(f, g, query.treatment)
    c = effect_vector(f, g, query)
    K, S, P = rows.N.shape
    n_aux = K * S
    A_ub, b_ub = [], []
    for k in range(K):
        for s in range(S):
            lin = rows.N[k, s] - rows.target[k, s] * rows.D[k]
            aux = np.zeros(n_aux)
            aux[k * S + s] = -1.0
            A_ub.append(np.concatenate([lin, aux]))
            A_ub.append(np.concatenate([-lin, aux]))
            b_ub += [0.0, 0.0]
        aux = np.zeros(n_aux)
        aux[k * S:(k + 1) * S] = 1.0
        A_ub.append(np.concatenate([-2.0 * slack * rows.D[k], aux]))
        b_ub.append(0.0)
    A_eq = np.concatenate([np.ones(P), np.zeros(n_aux)])[None, :]
    lp = LinearProgram(np.concatenate([c, np.zeros(n_aux)]), A_eq, [1.0], lo=0.0, A_ub=np.array(A_ub), b_ub=b_ub)
    lo, hi = _extremes(lp)
    lim = (-1.0, 1.0) if query.is_ate else (0.0, 1.0)
    return BoundPair(float(np.clip(lo.value, *lim)), float(np.clip(hi.value, *lim)), query, "lp")
