"""Canonical (response-function) parameterization of semi-Markovian SCMs.

Each variable's mechanism is a random choice among all functions from its
parent configurations to its values.  Variables in one c-component share a
single distribution ``q`` over joint choices ("profiles"); distinct
c-components are independent.

Function index ``k`` of a variable writes its outputs at the parent
configurations (row-major over parents in declaration order) as base-``card``
digits, first configuration most significant.  For a binary ``X`` with one
binary parent this gives ``0: (0, 0)``, ``1: (0, 1)``, ``2: (1, 0)``,
``3: (1, 1)``.  Profiles of a component are row-major over its members in
topological order, so for ``{X, Y}`` the profile ``(i, j)`` sits at
``i * |R_Y| + j``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .dist import ConditionalFactorization, Dataset, DiscreteJoint, make_rng
from .errors import CapabilityError, CapacityError, InputError, PositivityError
from .graph import Admg, c_components, topological_order

PROFILE_CAP = 10**6


@dataclass(frozen=True, eq=False)
class VariableResponses:
    name: str
    card: int
    parents: tuple[str, ...]
    parent_cards: tuple[int, ...]
    # outputs[k, j] = value of function k at parent configuration j
    outputs: np.ndarray

    @property
    def n_functions(self) -> int:
        return self.outputs.shape[0]

    def pa_index(self, values) -> np.ndarray:
        """Flat parent-configuration index for an array of parent values (last axis = parents)."""
        values = np.asarray(values)
        if not self.parents:
            return np.zeros(values.shape[:-1], dtype=np.int64)
        return np.ravel_multi_index(tuple(np.moveaxis(values, -1, 0)), self.parent_cards)


@dataclass(frozen=True, eq=False)
class ComponentSpace:
    members: tuple[str, ...]  # topological order
    sizes: tuple[int, ...]

    @property
    def n_profiles(self) -> int:
        return int(np.prod(self.sizes, dtype=np.int64))

    def decode(self, profiles) -> np.ndarray:
        """Per-member function indices, shape ``profiles.shape + (len(members),)``."""
        return np.stack(np.unravel_index(np.asarray(profiles), self.sizes), axis=-1)


@dataclass(frozen=True, eq=False)
class ResponseSpace:
    graph: Admg
    order: tuple[str, ...]
    variables: dict  # name -> VariableResponses
    components: tuple[ComponentSpace, ...]

    def component_of(self, name: str) -> ComponentSpace:
        for comp in self.components:
            if name in comp.members:
                return comp
        raise KeyError(f"unknown node {name!r}")


def _enumerate_functions(card: int, n_configs: int) -> np.ndarray:
    n_funcs = card**n_configs
    digits = np.arange(n_funcs)[:, None] // card ** np.arange(n_configs - 1, -1, -1)[None, :]
    return (digits % card).astype(np.int64)


@lru_cache(maxsize=64)
def build_response_space(g: Admg, cap: int = PROFILE_CAP) -> ResponseSpace:
    """Enumerate response functions per variable and profiles per c-component."""
    order = tuple(topological_order(g))
    variables = {}
    for v in order:
        pa = g.parents(v)
        pcards = tuple(g.card(p) for p in pa)
        n_cfg = int(np.prod(pcards, dtype=np.int64)) if pa else 1
        n_funcs = float(g.card(v)) ** n_cfg
        if n_funcs > cap:
            raise CapacityError(f"{v!r} alone has {n_funcs:.3g} response functions (cap {cap})", component=(v,), size=n_funcs)
        variables[v] = VariableResponses(v, g.card(v), pa, pcards, _enumerate_functions(g.card(v), n_cfg))
    pos = {v: k for k, v in enumerate(order)}
    comps = []
    for block in c_components(g):
        members = tuple(sorted(block, key=pos.__getitem__))
        sizes = tuple(variables[m].n_functions for m in members)
        size = float(np.prod([float(s) for s in sizes]))
        if size > cap:
            raise CapacityError(
                f"c-component {members} has {size:.3g} profiles (cap {cap})", component=members, size=size
            )
        comps.append(ComponentSpace(members, sizes))
    return ResponseSpace(g, order, variables, tuple(comps))


@dataclass(frozen=True, eq=False)
class ObservableMap:
    """Linear map from a component's profile distribution to its observables.

    Row ``(pa, s)`` of ``A`` is the probability that the component's members
    take values ``s`` when its outside parents are set to ``pa``, i.e. the
    c-factor ``Q[S](s; pa)``.  Rows are ordered with the outside-parent
    configuration outermost.
    """

    component: ComponentSpace
    outside_parents: tuple[str, ...]
    cards: tuple[int, ...]
    row_configs: np.ndarray  # (rows, len(columns))
    A: np.ndarray

    @property
    def columns(self) -> tuple[str, ...]:
        return self.outside_parents + self.component.members

    def row_of(self, **assignment) -> int:
        return int(np.ravel_multi_index(tuple(int(assignment[c]) for c in self.columns), self.cards))


def _eval_members(space: ResponseSpace, members, funcs, assign):
    """Evaluate members' functions in order; ``assign`` holds columns for every needed name.

    ``funcs``: (..., len(members)) function indices.  Mutates and returns ``assign``.
    """
    for k, m in enumerate(members):
        vr = space.variables[m]
        pa_vals = np.stack([assign[p] for p in vr.parents], axis=-1) if vr.parents else None
        idx = vr.pa_index(pa_vals) if pa_vals is not None else np.zeros_like(funcs[..., k])
        assign[m] = vr.outputs[funcs[..., k], idx]
    return assign


def _component_rows(space: ResponseSpace, comp: ComponentSpace):
    g = space.graph
    members = set(comp.members)
    outside = []
    for m in comp.members:
        for p in g.parents(m):
            if p not in members and p not in outside:
                outside.append(p)
    pos = {v: k for k, v in enumerate(space.order)}
    outside = tuple(sorted(outside, key=pos.__getitem__))
    return outside


def observable_map(space: ResponseSpace, g: Admg | None = None, component=None) -> ObservableMap | dict:
    """Observable maps for every c-component (or only ``component``, given by any member)."""
    if component is not None:
        return _observable_map(space, space.component_of(component))
    return {comp.members: _observable_map(space, comp) for comp in space.components}


@lru_cache(maxsize=256)
def _observable_map(space, comp):
    return _build_observable_map(space, comp)


def _build_observable_map(space: ResponseSpace, comp: ComponentSpace) -> ObservableMap:
    g = space.graph
    outside = _component_rows(space, comp)
    cols = outside + comp.members
    cards = tuple(g.card(c) for c in cols)
    n_rows = int(np.prod(cards, dtype=np.int64))
    configs = np.stack(np.unravel_index(np.arange(n_rows), cards), axis=1)
    profiles = np.arange(comp.n_profiles)
    funcs = comp.decode(profiles)  # (P, k)
    A = np.zeros((n_rows, comp.n_profiles))
    n_out = len(outside)
    pa_cards = cards[:n_out]
    n_pa = int(np.prod(pa_cards, dtype=np.int64)) if outside else 1
    pa_configs = np.stack(np.unravel_index(np.arange(n_pa), pa_cards), axis=1) if outside else np.zeros((1, 0), int)
    for a, pa in enumerate(pa_configs):
        assign = {p: np.full(comp.n_profiles, pa[k]) for k, p in enumerate(outside)}
        _eval_members(space, comp.members, funcs, assign)
        s_vals = np.stack([assign[m] for m in comp.members], axis=1)
        full = np.concatenate([np.broadcast_to(pa, (comp.n_profiles, n_out)), s_vals], axis=1)
        rows = np.ravel_multi_index(tuple(full.T), cards)
        A[rows, profiles] = 1.0
    A.setflags(write=False)
    return ObservableMap(comp, outside, cards, configs, A)


def c_factor(f: ConditionalFactorization, om: ObservableMap) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side ``Q[S](s; pa)`` of the observable map, computed from a factorization.

    Each conditional of a member must depend only on the component and its
    outside parents (true for the graph-reduced factorization).  Returns
    ``(b, constrained)``: rows whose value is undetermined because a
    conditioning event outside the component has probability zero are
    marked False.
    """
    members = om.component.members
    cols = om.columns
    b = np.ones(len(om.row_configs))
    constrained = np.ones(len(om.row_configs), dtype=bool)
    colpos = {c: k for k, c in enumerate(cols)}
    for m in members:
        fac = f.factor(m)
        for gname in fac.given:
            if gname not in colpos:
                raise CapabilityError(
                    f"conditional of {m!r} depends on {gname!r}, outside its c-component and parents"
                )
        idx = tuple(om.row_configs[:, colpos[gname]] for gname in fac.given) + (om.row_configs[:, colpos[m]],)
        vals = fac.table[idx]
        deg = fac.degenerate[idx[:-1]] if fac.given else np.broadcast_to(fac.degenerate, vals.shape)
        # degenerate rows are harmless once an earlier factor is already zero
        undetermined = deg & (b > 0)
        constrained &= ~undetermined
        b = np.where(deg, 0.0, b * np.nan_to_num(vals))
    return b, constrained


def query_vector(
    space: ResponseSpace,
    intervention: tuple[str, int],
    outcome: tuple[str, int],
    factorization: ConditionalFactorization | None = None,
) -> np.ndarray:
    """Objective ``c`` over the intervened node's component with ``c @ q = P(outcome | do(intervention))``.

    When the post-intervention effect depends on variables outside the
    component (observed confounders, outcome in another component), their
    identified conditionals are read from ``factorization``.
    """
    g = space.graph
    x, xv = intervention
    y, yv = outcome
    if x == y:
        raise CapabilityError("intervention and outcome must be different nodes")
    comp = space.component_of(x)
    space.component_of(y)
    rest = tuple(m for m in comp.members if m != x)
    external = {p for m in rest for p in g.parents(m) if p not in comp.members}
    self_contained = y in rest and not external
    if self_contained:
        names = rest
    else:
        if factorization is None:
            raise CapabilityError(
                f"P({y}|do({x})) depends on variables outside {comp.members}; pass a factorization"
            )
        names = tuple(v for v in space.order if v != x)
    cards = tuple(g.card(v) for v in names)
    n_cfg = int(np.prod(cards, dtype=np.int64))
    configs = np.stack(np.unravel_index(np.arange(n_cfg), cards), axis=1)
    cfg = {v: configs[:, k] for k, v in enumerate(names)}
    cfg[x] = np.full(n_cfg, xv)
    weight = (cfg[y] == yv).astype(float)
    if not self_contained:
        for v in names:
            if v in comp.members:
                continue
            fac = factorization.factor(v)
            idx = tuple(cfg[gname] for gname in fac.given) + (cfg[v],)
            if fac.given and np.any(fac.degenerate[idx[:-1]] & (weight > 0)):
                raise PositivityError(f"conditional of {v!r} needed at a zero-probability history")
            weight = weight * np.nan_to_num(fac.table[idx])
    rest_pos = [comp.members.index(m) for m in rest]
    funcs = comp.decode(np.arange(comp.n_profiles))[:, rest_pos]
    inputs = tuple(dict.fromkeys(p for m in rest for p in g.parents(m) if p not in rest))
    c = np.zeros(comp.n_profiles)
    for k in np.flatnonzero(weight > 0):
        assign = {p: np.full(comp.n_profiles, cfg[p][k]) for p in inputs}
        _eval_members(space, rest, funcs, assign)
        ok = np.ones(comp.n_profiles, dtype=bool)
        for m in rest:
            ok &= assign[m] == cfg[m][k]
        c += weight[k] * ok
    return c


@dataclass(frozen=True, eq=False)
class CanonicalScm:
    """Profile distributions, one per c-component (keyed by the member tuple)."""

    graph: Admg
    q: dict

    def __post_init__(self):
        space = build_response_space(self.graph)
        q = {}
        for comp in space.components:
            if comp.members not in self.q:
                raise InputError(f"missing profile distribution for component {comp.members}")
            v = np.asarray(self.q[comp.members], dtype=float).ravel()
            if v.size != comp.n_profiles:
                raise InputError(f"component {comp.members}: expected {comp.n_profiles} entries, got {v.size}")
            if np.any(v < 0) or abs(v.sum() - 1) > 1e-12 * max(1, v.size):
                raise InputError(f"component {comp.members}: q must be a probability vector")
            v = v.copy()
            v.setflags(write=False)
            q[comp.members] = v
        object.__setattr__(self, "q", q)

    @property
    def space(self) -> ResponseSpace:
        return build_response_space(self.graph)

    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "components": [{"members": list(k), "q": [float(x) for x in v]} for k, v in self.q.items()],
        }

    @classmethod
    def from_dict(cls, data, graph: Admg | None = None) -> CanonicalScm:
        g = graph or Admg.from_dict(data["graph"])
        return cls(g, {tuple(c["members"]): np.asarray(c["q"], float) for c in data["components"]})

    @classmethod
    def load(cls, path, graph: Admg | None = None) -> CanonicalScm:
        return cls.from_dict(json.loads(Path(path).read_text()), graph)


def simulate_canonical(scm: CanonicalScm, g: Admg | None = None, intervention=None, n: int = 1, seed: int = 0) -> Dataset:
    """Sample ``n`` rows by drawing profiles and evaluating mechanisms in topological order."""
    g = g or scm.graph
    space = build_response_space(g)
    intervention = dict(intervention or {})
    rng = make_rng(seed)
    funcs = {}
    for comp in space.components:
        prof = rng.choice(comp.n_profiles, size=n, p=scm.q[comp.members])
        dec = comp.decode(prof)
        for k, m in enumerate(comp.members):
            funcs[m] = dec[:, k]
    assign = {}
    for v in space.order:
        if v in intervention:
            assign[v] = np.full(n, int(intervention[v]), dtype=np.int64)
            continue
        vr = space.variables[v]
        if vr.parents:
            idx = vr.pa_index(np.stack([assign[p] for p in vr.parents], axis=-1))
        else:
            idx = np.zeros(n, dtype=np.int64)
        assign[v] = vr.outputs[funcs[v], idx]
    rows = np.stack([assign[v] for v in g.names], axis=1)
    return Dataset(g.nodes, rows)


def interventional_joint(scm: CanonicalScm, intervention=None, max_combos: int = 10**6) -> DiscreteJoint:
    """Exact joint under ``intervention`` by enumerating every profile combination."""
    g = scm.graph
    space = scm.space
    intervention = dict(intervention or {})
    comps = space.components
    total = float(np.prod([float(c.n_profiles) for c in comps]))
    if total > max_combos:
        raise CapacityError(f"{total:.3g} profile combinations exceed {max_combos}")
    table = np.zeros(tuple(g.card(v) for v in g.names))
    for combo in itertools.product(*(range(c.n_profiles) for c in comps)):
        w = 1.0
        funcs = {}
        for comp, r in zip(comps, combo):
            w *= scm.q[comp.members][r]
            for m, f in zip(comp.members, comp.decode(r)):
                funcs[m] = int(f)
        if w == 0:
            continue
        vals = {}
        for v in space.order:
            if v in intervention:
                vals[v] = int(intervention[v])
                continue
            vr = space.variables[v]
            j = int(vr.pa_index(np.array([vals[p] for p in vr.parents]))) if vr.parents else 0
            vals[v] = int(vr.outputs[funcs[v], j])
        table[tuple(vals[v] for v in g.names)] += w
    return DiscreteJoint(g.nodes, table)


def observational_joint(scm: CanonicalScm) -> DiscreteJoint:
    """Exact observational joint as the product of c-factors ``A q``."""
    g = scm.graph
    space = scm.space
    names = g.names
    cards = tuple(g.card(v) for v in names)
    n_cfg = int(np.prod(cards, dtype=np.int64))
    configs = np.stack(np.unravel_index(np.arange(n_cfg), cards), axis=1)
    p = np.ones(n_cfg)
    for comp in space.components:
        om = _observable_map(space, comp)
        Q = om.A @ scm.q[comp.members]
        colidx = [names.index(c) for c in om.columns]
        rows = np.ravel_multi_index(tuple(configs[:, colidx].T), tuple(g.card(c) for c in om.columns))
        p *= Q[rows]
    return DiscreteJoint(g.nodes, p.reshape(cards))
