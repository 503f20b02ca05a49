"""Acyclic directed mixed graphs (ADMGs).

Directed edges carry causal mechanisms; bidirected edges mark pairs of
observed variables that share an unobserved confounder.  Every ordering the
module produces breaks ties by node declaration order, so downstream reports
are byte-stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

from .errors import InputError, StructuralError

DEFAULT_CARD = 2


@dataclass(frozen=True)
class Admg:
    """An ADMG over named discrete variables.

    Args:
        nodes: ``(name, cardinality)`` pairs in declaration order.
        directed_edges: ``(parent, child)`` pairs.
        bidirected_edges: unordered pairs; stored as given, compared as sets.
    """

    nodes: tuple[tuple[str, int], ...]
    directed_edges: tuple[tuple[str, str], ...] = ()
    bidirected_edges: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        nodes = tuple((str(n), int(c)) for n, c in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(
            self, "directed_edges", tuple((str(a), str(b)) for a, b in self.directed_edges)
        )
        object.__setattr__(
            self, "bidirected_edges", tuple((str(a), str(b)) for a, b in self.bidirected_edges)
        )
        self._validate()

    def _validate(self):
        names = [n for n, _ in self.nodes]
        if len(set(names)) != len(names):
            raise StructuralError("duplicate node names")
        for name, card in self.nodes:
            if card < 1:
                raise StructuralError(f"node {name!r} has non-positive cardinality {card}", node=name)
        known = set(names)
        seen = set()
        for a, b in self.directed_edges:
            for v in (a, b):
                if v not in known:
                    raise StructuralError(f"edge endpoint {v!r} is not a declared node", node=v)
            if a == b:
                raise StructuralError(f"self-loop on {a!r}", node=a)
            if (a, b) in seen:
                raise StructuralError(f"duplicate directed edge {a}->{b}", node=a)
            seen.add((a, b))
        seen_bi = set()
        for a, b in self.bidirected_edges:
            for v in (a, b):
                if v not in known:
                    raise StructuralError(f"edge endpoint {v!r} is not a declared node", node=v)
            if a == b:
                raise StructuralError(f"bidirected self-loop on {a!r}", node=a)
            key = frozenset((a, b))
            if key in seen_bi:
                raise StructuralError(f"duplicate bidirected edge {a}<->{b}", node=a)
            seen_bi.add(key)
        # raises on cycles
        _kahn(names, self.directed_edges)

    # -- basic accessors -------------------------------------------------

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.nodes)

    @cached_property
    def cards(self) -> dict[str, int]:
        return dict(self.nodes)

    def card(self, name: str) -> int:
        self._require(name)
        return self.cards[name]

    def _require(self, name):
        if name not in self.cards:
            raise KeyError(f"unknown node {name!r}")

    def parents(self, name: str) -> tuple[str, ...]:
        """Parents of ``name`` in declaration order."""
        self._require(name)
        pa = {a for a, b in self.directed_edges if b == name}
        return tuple(n for n in self.names if n in pa)

    def children(self, name: str) -> tuple[str, ...]:
        self._require(name)
        ch = {b for a, b in self.directed_edges if a == name}
        return tuple(n for n in self.names if n in ch)

    def spouses(self, name: str) -> tuple[str, ...]:
        self._require(name)
        sp = set()
        for a, b in self.bidirected_edges:
            if a == name:
                sp.add(b)
            elif b == name:
                sp.add(a)
        return tuple(n for n in self.names if n in sp)

    def has_directed(self, a: str, b: str) -> bool:
        return (a, b) in set(self.directed_edges)

    def has_bidirected(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in {frozenset(e) for e in self.bidirected_edges}

    def without_bidirected(self) -> Admg:
        return Admg(self.nodes, self.directed_edges, ())

    def subgraph(self, keep) -> Admg:
        """Induced subgraph on ``keep`` (declaration order preserved)."""
        keep = set(keep)
        for v in keep:
            self._require(v)
        return Admg(
            tuple(nc for nc in self.nodes if nc[0] in keep),
            tuple(e for e in self.directed_edges if e[0] in keep and e[1] in keep),
            tuple(e for e in self.bidirected_edges if e[0] in keep and e[1] in keep),
        )

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "nodes": [{"name": n, "card": c} for n, c in self.nodes],
            "edges": [list(e) for e in self.directed_edges],
            "bidirected": [list(e) for e in self.bidirected_edges],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Admg:
        try:
            raw_nodes = data["nodes"]
        except (KeyError, TypeError) as exc:
            raise InputError("graph JSON needs a 'nodes' list") from exc
        nodes = []
        for entry in raw_nodes:
            if isinstance(entry, str):
                nodes.append((entry, DEFAULT_CARD))
            elif isinstance(entry, dict) and "name" in entry:
                nodes.append((entry["name"], int(entry.get("card", DEFAULT_CARD))))
            else:
                raise InputError(f"bad node entry {entry!r}")
        edges = [tuple(e) for e in data.get("edges", [])]
        bidirected = [tuple(e) for e in data.get("bidirected", [])]
        for e in edges + bidirected:
            if len(e) != 2:
                raise InputError(f"edge {list(e)!r} must have two endpoints")
        return cls(tuple(nodes), tuple(edges), tuple(bidirected))

    @classmethod
    def load(cls, path) -> Admg:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def __hash__(self):
        return hash((self.nodes, self.directed_edges, frozenset(map(frozenset, self.bidirected_edges))))


def _kahn(names, edges):
    indeg = {n: 0 for n in names}
    out = {n: [] for n in names}
    for a, b in edges:
        indeg[b] += 1
        out[a].append(b)
    order = []
    done = set()
    while len(order) < len(names):
        # lowest declaration index among ready nodes
        ready = next((n for n in names if n not in done and indeg[n] == 0), None)
        if ready is None:
            stuck = _node_on_cycle([n for n in names if n not in done], edges)
            raise StructuralError(f"directed cycle through {stuck!r}", node=stuck)
        order.append(ready)
        done.add(ready)
        for b in out[ready]:
            indeg[b] -= 1
    return order


def _node_on_cycle(remaining, edges):
    # every remaining node has a remaining parent; walking parents must revisit
    rem = set(remaining)
    pred = {n: [a for a, b in edges if b == n and a in rem] for n in remaining}
    v, seen = remaining[0], []
    while v not in seen:
        seen.append(v)
        v = pred[v][0]
    return v


def topological_order(g: Admg) -> list[str]:
    """Topological order of ``g``; ties go to the earlier-declared node."""
    return _kahn(list(g.names), g.directed_edges)


def c_components(g: Admg, among=None) -> list[tuple[str, ...]]:
    """Connected components of the bidirected part of ``g``.

    If ``among`` is given, components are computed in the subgraph induced
    by those nodes.  Blocks list members in declaration order and blocks are
    ordered by their first member.
    """
    members = [n for n in g.names if among is None or n in set(among)]
    allowed = set(members)
    adj = {n: set() for n in members}
    for a, b in g.bidirected_edges:
        if a in allowed and b in allowed:
            adj[a].add(b)
            adj[b].add(a)
    seen = set()
    blocks = []
    for n in members:
        if n in seen:
            continue
        stack, block = [n], set()
        while stack:
            v = stack.pop()
            if v in block:
                continue
            block.add(v)
            stack.extend(adj[v] - block)
        seen |= block
        blocks.append(tuple(m for m in members if m in block))
    return blocks


def component_of(g: Admg, name: str, among=None) -> tuple[str, ...]:
    for block in c_components(g, among):
        if name in block:
            return block
    raise KeyError(f"unknown node {name!r}")


def conditioning_sets(g: Admg, order=None) -> dict[str, tuple[str, ...]]:
    """Minimal conditioning set of each variable in the chain-rule factorization.

    For ``V`` at position ``i`` of a topological order, ``P(v | v_<i)`` equals
    ``P(v | T)`` with ``T`` the c-component of ``V`` inside the prefix
    subgraph plus that block's parents, minus ``V`` itself.  On graphs whose
    prefixes are fully connected this is the whole history.
    """
    order = list(order) if order is not None else topological_order(g)
    pos = {v: k for k, v in enumerate(order)}
    out = {}
    for k, v in enumerate(order):
        prefix = order[: k + 1]
        block = component_of(g, v, among=prefix)
        keep = set(block)
        for b in block:
            keep.update(g.parents(b))
        keep.discard(v)
        if any(pos[t] > k for t in keep):
            raise InputError(f"order {order} is not topological for {v!r}")
        out[v] = tuple(sorted(keep, key=pos.__getitem__))
    return out


def is_structural_instrument(g: Admg, i: str, x: str, y: str) -> bool:
    """Graphical instrument test: ``i -> x``, no edge from ``i`` to ``y``, ``i`` unconfounded with ``x``, ``y``."""
    for v in (i, x, y):
        g._require(v)
    if len({i, x, y}) != 3:
        raise InputError("instrument, treatment and outcome must be distinct")
    if not g.has_directed(i, x):
        return False
    if g.has_directed(i, y) or g.has_bidirected(i, y):
        return False
    if g.has_bidirected(i, x):
        return False
    return True


def bow_graph(x="X", y="Y", card=2) -> Admg:
    return Admg(((x, card), (y, card)), ((x, y),), ((x, y),))


def iv_graph(i="I", x="X", y="Y", card=2) -> Admg:
    return Admg(((i, card), (x, card), (y, card)), ((i, x), (x, y)), ((x, y),))


def backdoor_graph(z="Z", x="X", y="Y", confounded=False, card=2) -> Admg:
    """``Z -> X -> Y`` with ``Z -> Y``; ``confounded`` adds ``X <-> Y`` (the bow-backdoor graph)."""
    bi = ((x, y),) if confounded else ()
    return Admg(((z, card), (x, card), (y, card)), ((z, x), (z, y), (x, y)), bi)


def two_confounder_graph(card=2) -> Admg:
    """Two observed confounders ``Z1``, ``Z2`` of ``X -> Y``, no latent confounding."""
    return Admg(
        (("Z1", card), ("Z2", card), ("X", card), ("Y", card)),
        (("Z1", "X"), ("Z2", "X"), ("Z1", "Y"), ("Z2", "Y"), ("X", "Y")),
        (),
    )


def two_instrument_graph(card=2) -> Admg:
    """Instruments ``I1``, ``I2`` of a latently confounded ``X -> Y``."""
    return Admg(
        (("I1", card), ("I2", card), ("X", card), ("Y", card)),
        (("I1", "X"), ("I2", "X"), ("X", "Y")),
        (("X", "Y"),),
    )


def latent_projection(g: Admg, keep) -> Admg:
    """Marginalize every node outside ``keep``.

    ``a -> b`` survives when a directed path joins them through dropped
    nodes only; ``a <-> b`` appears when both are reached from a common
    dropped node, or from the two ends of a bidirected edge, along such paths.
    """
    wanted = set(keep)
    missing = wanted - set(g.names)
    if missing:
        raise KeyError(sorted(missing)[0])
    keep = [n for n in g.names if n in wanted]
    dropped = set(g.names) - set(keep)

    # sources[v]: nodes with a directed path into v whose intermediates are all dropped
    sources = {}
    for v in g.names:
        seen, stack = set(), [v]
        while stack:
            w = stack.pop()
            for p in g.parents(w):
                if p not in seen:
                    seen.add(p)
                    if p in dropped:
                        stack.append(p)
        sources[v] = seen
    directed = tuple((a, b) for b in keep for a in keep if a in sources[b])
    reach = {v: sources[v] | {v} for v in keep}
    bidirected = []
    for i, a in enumerate(keep):
        for b in keep[i + 1:]:
            common = (reach[a] & reach[b]) & dropped
            linked = any(
                (u in reach[a] and w in reach[b]) or (w in reach[a] and u in reach[b])
                for u, w in g.bidirected_edges
            )
            if common or linked:
                bidirected.append((a, b))
    return Admg(tuple((n, g.card(n)) for n in keep), directed, tuple(bidirected))
