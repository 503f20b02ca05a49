"""Hoeffding confidence boxes over conditional probabilities and the candidate net.

The data are factorized along a topological order with each variable
conditioned on its graph-reduced history (see
:func:`causalbands.graph.conditioning_sets`).  Every free probability of
every conditional categorical is one *coordinate* of the box.  A Bonferroni
split of ``alpha`` over all coordinates makes the whole box a
``1 - alpha`` confidence set.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dist import ConditionalFactorization, Dataset, DiscreteJoint, Factor, compose, make_rng
from .errors import InputError, MismatchError
from .graph import Admg, conditioning_sets, is_structural_instrument, topological_order


class DegenerateCoordinate(InputError):
    """No observations back this coordinate; its interval is the whole of [0, 1]."""


def hoeffding_halfwidth(n: int, alpha: float) -> float:
    """Half-width ``sqrt(ln(2 / alpha) / (2 n))`` of a two-sided Hoeffding interval."""
    if not 0 < alpha < 1:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    if n < 1:
        raise DegenerateCoordinate("no observations for this coordinate")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


@dataclass(frozen=True)
class Coordinate:
    """One free probability ``P(var = value | given = history)``."""

    var: str
    given: tuple[str, ...]
    history: tuple[int, ...]
    value: int
    estimate: float  # NaN when n == 0
    lo: float
    hi: float
    n: int

    @property
    def halfwidth(self) -> float:
        return (self.hi - self.lo) / 2.0

    def label(self) -> str:
        cond = ",".join(f"{g}={h}" for g, h in zip(self.given, self.history))
        return f"P({self.var}={self.value}|{cond})" if cond else f"P({self.var}={self.value})"


@dataclass(frozen=True, eq=False)
class ConfidenceBox:
    variables: tuple[tuple[str, int], ...]  # topological order
    given: dict
    coordinates: tuple[Coordinate, ...]
    alpha: float

    @property
    def m_total(self) -> int:
        return len(self.coordinates)

    @property
    def coordinate_alpha(self) -> float:
        return self.alpha / self.m_total

    @property
    def sample_counts(self) -> dict:
        return {(c.var, c.history): c.n for c in self.coordinates}

    @property
    def order(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.variables)

    def contains(self, f: ConditionalFactorization, tol: float = 1e-12) -> bool:
        return not self.violations(f, tol)

    def violations(self, f: ConditionalFactorization, tol: float = 1e-12) -> list[Coordinate]:
        """Coordinates whose value in ``f`` falls outside the box."""
        bad = []
        for c in self.coordinates:
            fac = f.factor(c.var)
            if tuple(fac.given) != c.given:
                raise InputError(f"factor of {c.var!r} conditions on {fac.given}, box on {c.given}")
            if fac.degenerate[c.history] if c.given else bool(fac.degenerate):
                continue
            v = fac.table[c.history + (c.value,)]
            if v < c.lo - tol or v > c.hi + tol:
                bad.append(c)
        return bad

    def factorization(self, values) -> ConditionalFactorization | None:
        """Factorization with coordinate values ``values``; None if a remainder goes negative."""
        cards = dict(self.variables)
        tables = {v: np.zeros(tuple(cards[g] for g in self.given[v]) + (cards[v],)) for v in self.order}
        for c, val in zip(self.coordinates, values):
            tables[c.var][c.history + (c.value,)] = val
        factors = []
        for v in self.order:
            t = tables[v]
            rem = 1.0 - t[..., 1:].sum(axis=-1)
            if np.any(rem < -1e-12):
                return None
            t[..., 0] = np.maximum(rem, 0.0)
            t.setflags(write=False)
            deg = np.zeros(t.shape[:-1], dtype=bool)
            deg.setflags(write=False)
            factors.append(Factor(v, tuple(self.given[v]), t, deg))
        return ConditionalFactorization(self.variables, tuple(factors))

    def center(self) -> ConditionalFactorization | None:
        return self.factorization([(c.lo + c.hi) / 2 for c in self.coordinates])


def _check_alignment(d: Dataset, g: Admg):
    if set(d.names) != set(g.names):
        raise MismatchError(f"dataset variables {list(d.names)} do not match graph nodes {list(g.names)}")
    for name, card in d.variables:
        if g.card(name) != card:
            raise MismatchError(f"cardinality of {name!r}: data {card}, graph {g.card(name)}")


def confidence_box(d: Dataset, g: Admg, alpha: float = 0.05) -> ConfidenceBox:
    """Product of per-coordinate Hoeffding intervals at level ``alpha / m_total``."""
    if not 0 < alpha < 1:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    _check_alignment(d, g)
    order = topological_order(g)
    given = conditioning_sets(g, order)
    col = {n: k for k, n in enumerate(d.names)}
    raw = []
    for v in order:
        gv = given[v]
        cards = tuple(g.card(x) for x in gv)
        shape = cards + (g.card(v),)
        counts = np.zeros(shape, dtype=np.int64)
        idx = tuple(d.rows[:, col[x]] for x in gv) + (d.rows[:, col[v]],)
        np.add.at(counts, idx, 1)
        for hist in itertools.product(*(range(c) for c in cards)):
            row = counts[hist]
            n = int(row.sum())
            for val in range(1, g.card(v)):
                raw.append((v, gv, tuple(hist), val, row[val], n))
    m_total = len(raw)
    a = alpha / m_total
    coords = []
    for v, gv, hist, val, k, n in raw:
        if n == 0:
            coords.append(Coordinate(v, gv, hist, val, float("nan"), 0.0, 1.0, 0))
            continue
        est = k / n
        eps = hoeffding_halfwidth(n, a)
        coords.append(Coordinate(v, gv, hist, val, est, max(0.0, est - eps), min(1.0, est + eps), n))
    variables = tuple((v, g.card(v)) for v in order)
    return ConfidenceBox(variables, given, tuple(coords), float(alpha))


def centroids(c: Coordinate, eps_s: float) -> np.ndarray:
    """Midpoints of ``ceil(halfwidth / eps_s)`` equal pieces of ``[lo, hi]`` (at least one piece).

    Every point of the interval is within ``eps_s`` of some centroid.
    """
    k = max(1, math.ceil(c.halfwidth / eps_s - 1e-9))
    return c.lo + (2 * np.arange(k) + 1) * (c.hi - c.lo) / (2 * k)


@dataclass(frozen=True, eq=False)
class Candidate:
    id: int
    values: tuple[float, ...]
    factorization: ConditionalFactorization
    joint: DiscreteJoint


@dataclass(frozen=True, eq=False)
class EpsilonNet:
    box: ConfidenceBox
    candidates: tuple[Candidate, ...]
    eps_s: float
    m: int
    seed: int
    lattice_size: int
    exhaustive: bool
    rejected_count: int = 0
    invalid_draws: int = 0
    rejected_ids: tuple[int, ...] = field(default=())

    def __len__(self):
        return len(self.candidates)

    def to_dict(self) -> dict:
        return {
            "alpha": self.box.alpha,
            "eps_s": self.eps_s,
            "m": self.m,
            "seed": self.seed,
            "lattice_size": self.lattice_size,
            "exhaustive": self.exhaustive,
            "rejected_count": self.rejected_count,
            "variables": [{"name": n, "card": c} for n, c in self.box.variables],
            "coordinates": [c.label() for c in self.box.coordinates],
            "candidates": [
                {"id": c.id, "values": list(c.values), "table": [float(x) for x in c.joint.flat]}
                for c in self.candidates
            ],
        }

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")


def build_epsilon_net(box: ConfidenceBox, eps_s: float = 0.01, m: int = 200, seed: int = 0) -> EpsilonNet:
    """Candidate joints on the product lattice of per-coordinate centroids.

    Lattices with at most ``m`` points are enumerated in full (lexicographic
    order); larger ones are sampled uniformly without replacement, picking
    one centroid per coordinate per draw.
    """
    if not eps_s > 0:
        raise InputError(f"eps_s must be positive, got {eps_s}")
    if m < 1:
        raise InputError(f"m must be at least 1, got {m}")
    grids = [centroids(c, eps_s) for c in box.coordinates]
    sizes = [len(gr) for gr in grids]
    lattice = math.prod(sizes)
    picks = []
    invalid = 0
    if lattice <= m:
        exhaustive = True
        for idx in itertools.product(*(range(s) for s in sizes)):
            picks.append(idx)
    else:
        exhaustive = False
        rng = make_rng(seed)
        seen = set()
        attempts = 0
        limit = 50 * m
        while len(picks) < m and attempts < limit:
            attempts += 1
            idx = tuple(int(rng.integers(s)) for s in sizes)
            if idx in seen:
                continue
            seen.add(idx)
            picks.append(idx)
    candidates = []
    for idx in picks:
        values = tuple(float(gr[i]) for gr, i in zip(grids, idx))
        f = box.factorization(values)
        if f is None:
            invalid += 1
            continue
        candidates.append(Candidate(len(candidates), values, f, compose(f)))
    return EpsilonNet(box, tuple(candidates), float(eps_s), int(m), int(seed), int(lattice), exhaustive, 0, invalid)


def instrumental_inequality(p: DiscreteJoint, i: str, x: str, y: str) -> float:
    """``max_x sum_y max_z P(x, y | z)``; at most 1 for any distribution compatible with an IV graph."""
    t = np.moveaxis(p.table, [p.axis(i), p.axis(x), p.axis(y)], [0, 1, 2])
    t = t.reshape(t.shape[:3] + (-1,)).sum(axis=-1)  # (z, x, y)
    pz = t.sum(axis=(1, 2))
    ok = pz > 0
    cond = t[ok] / pz[ok, None, None]
    return float(cond.max(axis=0).sum(axis=1).max())


def reject_incompatible(net: EpsilonNet, g: Admg, i: str, x: str, y: str, tol: float = 1e-9) -> EpsilonNet:
    """Drop candidates that violate the instrumental inequality for ``i -> x -> y``."""
    if not is_structural_instrument(g, i, x, y):
        raise InputError(f"{i!r} is not a structural instrument for {x!r} -> {y!r}")
    keep, dropped = [], []
    for c in net.candidates:
        if instrumental_inequality(c.joint, i, x, y) <= 1.0 + tol:
            keep.append(c)
        else:
            dropped.append(c.id)
    return replace(
        net,
        candidates=tuple(keep),
        rejected_count=net.rejected_count + len(dropped),
        rejected_ids=net.rejected_ids + tuple(dropped),
    )
