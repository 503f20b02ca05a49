"""Discrete joint distributions, datasets, and chain-rule factorizations.

All randomness goes through :func:`make_rng`, a Philox-4x64 counter-based
generator keyed by an explicit integer seed, so every stochastic result is
bit-reproducible across runs and platforms.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CompositionError, InputError, PositivityError

NORM_TOL = 1e-12


def make_rng(seed: int) -> np.random.Generator:
    """Seeded Philox-4x64 generator used for every random draw in the package."""
    return np.random.Generator(np.random.Philox(int(seed)))


def _norm_vars(variables):
    out = tuple((str(n), int(c)) for n, c in variables)
    names = [n for n, _ in out]
    if len(set(names)) != len(names):
        raise InputError(f"duplicate variable names in {names}")
    return out


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteJoint:
    """Probability table over ordered discrete variables.

    ``table`` has one axis per variable (so ``table.ravel()`` is the
    row-major flat layout used in JSON files).
    """

    variables: tuple[tuple[str, int], ...]
    table: np.ndarray

    def __post_init__(self):
        variables = _norm_vars(self.variables)
        object.__setattr__(self, "variables", variables)
        shape = tuple(c for _, c in variables)
        table = np.asarray(self.table, dtype=float)
        if table.size != int(np.prod(shape, dtype=np.int64)):
            raise InputError(f"table has {table.size} entries, expected {int(np.prod(shape))}")
        table = table.reshape(shape)
        if np.any(~np.isfinite(table)) or np.any(table < 0):
            raise InputError("probabilities must be finite and non-negative")
        if abs(table.sum() - 1.0) > NORM_TOL * max(1, table.size):
            raise InputError(f"probabilities sum to {table.sum()!r}, not 1")
        object.__setattr__(self, "table", _frozen(table))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.variables)

    @property
    def cards(self) -> tuple[int, ...]:
        return tuple(c for _, c in self.variables)

    @property
    def flat(self) -> np.ndarray:
        return self.table.ravel()

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InputError(f"unknown variable {name!r}") from None

    def prob(self, **assignment) -> float:
        """Probability of a (possibly partial) assignment, e.g. ``p.prob(X=1, Y=0)``."""
        idx = [slice(None)] * len(self.variables)
        for k, v in assignment.items():
            idx[self.axis(k)] = int(v)
        return float(self.table[tuple(idx)].sum())

    def to_dict(self) -> dict:
        return {
            "variables": [{"name": n, "card": c} for n, c in self.variables],
            "table": [float(x) for x in self.flat],
        }

    @classmethod
    def from_dict(cls, data) -> DiscreteJoint:
        try:
            variables = [(v["name"], v.get("card", 2)) if isinstance(v, dict) else (v, 2) for v in data["variables"]]
            return cls(tuple(variables), np.asarray(data["table"], dtype=float))
        except (KeyError, TypeError) as exc:
            raise InputError(f"bad joint-table JSON: {exc}") from exc

    @classmethod
    def load(cls, path) -> DiscreteJoint:
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from exc

    @classmethod
    def uniform(cls, variables) -> DiscreteJoint:
        shape = tuple(c for _, c in variables)
        return cls(variables, np.full(shape, 1.0 / np.prod(shape)))

    @classmethod
    def point_mass(cls, variables, config) -> DiscreteJoint:
        shape = tuple(c for _, c in variables)
        t = np.zeros(shape)
        t[tuple(config)] = 1.0
        return cls(variables, t)

    @classmethod
    def random(cls, variables, seed, concentration=1.0) -> DiscreteJoint:
        """Dirichlet draw over the full table."""
        shape = tuple(c for _, c in variables)
        w = make_rng(seed).dirichlet(np.full(int(np.prod(shape)), concentration))
        return cls(variables, w.reshape(shape))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Integer-coded samples; ``rows`` has one column per variable."""

    variables: tuple[tuple[str, int], ...]
    rows: np.ndarray

    def __post_init__(self):
        variables = _norm_vars(self.variables)
        object.__setattr__(self, "variables", variables)
        rows = np.asarray(self.rows)
        if rows.size == 0:
            rows = rows.reshape(0, len(variables))
        if rows.ndim != 2 or rows.shape[1] != len(variables):
            raise InputError(f"rows must have shape (n, {len(variables)})")
        if not np.issubdtype(rows.dtype, np.integer):
            if np.any(rows != np.round(rows)):
                raise InputError("dataset values must be integers")
        rows = rows.astype(np.int64)
        for j, (name, card) in enumerate(variables):
            col = rows[:, j]
            if col.size and (col.min() < 0 or col.max() >= card):
                raise InputError(f"values of {name!r} must lie in [0, {card})")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    def __len__(self):
        return int(self.rows.shape[0])

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.variables)

    def select(self, names) -> Dataset:
        idx = [self.names.index(n) for n in names]
        return Dataset(tuple(self.variables[i] for i in idx), self.rows[:, idx])

    def head(self, n: int) -> Dataset:
        return Dataset(self.variables, self.rows[:n])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.names)
        w.writerows(self.rows.tolist())
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path_or_text, cards=None, is_text=False) -> Dataset:
        """Read a CSV with a header of variable names and integer-coded rows.

        ``cards`` maps names to cardinalities; missing names get
        ``max(value) + 1`` (at least 2).
        """
        text = path_or_text if is_text else Path(path_or_text).read_text()
        reader = csv.reader(io.StringIO(text))
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError("empty CSV") from None
        if not header or any(not h for h in header):
            raise InputError("CSV header must name every column")
        body = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise InputError(f"line {lineno}: expected {len(header)} fields, got {len(rec)}")
            try:
                body.append([int(c) for c in rec])
            except ValueError:
                raise InputError(f"line {lineno}: non-integer value in {rec}") from None
        rows = np.array(body, dtype=np.int64).reshape(-1, len(header))
        cards = dict(cards or {})
        variables = []
        for j, name in enumerate(header):
            c = cards.get(name)
            if c is None:
                c = max(2, int(rows[:, j].max()) + 1) if len(rows) else 2
            variables.append((name, int(c)))
        return cls(tuple(variables), rows)


@dataclass(frozen=True, eq=False)
class Factor:
    """Conditional table ``P(var | given)``.

    ``table`` has shape ``cards(given) + (card(var),)``.  Rows whose
    conditioning event has probability zero are marked in ``degenerate``
    and hold NaN until resolved.
    """

    var: str
    given: tuple[str, ...]
    table: np.ndarray
    degenerate: np.ndarray

    @property
    def n_rows(self) -> int:
        return int(np.prod(self.table.shape[:-1], dtype=np.int64))

    def row(self, history) -> np.ndarray:
        return self.table[tuple(history)]


@dataclass(frozen=True, eq=False)
class ConditionalFactorization:
    variables: tuple[tuple[str, int], ...]
    factors: tuple[Factor, ...]

    @property
    def order(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.variables)

    @property
    def cards(self) -> dict[str, int]:
        return dict(self.variables)

    def factor(self, name: str) -> Factor:
        for f in self.factors:
            if f.var == name:
                return f
        raise InputError(f"no factor for {name!r}")

    @property
    def has_degenerate(self) -> bool:
        return any(bool(f.degenerate.any()) for f in self.factors)

    def resolved(self, fill="uniform") -> ConditionalFactorization:
        """Copy with every degenerate row replaced by an explicit categorical."""
        out = []
        for f in self.factors:
            t = np.array(f.table)
            k = t.shape[-1]
            if fill == "uniform":
                t[f.degenerate] = 1.0 / k
            else:
                t[f.degenerate] = np.asarray(fill, dtype=float)
            out.append(Factor(f.var, f.given, _frozen(t), _frozen_bool(np.zeros_like(f.degenerate))))
        return ConditionalFactorization(self.variables, tuple(out))


def _frozen_bool(a):
    a = np.array(a, dtype=bool)
    a.setflags(write=False)
    return a


def empirical_joint(d: Dataset) -> DiscreteJoint:
    """Relative frequencies of every configuration in ``d``."""
    if len(d) == 0:
        raise InputError("cannot estimate a distribution from an empty dataset")
    shape = tuple(c for _, c in d.variables)
    flat = np.ravel_multi_index(d.rows.T, shape)
    counts = np.bincount(flat, minlength=int(np.prod(shape)))
    return DiscreteJoint(d.variables, counts / counts.sum())


def marginal(p: DiscreteJoint, keep) -> DiscreteJoint:
    """Sum out every variable not in ``keep``; the result keeps ``p``'s order."""
    keep = set(keep)
    for k in keep:
        p.axis(k)
    axes = tuple(i for i, n in enumerate(p.names) if n not in keep)
    kept = tuple(v for v in p.variables if v[0] in keep)
    return DiscreteJoint(kept, p.table.sum(axis=axes))


def _marginal_array(p: DiscreteJoint, names):
    """Marginal table with axes in the order of ``names``."""
    axes = [p.axis(n) for n in names]
    drop = tuple(i for i in range(len(p.variables)) if i not in axes)
    m = p.table.sum(axis=drop) if drop else p.table
    # remaining axes are in p order; permute to requested order
    remaining = [i for i in range(len(p.variables)) if i in axes]
    return np.transpose(m, [remaining.index(a) for a in axes])


def conditional(p: DiscreteJoint, target: str, given: dict | None = None) -> np.ndarray:
    """Categorical ``P(target | given)`` as a vector."""
    given = dict(given or {})
    names = list(given) + [target]
    m = _marginal_array(p, names)
    row = m[tuple(int(given[k]) for k in given)]
    z = row.sum()
    if z <= 0:
        raise PositivityError(f"P({given}) = 0; cannot condition {target!r} on it")
    return row / z


def factorize(p: DiscreteJoint, order, given=None) -> ConditionalFactorization:
    """Chain-rule factorization of ``p`` along ``order``.

    ``given`` optionally maps each variable to the subset of its predecessors
    it is conditioned on (default: all predecessors).
    """
    order = list(order)
    if sorted(order) != sorted(p.names) or len(order) != len(p.names):
        raise InputError(f"order {order} is not a permutation of {list(p.names)}")
    cards = dict(p.variables)
    factors = []
    for k, v in enumerate(order):
        cond = tuple(given[v]) if given is not None else tuple(order[:k])
        if any(c not in order[:k] for c in cond):
            raise InputError(f"conditioning set of {v!r} must precede it in the order")
        m = _marginal_array(p, list(cond) + [v])
        z = m.sum(axis=-1, keepdims=True)
        degenerate = z[..., 0] <= 0
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(z > 0, m / np.where(z > 0, z, 1.0), np.nan)
        factors.append(Factor(v, cond, _frozen(t), _frozen_bool(degenerate)))
    return ConditionalFactorization(tuple((v, cards[v]) for v in order), tuple(factors))


def compose(f: ConditionalFactorization) -> DiscreteJoint:
    """Multiply the factors back into a joint table (in factorization order)."""
    if f.has_degenerate:
        bad = [x.var for x in f.factors if x.degenerate.any()]
        raise CompositionError(f"unresolved degenerate factors for {bad}")
    names = list(f.order)
    shape = tuple(c for _, c in f.variables)
    joint = np.ones(shape)
    for fac in f.factors:
        axes = [names.index(g) for g in fac.given] + [names.index(fac.var)]
        t = np.transpose(fac.table, np.argsort(axes))
        view_shape = [1] * len(names)
        for a in axes:
            view_shape[a] = shape[a]
        joint = joint * t.reshape(view_shape)
    total = joint.sum()
    if abs(total - 1.0) > 1e-9:
        raise CompositionError(f"factors do not compose to a distribution (sum {total!r})")
    return DiscreteJoint(f.variables, joint / total)


def tvd(p: DiscreteJoint, q: DiscreteJoint) -> float:
    """Total variation distance between joints over the same ordered variables."""
    if p.variables != q.variables:
        raise InputError("tvd needs identical variable lists")
    return float(0.5 * np.abs(p.table - q.table).sum())


def reorder(p: DiscreteJoint, names) -> DiscreteJoint:
    names = list(names)
    if sorted(names) != sorted(p.names):
        raise InputError(f"{names} is not a permutation of {list(p.names)}")
    cards = dict(p.variables)
    return DiscreteJoint(tuple((n, cards[n]) for n in names), _marginal_array(p, names))


def sample(p: DiscreteJoint, n: int, seed: int) -> Dataset:
    """``n`` IID draws from ``p``."""
    if n < 1:
        raise InputError("sample size must be at least 1")
    rng = make_rng(seed)
    flat = p.flat / p.flat.sum()
    idx = rng.choice(flat.size, size=int(n), p=flat)
    rows = np.stack(np.unravel_index(idx, p.cards), axis=1)
    return Dataset(p.variables, rows)
