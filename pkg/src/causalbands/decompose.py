"""Aggregate per-candidate bounds into inner/outer regions and pick the next move."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundPair, Query, ate_vs_best, lp_bounds
from .confset import build_epsilon_net, confidence_box, hoeffding_halfwidth, reject_incompatible
from .dist import Dataset
from .errors import InfeasibleError, InputError, InvariantError, OptimizationFailure
from .graph import Admg
from .relaxed import RelaxedTrainConfig, relaxed_bounds

IDENTITY_TOL = 1e-12
ORDER_TOL = 1e-9


@dataclass(frozen=True)
class UncertaintyDecomposition:
    query: Query
    L_lo: float
    L_hi: float
    U_lo: float
    U_hi: float
    candidate_count: int
    method: str = "lp"
    gamma: float | None = None
    skipped: int = 0
    intervals: tuple[tuple[float, float], ...] = field(default=(), repr=False)

    @property
    def inner(self) -> tuple[float, float] | None:
        if self.L_hi <= self.U_lo:
            return (self.L_hi, self.U_lo)
        return None

    @property
    def outer(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return ((self.L_lo, self.L_hi), (self.U_lo, self.U_hi))

    @property
    def inner_width(self) -> float:
        return 0.0 if self.inner is None else self.U_lo - self.L_hi

    @property
    def outer_width(self) -> float:
        """Total length of the band, counting an overlap of its two pieces once."""
        (a, b), (c, d) = self.outer
        if c <= b:
            return max(b, d) - a
        return (b - a) + (d - c)

    @property
    def union_width(self) -> float:
        return _length(interval_union(self.intervals)) if self.intervals else self.U_hi - self.L_lo

    def check(self) -> None:
        if self.L_lo > self.L_hi + ORDER_TOL or self.U_lo > self.U_hi + ORDER_TOL:
            raise InvariantError(f"quantities out of order: {self}")


@dataclass(frozen=True)
class Move:
    kind: str  # "Return" | "Observe" | "Collect"
    rationale: str
    conclusion: str | None = None
    action: int | None = None

    def __post_init__(self):
        if self.kind not in ("Return", "Observe", "Collect"):
            raise InputError(f"unknown move {self.kind!r}")


# -- interval algebra ---------------------------------------------------------


def interval_union(intervals) -> list[tuple[float, float]]:
    """Merge closed intervals into disjoint sorted pieces."""
    out: list[list[float]] = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def interval_intersection(intervals) -> tuple[float, float] | None:
    lo = max(a for a, _ in intervals)
    hi = min(b for _, b in intervals)
    return (lo, hi) if lo <= hi else None


def interval_difference(pieces, cut) -> list[tuple[float, float]]:
    """``pieces`` minus the interior of ``cut``; endpoints are kept, so the result stays closed."""
    if cut is None:
        return list(pieces)
    a, b = cut
    out = []
    for lo, hi in pieces:
        if hi < a or lo > b:
            out.append((lo, hi))
            continue
        if lo <= a:
            out.append((lo, a))
        if hi >= b:
            out.append((b, hi))
    return out


def _length(pieces) -> float:
    return float(sum(b - a for a, b in pieces))


# -- aggregation ----------------------------------------------------------------


def four_quantities(results, gamma: float | None = None, skipped: int = 0) -> UncertaintyDecomposition:
    """``results`` is a list of ``(candidate_id, BoundPair)`` for one query."""
    results = sorted(results, key=lambda r: r[0])
    if not results:
        raise InputError("no candidate bounds to aggregate")
    q = results[0][1].query
    if any(bp.query != q for _, bp in results):
        raise InputError("results mix different queries")
    methods = {bp.method for _, bp in results}
    if len(methods) != 1:
        raise InputError(f"results mix methods {sorted(methods)}")
    lowers = np.array([bp.lower for _, bp in results])
    uppers = np.array([bp.upper for _, bp in results])
    dec = UncertaintyDecomposition(
        q,
        float(lowers.min()),
        float(lowers.max()),
        float(uppers.min()),
        float(uppers.max()),
        len(results),
        methods.pop(),
        gamma,
        skipped,
        tuple(zip(lowers.tolist(), uppers.tolist())),
    )
    dec.check()
    verify_identities(dec)
    if dec.inner is None:
        warnings.warn(
            f"inner region of {q.describe()} is empty (L_hi={dec.L_hi:.4g} > U_lo={dec.U_lo:.4g})", stacklevel=2
        )
    return dec


def verify_identities(dec: UncertaintyDecomposition, tol: float = IDENTITY_TOL) -> None:
    """Inner region is the intersection of all candidate intervals; outer band is union minus inner."""
    if not dec.intervals:
        return
    inter = interval_intersection(dec.intervals)
    if (inter is None) != (dec.inner is None):
        raise InvariantError(f"inner region {dec.inner} disagrees with intersection {inter}")
    if inter is not None and max(abs(inter[0] - dec.inner[0]), abs(inter[1] - dec.inner[1])) > tol:
        raise InvariantError(f"inner region {dec.inner} differs from intersection {inter}")
    union = interval_union(dec.intervals)
    if dec.inner is None:
        lo, hi = union[0][0], union[-1][1]
        if abs(lo - dec.L_lo) > tol or abs(hi - dec.U_hi) > tol:
            raise InvariantError("outer band does not cover the union of candidate intervals")
        return
    rest = [p for p in interval_difference(union, dec.inner)]
    band = [p for p in dec.outer]
    if len(rest) != 2 or any(abs(x - y) > tol for r, b in zip(rest, band) for x, y in zip(r, b)):
        raise InvariantError(f"outer band {band} differs from union minus inner {rest}")


# -- decisions --------------------------------------------------------------------


def decide_single(dec: UncertaintyDecomposition, gamma, gamma_halfwidth: float = 0.0) -> Move:
    """Compare the bounds on ``P(y | do(x))`` with the threshold ``gamma``.

    ``gamma`` may be a number or a ``(lo, hi)`` interval; with
    ``gamma_halfwidth`` a number is widened to ``gamma +/- halfwidth``.  Every
    inequality must hold at both ends of the interval.
    """
    dec.check()
    if np.ndim(gamma) == 0:
        g_lo, g_hi = float(gamma) - gamma_halfwidth, float(gamma) + gamma_halfwidth
    else:
        g_lo, g_hi = (float(v) for v in gamma)
    act = dec.query.action
    if g_hi < dec.L_lo:
        return Move("Return", f"gamma {g_hi:.4g} < L_lo {dec.L_lo:.4g}", "beneficial", act)
    if g_lo > dec.U_hi:
        return Move("Return", f"gamma {g_lo:.4g} > U_hi {dec.U_hi:.4g}", "harmful", act)
    if dec.L_hi < g_lo and g_hi < dec.U_lo:
        return Move("Observe", f"L_hi {dec.L_hi:.4g} < gamma < U_lo {dec.U_lo:.4g}", None, act)
    return Move("Collect", "gamma lies in the outer band", None, act)


def decide_multi(dec_ate: UncertaintyDecomposition) -> Move:
    """Decide from ATE bounds: is the action best, excluded, or still ambiguous."""
    dec_ate.check()
    act = dec_ate.query.action
    if dec_ate.L_lo > 0:
        return Move("Return", f"L_lo {dec_ate.L_lo:.4g} > 0", "best", act)
    if dec_ate.U_hi < 0:
        return Move("Return", f"U_hi {dec_ate.U_hi:.4g} < 0", "excluded", act)
    if dec_ate.L_hi < 0 < dec_ate.U_lo:
        return Move("Observe", f"L_hi {dec_ate.L_hi:.4g} < 0 < U_lo {dec_ate.U_lo:.4g}", None, act)
    return Move("Collect", "0 lies in the outer band", None, act)


def combine_moves(moves, mode: str = "single") -> Move:
    """One move for all actions.

    Return when every action is settled (or, for ATE, one is settled as
    best); otherwise Observe if any action is ambiguous regardless of
    sample size, else Collect.
    """
    moves = list(moves)
    if mode == "ate":
        best = [m for m in moves if m.kind == "Return" and m.conclusion == "best"]
        if best:
            return best[0]
    if all(m.kind == "Return" for m in moves):
        parts = "; ".join(f"do({m.action}) {m.conclusion}" for m in moves)
        return Move("Return", parts, ",".join(str(m.conclusion) for m in moves))
    for m in moves:
        if m.kind == "Observe":
            return Move("Observe", f"action {m.action}: {m.rationale}", None, m.action)
    first = next(m for m in moves if m.kind == "Collect")
    return Move("Collect", f"action {first.action}: {first.rationale}", None, first.action)


# -- pipeline ----------------------------------------------------------------------


@dataclass(frozen=True)
class QuerySpec:
    treatment: str
    outcome: str
    outcome_value: int = 1
    actions: tuple[int, ...] | None = None
    mode: str = "single"  # "single" | "ate"

    def __post_init__(self):
        if self.mode not in ("single", "ate"):
            raise InputError(f"mode must be 'single' or 'ate', got {self.mode!r}")


@dataclass(frozen=True)
class ExploreConfig:
    alpha: float = 0.05
    eps_s: float = 0.01
    m: int = 200
    seed: int = 0
    solver: str = "lp"  # "lp" | "gradient" | "both"
    gamma: float | None = None  # None: empirical P(y) in single mode, 0 in ATE mode
    workers: int = 1
    instrument: str | None = None
    trainer: RelaxedTrainConfig = RelaxedTrainConfig()

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InputError("alpha must lie in (0, 1)")
        if self.eps_s <= 0:
            raise InputError("eps_s must be positive")
        if self.m < 1:
            raise InputError("m must be at least 1")
        if self.solver not in ("lp", "gradient", "both"):
            raise InputError(f"solver must be lp, gradient or both, got {self.solver!r}")
        if self.workers < 1:
            raise InputError("workers must be at least 1")


@dataclass(frozen=True)
class ExploreResult:
    decompositions: tuple[UncertaintyDecomposition, ...]
    moves: tuple[Move, ...]
    move: Move
    gamma: float
    gamma_halfwidth: float
    candidates: int
    rejected: int
    lattice_size: int


def _queries(g: Admg, spec: QuerySpec) -> list[Query]:
    actions = spec.actions if spec.actions is not None else tuple(range(g.card(spec.treatment)))
    out = []
    for a in actions:
        if spec.mode == "single":
            out.append(Query(spec.treatment, a, spec.outcome, spec.outcome_value))
        elif g.card(spec.treatment) == 2:
            out.append(Query(spec.treatment, a, spec.outcome, 1, 1 - a))
        else:
            out.append(Query(spec.treatment, a, spec.outcome, 1, -1))
    return out


def _solve(f, g, q: Query, method: str, trainer: RelaxedTrainConfig) -> BoundPair:
    if method == "gradient":
        return relaxed_bounds(f, g, q, trainer)
    if q.baseline == -1:
        return ate_vs_best(f, g, q.treatment, q.outcome, q.action)
    return lp_bounds(f, g, q)


def candidate_bounds(net, g: Admg, queries, method: str, trainer: RelaxedTrainConfig, workers: int = 1):
    """Per-candidate bounds for every query; candidates that cannot be solved are skipped.

    Returns ``(results, skipped_ids)`` with ``results[k]`` a list of
    ``(candidate_id, BoundPair)`` for ``queries[k]``.
    """

    def work(cand):
        try:
            return cand.id, [_solve(cand.factorization, g, q, method, trainer) for q in queries]
        except (InfeasibleError, OptimizationFailure):
            return cand.id, None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            done = list(ex.map(work, net.candidates))
    else:
        done = [work(c) for c in net.candidates]
    done.sort(key=lambda r: r[0])
    skipped = tuple(cid for cid, r in done if r is None)
    results = [[(cid, r[k]) for cid, r in done if r is not None] for k in range(len(queries))]
    return results, skipped


def explore(d: Dataset, g: Admg, spec: QuerySpec, cfg: ExploreConfig = ExploreConfig()) -> ExploreResult:
    """Confidence box, candidate net, per-candidate bounds, aggregation and decision."""
    box = confidence_box(d, g, cfg.alpha)
    net = build_epsilon_net(box, cfg.eps_s, cfg.m, cfg.seed)
    if cfg.instrument is not None:
        net = reject_incompatible(net, g, cfg.instrument, spec.treatment, spec.outcome)
    queries = _queries(g, spec)
    if spec.mode == "ate":
        gamma, half = 0.0, 0.0
    elif cfg.gamma is not None:
        gamma, half = float(cfg.gamma), 0.0
    else:
        col = d.names.index(spec.outcome)
        gamma = float(np.mean(d.rows[:, col] == spec.outcome_value))
        half = hoeffding_halfwidth(len(d), cfg.alpha)
    methods = ["lp", "gradient"] if cfg.solver == "both" else [cfg.solver]
    decs = []
    moves = []
    for method in methods:
        results, skipped = candidate_bounds(net, g, queries, method, cfg.trainer, cfg.workers)
        if not results or not results[0]:
            raise InfeasibleError(f"every candidate was infeasible ({len(skipped)} skipped)")
        for q, res in zip(queries, results):
            dec = four_quantities(res, gamma, len(skipped))
            decs.append(dec)
            if method == methods[0]:
                moves.append(decide_multi(dec) if spec.mode == "ate" else decide_single(dec, gamma, half))
    move = combine_moves(moves, spec.mode)
    return ExploreResult(
        tuple(decs), tuple(moves), move, gamma, half, len(net.candidates), net.rejected_count, net.lattice_size
    )
