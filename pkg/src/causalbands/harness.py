"""Synthetic SCMs, brute-force oracles and scripted experiment runs."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .bounds import BoundPair, Query, as_factorization, canonical_constraints, effect_vector
from .canon import CanonicalScm, build_response_space, interventional_joint, simulate_canonical
from .decompose import ExploreConfig, QuerySpec, explore
from .dist import make_rng
from .errors import CapabilityError, InfeasibleError, InputError
from .graph import (
    Admg,
    backdoor_graph,
    bow_graph,
    latent_projection,
    two_confounder_graph,
    two_instrument_graph,
)
from .report import build_report, dumps

VERTEX_LIMIT = 200_000


# -- SCM generation -----------------------------------------------------------


def gen_random_scm(g: Admg, seed: int, scale: float = 1.0) -> CanonicalScm:
    """Normalized exponentials of seeded Gaussians over every component's profiles."""
    space = build_response_space(g)
    rng = make_rng(seed)
    q = {}
    for comp in space.components:
        w = np.exp(scale * rng.standard_normal(comp.n_profiles))
        q[comp.members] = w / w.sum()
    return CanonicalScm(g, q)


def scm_from_cpts(g: Admg, cpts: dict) -> CanonicalScm:
    """Canonical SCM whose response functions are drawn independently per variable.

    ``cpts[v]`` has shape ``parent_cards + (card,)`` with parents in graph
    declaration order.  No latent confounding is realized, whatever the
    bidirected edges say.
    """
    space = build_response_space(g)
    per_var = {}
    for v, vr in space.variables.items():
        t = np.asarray(cpts[v], dtype=float).reshape(-1, vr.card)
        if t.shape[0] != vr.outputs.shape[1]:
            raise InputError(f"table for {v!r} has {t.shape[0]} parent rows, expected {vr.outputs.shape[1]}")
        if np.any(t < 0) or np.any(np.abs(t.sum(axis=1) - 1) > 1e-12):
            raise InputError(f"rows of the table for {v!r} must be probability vectors")
        cfg = np.arange(vr.outputs.shape[1])
        per_var[v] = np.prod(t[cfg[None, :], vr.outputs], axis=1)
    q = {}
    for comp in space.components:
        w = np.array([1.0])
        for m in comp.members:
            w = np.outer(w, per_var[m]).ravel()
        q[comp.members] = w / w.sum()
    return CanonicalScm(g, q)


def true_effect(scm: CanonicalScm, query: Query) -> float:
    def p(a):
        return interventional_joint(scm, {query.treatment: a}).prob(**{query.outcome: query.outcome_value})

    if query.is_ate:
        return p(query.action) - p(query.baseline)
    return p(query.action)


# -- oracles ------------------------------------------------------------------------


def independent_rows(A: np.ndarray, b: np.ndarray, tol: float = 1e-9):
    keep = []
    for i in range(A.shape[0]):
        trial = keep + [i]
        if np.linalg.matrix_rank(A[trial], tol=tol) == len(trial):
            keep = trial
    return A[keep], b[keep]


def vertex_extremes(A: np.ndarray, b: np.ndarray, c: np.ndarray, limit: int = VERTEX_LIMIT, tol: float = 1e-10):
    """``(min, max)`` of ``c @ x`` over ``{A x = b, x >= 0}`` by visiting every basic feasible solution."""
    A, b = independent_rows(np.asarray(A, float), np.asarray(b, float))
    m, n = A.shape
    if math.comb(n, m) > limit:
        raise CapabilityError(f"{math.comb(n, m)} candidate bases exceed the limit {limit}")
    lo, hi = np.inf, -np.inf
    for cols in itertools.combinations(range(n), m):
        B = A[:, cols]
        if m and abs(np.linalg.det(B)) < 1e-12:
            continue
        xB = np.linalg.solve(B, b) if m else np.zeros(0)
        if np.any(xB < -tol):
            continue
        v = float(c[list(cols)] @ xB) if m else 0.0
        lo, hi = min(lo, v), max(hi, v)
    if lo > hi:
        raise InfeasibleError("no basic feasible solution", None)
    return lo, hi


def random_feasible_points(A, b, budget: int, seed: int = 0, batch: int = 5000, max_iter: int = 1000, tol: float = 1e-9):
    """Points of ``{A x = b, x >= 0}`` from Dykstra projections of scattered starting points."""
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    A, b = independent_rows(A, b)
    pinv = np.linalg.pinv(A)
    n = A.shape[1]
    rng = make_rng(seed)

    def affine(x):
        return x - (x @ A.T - b) @ pinv.T

    out = []
    remaining = budget
    while remaining > 0:
        k = min(batch, remaining)
        remaining -= k
        scale = np.exp(rng.uniform(np.log(0.05), np.log(50.0), size=(k, 1)))
        x = scale * rng.standard_normal((k, n))
        p = np.zeros_like(x)
        r = np.zeros_like(x)
        for it in range(max_iter):
            y = affine(x + p)
            p = x + p - y
            x = np.maximum(y + r, 0.0)
            r = y + r - x
            if it % 10 == 9:
                z = affine(x)
                done = np.min(z, axis=1) > -tol
                out.append(np.maximum(z[done], 0.0))
                x, p, r = x[~done], p[~done], r[~done]
                if not len(x):
                    break
    return np.vstack(out) if out else np.zeros((0, n))


def brute_force_bounds(p, g: Admg, query: Query, budget: int = 0, seed: int = 0, limit: int = VERTEX_LIMIT) -> BoundPair:
    """Bounds by vertex enumeration when the basis count is within ``limit``, else by random feasible points."""
    f = as_factorization(p, g, strict=True)
    sys = canonical_constraints(f, g, query.treatment)
    c = effect_vector(f, g, query)
    try:
        lo, hi = vertex_extremes(sys.A_eq, sys.b_eq, c, limit)
    except CapabilityError:
        if budget < 1:
            raise
        pts = random_feasible_points(sys.A_eq, sys.b_eq, budget, seed)
        if not len(pts):
            raise InfeasibleError("no feasible point found", None) from None
        vals = pts @ c
        lo, hi = float(vals.min()), float(vals.max())
    lim = (-1.0, 1.0) if query.is_ate else (0.0, 1.0)
    return BoundPair(float(np.clip(lo, *lim)), float(np.clip(hi, *lim)), query, "brute_force")


# -- fixtures -----------------------------------------------------------------------


def bow_scm(seed: int = 11) -> CanonicalScm:
    return gen_random_scm(bow_graph(), seed)


def scm1() -> CanonicalScm:
    """Two instruments of a confounded binary ``X -> Y`` where ``do(X=1)`` is the better action."""
    return gen_random_scm(two_instrument_graph(), SCM1_SEED)


def scm2() -> CanonicalScm:
    """Two observed confounders and no latent confounding."""
    return gen_random_scm(two_confounder_graph(), 3)


SCM1_SEED = 255  # true ATE 0.238


def _backdoor_cpts(effect: float):
    """``Z -> X -> Y`` tables with ``P(y=1) = 0.5`` and ``P(y=1 | do(x)) = 0.5 + effect * (x - 0.5)``."""
    py = lambda z, x: 0.4 + 0.2 * z + effect * (x - 0.5)  # noqa: E731
    return {
        "Z": [0.5, 0.5],
        "X": [[0.7, 0.3], [0.3, 0.7]],
        "Y": [[[1 - py(z, x), py(z, x)] for x in (0, 1)] for z in (0, 1)],
    }


@dataclass(frozen=True)
class DecisionFixture:
    kind: str
    graph: Admg
    scm: CanonicalScm
    n: int
    spec: QuerySpec
    config: ExploreConfig


def decision_fixtures(mode: str = "single") -> dict:
    """One fixture per move: strong backdoor effect, latent confounding, and no effect at all."""
    bd = backdoor_graph()
    spec = QuerySpec("X", "Y", 1, None, mode)
    cfg = ExploreConfig(eps_s=0.02, m=200, seed=0)
    return {
        "Return": DecisionFixture("Return", bd, scm_from_cpts(bd, _backdoor_cpts(0.6)), 5000, spec, cfg),
        "Observe": DecisionFixture("Observe", bow_graph(), bow_scm(), 20000, spec, cfg),
        "Collect": DecisionFixture("Collect", bd, scm_from_cpts(bd, _backdoor_cpts(0.0)), 2000, spec, cfg),
    }


# -- experiments -------------------------------------------------------------------


@dataclass(frozen=True)
class Setup:
    name: str
    observed: tuple[str, ...]
    n: int


@dataclass(frozen=True)
class ExperimentSpec:
    graph: Admg
    scm: CanonicalScm | None
    setups: tuple[Setup, ...]
    query: QuerySpec
    solver: str = "lp"
    seed: int = 0
    data_seed: int = 0
    alpha: float = 0.05
    eps_s: float = 0.01
    m: int = 200
    out_dir: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.setups:
            raise InputError("experiment needs at least one setup")
        last = {}
        for s in self.setups:
            key = tuple(sorted(s.observed))
            if key in last and s.n <= last[key]:
                raise InputError(f"sample sizes for observed set {list(key)} must be strictly increasing")
            last[key] = s.n
            unknown = set(s.observed) - set(self.graph.names)
            if unknown:
                raise InputError(f"setup {s.name!r} observes unknown variables {sorted(unknown)}")

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> ExperimentSpec:
        def load(x, loader):
            if isinstance(x, str):
                path = Path(x) if base is None or Path(x).is_absolute() else base / x
                return loader(json.loads(path.read_text()))
            return loader(x)

        g = load(d["graph"], Admg.from_dict)
        scm = None if d.get("scm") is None else load(d["scm"], lambda x: CanonicalScm.from_dict(x, g))
        q = d["query"]
        spec = QuerySpec(q["treatment"], q["outcome"], int(q.get("outcome_value", 1)),
                         None if q.get("actions") is None else tuple(q["actions"]), q.get("mode", "single"))
        setups = tuple(Setup(s["name"], tuple(s["observed"]), int(s["n"])) for s in d["setups"])
        return cls(g, scm, setups, spec, d.get("solver", "lp"), int(d.get("seed", 0)), int(d.get("data_seed", 0)),
                   float(d.get("alpha", 0.05)), float(d.get("eps_s", 0.01)), int(d.get("m", 200)), d.get("out"))

    @classmethod
    def load(cls, path) -> ExperimentSpec:
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), path.parent)

    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "scm": None if self.scm is None else self.scm.to_dict(),
            "setups": [{"name": s.name, "observed": list(s.observed), "n": s.n} for s in self.setups],
            "query": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self.query).items()},
            "solver": self.solver,
            "seed": self.seed,
            "data_seed": self.data_seed,
            "alpha": self.alpha,
            "eps_s": self.eps_s,
            "m": self.m,
            "out": self.out_dir,
        }


SUMMARY_COLUMNS = ("setup", "n", "action", "L_lo", "L_hi", "U_lo", "U_hi", "inner_width", "outer_width", "decision", "mean_width")


@dataclass(frozen=True)
class ExperimentResult:
    reports: dict  # setup name -> report document
    rows: tuple[dict, ...]
    claims: dict

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in r.items()})
        return buf.getvalue()


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every setup on nested data drawn once from the true SCM, then tabulate."""
    scm = spec.scm if spec.scm is not None else gen_random_scm(spec.graph, spec.seed)
    n_max = max(s.n for s in spec.setups)
    full = simulate_canonical(scm, n=n_max, seed=spec.data_seed)
    reports, rows = {}, []
    by_setup = {}
    for s in spec.setups:
        g = latent_projection(spec.graph, s.observed)
        d = full.select(g.names).head(s.n)
        cfg = ExploreConfig(spec.alpha, spec.eps_s, spec.m, spec.seed, spec.solver)
        res = explore(d, g, spec.query, cfg)
        echo = {"alpha": spec.alpha, "eps_s": spec.eps_s, "m": spec.m, "solver": spec.solver,
                "setup": s.name, "observed": list(g.names), "n": s.n}
        qd = {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(spec.query).items()}
        doc = build_report(res, qd, echo, spec.seed)
        reports[s.name] = doc
        by_setup[s.name] = res
        for dec in res.decompositions:
            mean_width = float(np.mean([b - a for a, b in dec.intervals]))
            rows.append({
                "setup": s.name, "n": s.n, "action": dec.query.describe(), "L_lo": dec.L_lo, "L_hi": dec.L_hi,
                "U_lo": dec.U_lo, "U_hi": dec.U_hi, "inner_width": dec.inner_width,
                "outer_width": dec.outer_width, "decision": res.move.kind, "mean_width": mean_width,
            })
    claims = _claims(spec, by_setup)
    result = ExperimentResult(reports, tuple(rows), claims)
    if spec.out_dir is not None:
        out = Path(spec.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, doc in reports.items():
            (out / f"{name}.json").write_text(dumps(doc))
        (out / "summary.csv").write_text(result.summary_csv())
        (out / "claims.json").write_text(json.dumps(claims, indent=2, sort_keys=True) + "\n")
    return result


def _claims(spec: ExperimentSpec, by_setup: dict) -> dict:
    """Qualitative checks: widths versus n for a fixed observed set, and versus added variables."""
    claims = {}
    groups = {}
    for s in spec.setups:
        groups.setdefault(tuple(sorted(s.observed)), []).append(s)
    for key, ss in groups.items():
        if len(ss) < 2:
            continue
        decs = [by_setup[s.name].decompositions for s in ss]
        for k in range(len(decs[0])):
            inner = [d[k].inner_width for d in decs]
            outer = [d[k].outer_width for d in decs]
            tag = f"{'+'.join(key)}:{decs[0][k].query.describe()}"
            claims[f"inner_nondecreasing[{tag}]"] = all(b >= a - 1e-9 for a, b in zip(inner, inner[1:]))
            claims[f"outer_nonincreasing[{tag}]"] = all(b <= a + 1e-9 for a, b in zip(outer, outer[1:]))
    setups = list(spec.setups)
    for a, b in zip(setups, setups[1:]):
        if a.n == b.n and set(a.observed) < set(b.observed):
            wa = [np.mean([h - l for l, h in d.intervals]) for d in by_setup[a.name].decompositions]
            wb = [np.mean([h - l for l, h in d.intervals]) for d in by_setup[b.name].decompositions]
            claims[f"mean_width_shrinks[{a.name}->{b.name}]"] = bool(all(y < x for x, y in zip(wa, wb)))
    return claims


def scm1_experiment(out_dir=None, seed: int = 0) -> ExperimentSpec:
    g = two_instrument_graph()
    return ExperimentSpec(
        g,
        scm1(),
        (
            Setup("setup1", ("X", "Y"), 1000),
            Setup("setup2", ("I1", "X", "Y"), 1000),
            Setup("setup3", ("I1", "I2", "X", "Y"), 1000),
            Setup("setup4", ("I1", "I2", "X", "Y"), 3000),
        ),
        QuerySpec("X", "Y", 1, None, "ate"),
        seed=seed,
        out_dir=out_dir,
    )


def scm2_experiment(out_dir=None, seed: int = 0) -> ExperimentSpec:
    g = two_confounder_graph()
    obs = ("Z1", "Z2", "X", "Y")
    return ExperimentSpec(
        g, scm2(), (Setup("setup1", obs, 1000), Setup("setup2", obs, 3000)),
        QuerySpec("X", "Y", 1, None, "ate"), seed=seed, out_dir=out_dir,
    )
