"""Dense two-phase revised simplex for small LPs.

Problems here have at most a few hundred columns, so the basis is
refactorized with a dense solve at every pivot instead of being updated.
Bland's rule picks both entering and leaving variables, which rules out
cycling on the heavily degenerate LPs that canonical models produce.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, SolverError


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-8
    pivot: float = 1e-10
    opt: float = 1e-9
    bound: float = 1e-10


TOL = Tolerances()


@dataclass
class LinearProgram:
    """``maximize c @ x`` subject to ``A_eq x = b_eq``, ``A_ub x <= b_ub``, ``lo <= x <= hi``.

    ``hi`` may contain ``inf``; ``lo`` must be finite.
    """

    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, n, "A_eq")
        self.A_ub, self.b_ub = _rows(self.A_ub, self.b_ub, n, "A_ub")
        self.lo = np.zeros(n) if self.lo is None else np.broadcast_to(np.asarray(self.lo, float), (n,)).copy()
        self.hi = np.full(n, np.inf) if self.hi is None else np.broadcast_to(np.asarray(self.hi, float), (n,)).copy()
        if not np.all(np.isfinite(self.lo)):
            raise InputError("lower bounds must be finite")
        if np.any(self.lo > self.hi):
            raise InputError("lo > hi for some coordinate")
        if self.A_eq.shape[0] == 0 and self.A_ub.shape[0] == 0 and not np.any(np.isfinite(self.hi)):
            raise InputError("LP needs at least one constraint row or finite bound")

    @property
    def n(self) -> int:
        return self.c.size

    def dump(self) -> str:
        """Plain-text rendering for triage."""
        fmt = lambda v: " ".join(f"{x:.17g}" for x in v)  # noqa: E731
        lines = [f"max {fmt(self.c)}"]
        for a, b in zip(self.A_eq, self.b_eq):
            lines.append(f"eq {fmt(a)} = {b:.17g}")
        for a, b in zip(self.A_ub, self.b_ub):
            lines.append(f"ub {fmt(a)} <= {b:.17g}")
        lines.append(f"lo {fmt(self.lo)}")
        lines.append(f"hi {fmt(self.hi)}")
        return "\n".join(lines) + "\n"


def _rows(A, b, n, name):
    if A is None:
        if b is not None and np.size(b):
            raise InputError(f"{name} missing but right-hand side given")
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[1] != n or A.shape[0] != b.size:
        raise InputError(f"{name} has shape {A.shape}, rhs {b.size}, expected (*, {n})")
    return A, b


@dataclass
class LPResult:
    value: float
    x: np.ndarray | None
    status: str  # "optimal" | "infeasible" | "unbounded"
    iterations: int = 0
    perturbed: bool = False
    infeasibility: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def __iter__(self):
        # allows ``value, x, status = solve(lp)``
        return iter((self.value, self.x, self.status))


def _standard_form(lp: LinearProgram):
    """Shift to ``y = x - lo >= 0`` and append slacks for finite uppers and ``A_ub``."""
    n = lp.n
    up = np.flatnonzero(np.isfinite(lp.hi))
    m_eq, m_ub, m_up = lp.A_eq.shape[0], lp.A_ub.shape[0], up.size
    n_tot = n + m_ub + m_up
    M = np.zeros((m_eq + m_ub + m_up, n_tot))
    r = np.zeros(M.shape[0])
    M[:m_eq, :n] = lp.A_eq
    r[:m_eq] = lp.b_eq - lp.A_eq @ lp.lo
    M[m_eq:m_eq + m_ub, :n] = lp.A_ub
    M[m_eq:m_eq + m_ub, n:n + m_ub] = np.eye(m_ub)
    r[m_eq:m_eq + m_ub] = lp.b_ub - lp.A_ub @ lp.lo
    for k, j in enumerate(up):
        M[m_eq + m_ub + k, j] = 1.0
        M[m_eq + m_ub + k, n + m_ub + k] = 1.0
        r[m_eq + m_ub + k] = lp.hi[j] - lp.lo[j]
    f = np.zeros(n_tot)
    f[:n] = -lp.c
    return M, r, f


class _Stall(Exception):
    pass


def _iterate(M, r, f, basis, tol, max_iter, stall_limit):
    """Bland-rule revised simplex minimizing ``f @ z`` from a feasible basis.

    Returns ``(status, basis, iterations)`` with status in
    {"optimal", "unbounded"}.
    """
    basis = list(basis)
    it = 0
    best = np.inf
    since_best = 0
    while True:
        B = M[:, basis]
        try:
            xB = np.linalg.solve(B, r)
            y = np.linalg.solve(B.T, f[basis])
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular basis", {"iterations": it}) from exc
        obj = float(f[basis] @ xB)
        if obj < best - 1e-13:
            best, since_best = obj, 0
        else:
            since_best += 1
            if since_best > stall_limit:
                raise _Stall()
        d = f - M.T @ y
        d[basis] = 0.0
        cand = np.flatnonzero(d < -tol.opt)
        if cand.size == 0:
            return "optimal", basis, it
        if it >= max_iter:
            raise SolverError(
                "iteration cap reached", {"iterations": it, "objective": obj, "min_reduced_cost": float(d.min())}
            )
        j = int(cand[0])
        col = np.linalg.solve(B, M[:, j])
        pos = np.flatnonzero(col > tol.pivot)
        if pos.size == 0:
            return "unbounded", basis, it
        ratios = np.maximum(xB[pos], 0.0) / col[pos]
        rmin = ratios.min()
        ties = pos[ratios <= rmin + 1e-12 * max(1.0, abs(rmin))]
        leave = min(ties, key=lambda i: basis[i])
        basis[leave] = j
        it += 1


def _run(lp: LinearProgram, tol: Tolerances, max_iter: int | None, perturb_seed: int | None):
    M, r, f = _standard_form(lp)
    m, n_tot = M.shape
    if max_iter is None:
        max_iter = 50 * (m + n_tot) + 1000
    stall_limit = 20 * (m + n_tot) + 200
    if perturb_seed is not None:
        rng = np.random.Generator(np.random.Philox(perturb_seed))
        r = r + rng.uniform(0.0, 1e-12, size=r.shape)

    if m == 0:
        # only x >= lo: optimum at y = 0 unless some direction is unbounded
        if np.any(f < -tol.opt):
            return LPResult(np.inf, None, "unbounded")
        return _finish(lp, np.zeros(n_tot), 0, perturb_seed is not None, tol)

    neg = r < 0
    M = M.copy()
    M[neg] *= -1
    r = np.where(neg, -r, r)

    # phase 1: artificial per row
    M1 = np.hstack([M, np.eye(m)])
    f1 = np.concatenate([np.zeros(n_tot), np.ones(m)])
    basis = list(range(n_tot, n_tot + m))
    status, basis, it1 = _iterate(M1, r, f1, basis, tol, max_iter, stall_limit)
    xB = np.linalg.solve(M1[:, basis], r)
    infeas = float(sum(x for b, x in zip(basis, xB) if b >= n_tot))
    scale = max(1.0, float(np.abs(r).max()))
    if infeas > tol.feas * scale:
        return LPResult(np.nan, None, "infeasible", it1, perturb_seed is not None, infeas)

    # drive zero-level artificials out; drop rows that turn out redundant
    rows = list(range(m))
    k = 0
    while k < len(basis):
        if basis[k] < n_tot:
            k += 1
            continue
        B = M1[np.ix_(rows, basis)]
        Binv_row = np.linalg.solve(B.T, np.eye(len(rows))[k])
        alpha = Binv_row @ M[rows]
        nonbasic = [j for j in range(n_tot) if j not in basis and abs(alpha[j]) > 1e-9]
        if nonbasic:
            basis[k] = nonbasic[0]
            k += 1
        else:
            del rows[k]
            del basis[k]
    M2, r2 = M[rows], r[rows]
    if not rows:
        if np.any(f < -tol.opt):
            return LPResult(np.inf, None, "unbounded", it1)
        return _finish(lp, np.zeros(n_tot), it1, perturb_seed is not None, tol)

    status, basis, it2 = _iterate(M2, r2, f, basis, tol, max_iter, stall_limit)
    if status == "unbounded":
        return LPResult(np.inf, None, "unbounded", it1 + it2, perturb_seed is not None)
    z = np.zeros(n_tot)
    B = M2[:, basis]
    xB = np.linalg.solve(B, r2)
    # one step of iterative refinement
    xB = xB + np.linalg.solve(B, r2 - B @ xB)
    z[basis] = xB
    return _finish(lp, z, it1 + it2, perturb_seed is not None, tol)


def _finish(lp, z, iterations, perturbed, tol):
    x = lp.lo + z[: lp.n]
    # absorb round-off at the bounds
    x = np.where((x < lp.lo) & (x > lp.lo - tol.bound), lp.lo, x)
    x = np.where((x > lp.hi) & (x < lp.hi + tol.bound), lp.hi, x)
    diag = {
        "eq_residual": float(np.abs(lp.A_eq @ x - lp.b_eq).max()) if lp.A_eq.size else 0.0,
        "ub_violation": float(np.max(lp.A_ub @ x - lp.b_ub, initial=0.0)) if lp.A_ub.size else 0.0,
        "bound_violation": float(max(np.max(lp.lo - x, initial=0.0), np.max(x - lp.hi, initial=0.0))),
    }
    scale = max(1.0, float(np.abs(lp.b_eq).max(initial=0.0)), float(np.abs(lp.b_ub).max(initial=0.0)))
    if diag["eq_residual"] > tol.feas * scale or diag["ub_violation"] > tol.feas * scale or diag["bound_violation"] > tol.bound:
        raise SolverError("optimizer failed feasibility verification", diag)
    return LPResult(float(lp.c @ x), x, "optimal", iterations, perturbed, 0.0, diag)


def solve(lp: LinearProgram, tol: Tolerances = TOL, max_iter: int | None = None) -> LPResult:
    """Maximize ``lp``.

    The returned optimizer is verified against every constraint before
    return.  If the Bland iteration stalls, the right-hand side is perturbed
    by at most 1e-12 and the solve is retried once; ``perturbed`` reports it.
    """
    try:
        return _run(lp, tol, max_iter, None)
    except _Stall:
        pass
    try:
        return _run(lp, tol, max_iter, 0)
    except _Stall:
        raise SolverError("simplex stalled even after perturbation", {"n": lp.n}) from None


def minimize(lp: LinearProgram, tol: Tolerances = TOL, max_iter: int | None = None) -> LPResult:
    """Minimize ``lp.c @ x`` over the same feasible set."""
    neg = LinearProgram(-lp.c, lp.A_eq, lp.b_eq, lp.lo, lp.hi, lp.A_ub, lp.b_ub)
    res = solve(neg, tol, max_iter)
    if res.status == "optimal":
        res.value = float(lp.c @ res.x)
    elif res.status == "unbounded":
        res.value = -np.inf
    return res
