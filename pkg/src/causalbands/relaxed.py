"""Lagrangian gradient trainer over a logit-parameterized canonical model.

Only the treatment's c-component carries free parameters; every other
conditional is held at its value in the anchor distribution.  Each
conditional of the free component gets one dual multiplier that grows while
its total-variation distance to the anchor exceeds the slack.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bounds import BoundPair, Query, as_factorization, conditional_rows, effect_vector
from .dist import make_rng
from .errors import InputError, OptimizationFailure
from .graph import Admg

FEAS_TOL = 0.0


@dataclass(frozen=True)
class RelaxedTrainConfig:
    eps_s: float = 0.01
    ate_weight: float = 1.0  # lambda
    lr: float = 0.1  # dual step
    eta: float = 0.2  # parameter step
    max_epoch: int = 2000
    seed: int = 0
    direction: str = "max"
    dual_init: float = 1.0  # starting value of every multiplier
    decay: float = 100.0  # step at epoch t is eta / sqrt(1 + t / decay)

    def __post_init__(self):
        if self.eps_s < 0:
            raise InputError("eps_s must be nonnegative")
        if self.lr <= 0 or self.eta <= 0:
            raise InputError("step sizes must be positive")
        if self.ate_weight < 0:
            raise InputError("ate_weight must be nonnegative")
        if self.max_epoch < 1:
            raise InputError("max_epoch must be at least 1")
        if self.direction not in ("min", "max"):
            raise InputError(f"direction must be 'min' or 'max', got {self.direction!r}")
        if self.decay <= 0:
            raise InputError("decay must be positive")
        if self.dual_init < 0:
            raise InputError("dual_init must be nonnegative")


def _softmax(theta):
    z = np.exp(theta - theta.max())
    return z / z.sum()


@dataclass
class TrainTrace:
    value: float
    epoch: int
    distances: np.ndarray
    multipliers: np.ndarray


def _distances(rows, q):
    den = rows.D @ q
    num = rows.N @ q  # (K, S)
    safe = np.where(den > 1e-300, den, 1.0)
    model = num / safe[:, None]
    return model, den, 0.5 * np.abs(model - rows.target).sum(axis=1)


def relaxed_train(p_eps, g: Admg, query: Query, cfg: RelaxedTrainConfig = RelaxedTrainConfig(), trace: list | None = None) -> BoundPair:
    """Push ``query`` to one extreme while every conditional stays within ``eps_s`` TVD of ``p_eps``.

    Returns a degenerate :class:`BoundPair` holding the effect at the last
    feasible iterate, in the ``lower`` slot and the ``upper`` slot alike.
    Raises :class:`OptimizationFailure` if no iterate was feasible.
    """
    f = as_factorization(p_eps, g, strict=False)
    rows = conditional_rows(f, g, query.treatment)
    c = effect_vector(f, g, query)
    rng = make_rng(cfg.seed)
    P = c.size
    theta = 0.1 * rng.standard_normal(P)
    alpha = np.full(len(rows.labels), float(cfg.dual_init))
    sign = 1.0 if cfg.direction == "max" else -1.0
    lam = cfg.ate_weight
    best_value = None
    best_resid = None
    for epoch in range(cfg.max_epoch):
        q = _softmax(theta)
        model, den, d = _distances(rows, q)
        e = float(c @ q)
        if np.all(d <= cfg.eps_s + FEAS_TOL):
            best_value = e
            if trace is not None:
                trace.append(TrainTrace(e, epoch, d.copy(), alpha.copy()))
        elif best_resid is None or d.max() < best_resid.max():
            best_resid = d.copy()
        # d/dq of -lambda log(1 + sign e)
        grad = -lam * sign * c / max(1.0 + sign * e, 1e-12)
        s = np.sign(model - rows.target)  # (K, S)
        safe = np.where(den > 1e-300, den, 1.0)
        # d d_k / dq = 0.5 sum_s s_ks (N_ks - model_ks D_k) / den_k
        dd = 0.5 * (np.einsum("ks,ksp->kp", s, rows.N) - (s * model).sum(axis=1)[:, None] * rows.D) / safe[:, None]
        dd[den <= 1e-300] = 0.0
        grad = grad + alpha @ dd
        # logits move along dL/dq (a mirror step on the simplex), normalized so
        # growing multipliers cannot blow the step up
        scale = np.abs(grad).max()
        if not np.isfinite(scale):
            break
        if scale > 0:
            theta = theta - cfg.eta / np.sqrt(1.0 + epoch / cfg.decay) * grad / scale
        alpha = np.maximum(0.0, alpha + cfg.lr * (d - cfg.eps_s))
    q = _softmax(theta)
    _, _, d = _distances(rows, q)
    if np.all(d <= cfg.eps_s + FEAS_TOL):
        best_value = float(c @ q)
    if best_value is None:
        resid = best_resid if best_resid is not None else d
        raise OptimizationFailure(
            f"no iterate within slack after {cfg.max_epoch} epochs (worst TVD {resid.max():.4g})",
            dict(zip(rows.labels, map(float, resid))),
        )
    lim = (-1.0, 1.0) if query.is_ate else (0.0, 1.0)
    v = float(np.clip(best_value, *lim))
    return BoundPair(v, v, query, "gradient")


def relaxed_bounds(p_eps, g: Admg, query: Query, cfg: RelaxedTrainConfig = RelaxedTrainConfig()) -> BoundPair:
    """Run the trainer in both directions and pair the endpoints."""
    lo = relaxed_train(p_eps, g, query, _with(cfg, direction="min"))
    hi = relaxed_train(p_eps, g, query, _with(cfg, direction="max"))
    return BoundPair(min(lo.lower, hi.upper), max(lo.lower, hi.upper), query, "gradient")


def _with(cfg, **kw):
    return replace(cfg, **kw)
