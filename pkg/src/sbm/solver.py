"""Support-constrained maximum likelihood over a compact box.

The objective is strictly convex in (mu, beta_support) on the open box, so a
projected Newton method with an active-set clamp at the box faces converges
globally.  Boundary solutions are reported, not errored; a cheap necessary
condition for existence of the unconstrained MLE is attached to every fit.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .graph import Graph
from .likelihood import SbmParams, SuffStats, nll_gradient, nll_hessian, nll_value

_BOUNDARY_EPS = 1e-9
_ACTIVE_EPS = 1e-12
_RIDGE = 1e-10
_ARMIJO = 1e-4


@dataclass(frozen=True)
class FitConfig:
    """Box bounds |mu| <= m1, 0 <= beta_i <= m2, and stopping rules."""

    m1: float = 30.0
    m2: float = 30.0
    tol: float = 1e-8
    max_iter: int = 200
    warm_start: SbmParams | None = None

    def __post_init__(self):
        if not (np.isfinite(self.m1) and self.m1 > 0):
            raise ValueError("m1 must be a finite positive number")
        if not (np.isfinite(self.m2) and self.m2 > 0):
            raise ValueError("m2 must be a finite positive number")
        if self.tol <= 0:
            raise ValueError("tol must be positive")

    def with_warm_start(self, params: SbmParams | None) -> "FitConfig":
        return replace(self, warm_start=params)


@dataclass(frozen=True)
class ExistenceCheck:
    ok: bool
    reasons: tuple[str, ...]


@dataclass(frozen=True)
class FitResult:
    """Constrained MLE for one support."""

    params: SbmParams
    support: tuple[int, ...]
    nll: float
    converged: bool
    iterations: int
    kkt_residual: float
    at_boundary: np.ndarray  # bool per coordinate of (mu, beta_support)
    existence_ok: bool

    def __post_init__(self):
        flags = np.asarray(self.at_boundary, dtype=bool)
        flags.setflags(write=False)
        object.__setattr__(self, "at_boundary", flags)

    @property
    def any_boundary(self) -> bool:
        return bool(self.at_boundary.any())

    @property
    def beta_support(self) -> np.ndarray:
        return self.params.beta[list(self.support)]


def existence_check(g: Graph, support) -> ExistenceCheck:
    """Necessary condition for the support-constrained MLE to exist without
    the box: 0 < d+ < n(n-1)/2 and 0 < d_i < n-1 on the support.

    Necessary but not sufficient for the sufficient statistic to lie in the
    interior of its convex hull.
    """
    reasons = []
    if g.d_plus <= 0:
        reasons.append("d_plus at lower boundary")
    if g.d_plus >= g.max_edges:
        reasons.append("d_plus at upper boundary")
    for i in sorted(set(int(j) for j in support)):
        if g.degrees[i] <= 0:
            reasons.append(f"d_{i} at lower boundary")
        elif g.degrees[i] >= g.n - 1:
            reasons.append(f"d_{i} at upper boundary")
    return ExistenceCheck(ok=not reasons, reasons=tuple(reasons))


def _initial_point(g: Graph, s: int, cfg: FitConfig) -> np.ndarray:
    # ER fit on the clamped density is a feasible interior start.
    pairs = g.max_edges
    lo = 1.0 / (pairs + 1.0) if pairs else 0.5
    density = min(max(g.density(), lo), 1.0 - lo)
    mu0 = float(np.clip(np.log(density / (1.0 - density)), -cfg.m1, cfg.m1))
    theta = np.zeros(1 + s)
    theta[0] = mu0
    return theta


def fit_support(g: Graph, support, cfg: FitConfig | None = None) -> FitResult:
    """Minimize the negative log-likelihood with beta = 0 off ``support``.

    Support coordinates with equal degree are exchangeable in the objective,
    so the unique optimum assigns them one common value; the Newton iteration
    therefore runs on one variable per distinct degree inside the support
    (exact ties by construction, smaller and better-conditioned systems).
    Projected Newton on the free coordinates with Armijo backtracking;
    converged means the per-coordinate projected gradient's max-norm is
    <= cfg.tol.
    """
    cfg = cfg or FitConfig()
    stats = SuffStats.from_graph(g, support)
    s = len(stats.support)
    if s > g.n - 1:
        raise ValueError("support size must be at most n-1")
    n, d_plus, d_sup = stats.n, stats.d_plus, stats.d_support

    # one optimization variable per distinct degree within the support
    _, group_of = np.unique(d_sup, return_inverse=True)
    n_groups = int(group_of.max()) + 1 if s else 0
    expand = np.zeros((s, n_groups))
    expand[np.arange(s), group_of] = 1.0

    lo = np.concatenate([[-cfg.m1], np.zeros(n_groups)])
    hi = np.concatenate([[cfg.m1], np.full(n_groups, cfg.m2)])
    if cfg.warm_start is not None:
        ws = cfg.warm_start
        if ws.n != g.n:
            raise ValueError("warm start has wrong dimension")
        if not set(ws.support) <= set(stats.support):
            raise ValueError("warm start support not contained in the fit support")
        beta_ws = ws.beta[list(stats.support)]
        theta = np.concatenate(
            [[ws.mu],
             np.bincount(group_of, weights=beta_ws, minlength=n_groups)
             / np.bincount(group_of, minlength=n_groups)]
            if s
            else [[ws.mu]]
        )
        theta = np.clip(theta, lo, hi)
    else:
        theta = _initial_point(g, n_groups, cfg)

    def beta_at(t):
        return t[1:][group_of] if s else np.empty(0)

    def value(t):
        return nll_value(n, d_plus, d_sup, t[0], beta_at(t))

    def coord_and_group_grad(t):
        gc = nll_gradient(n, d_plus, d_sup, t[0], beta_at(t))
        if s:
            gg = np.concatenate([[gc[0]], np.bincount(group_of, weights=gc[1:],
                                                      minlength=n_groups)])
        else:
            gg = gc
        return gc, gg

    f = value(theta)
    converged = False
    kkt = np.inf
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        grad_coord, grad = coord_and_group_grad(theta)
        clamped = ((theta <= lo + _ACTIVE_EPS) & (grad > 0)) | (
            (theta >= hi - _ACTIVE_EPS) & (grad < 0)
        )
        # convergence is judged per original coordinate
        coord_clamped = np.concatenate([[clamped[0]], clamped[1:][group_of]]) if s else clamped
        kkt = float(np.abs(np.where(coord_clamped, 0.0, grad_coord)).max())
        if kkt <= cfg.tol:
            converged = True
            break
        free = ~clamped
        hess_coord = nll_hessian(n, theta[0], beta_at(theta))
        if s:
            hess = np.empty((1 + n_groups, 1 + n_groups))
            hess[0, 0] = hess_coord[0, 0]
            hess[0, 1:] = hess_coord[0, 1:] @ expand
            hess[1:, 0] = hess[0, 1:]
            hess[1:, 1:] = expand.T @ hess_coord[1:, 1:] @ expand
        else:
            hess = hess_coord
        h_ff = hess[np.ix_(free, free)] + _RIDGE * np.eye(int(free.sum()))
        step = np.zeros_like(theta)
        try:
            step[free] = np.linalg.solve(h_ff, -grad[free])
        except np.linalg.LinAlgError:
            step[free] = -grad[free]

        accepted = False
        # near the optimum the true decrease sits below float noise on the
        # objective, so the sufficient-decrease test carries a small slack
        noise = 1e-12 * (1.0 + abs(f))
        for direction in (step, np.where(free, -grad, 0.0)):
            t = 1.0
            while t > 1e-18:
                cand = np.clip(theta + t * direction, lo, hi)
                move = cand - theta
                if not move.any():
                    break
                f_cand = value(cand)
                if f_cand <= f + _ARMIJO * float(grad @ move) + noise:
                    theta, f = cand, f_cand
                    accepted = True
                    break
                t *= 0.5
            if accepted:
                break
        if not accepted:
            # No admissible decrease left at floating-point resolution.
            break

    theta_coord = np.concatenate([[theta[0]], beta_at(theta)])
    lo_coord = np.concatenate([[-cfg.m1], np.zeros(s)])
    hi_coord = np.concatenate([[cfg.m1], np.full(s, cfg.m2)])
    at_boundary = (theta_coord <= lo_coord + _BOUNDARY_EPS) | (
        theta_coord >= hi_coord - _BOUNDARY_EPS
    )
    beta = np.zeros(g.n)
    beta[list(stats.support)] = beta_at(theta)
    params = SbmParams(mu=theta[0], beta=beta)
    return FitResult(
        params=params,
        support=stats.support,
        nll=f,
        converged=converged,
        iterations=iterations,
        kkt_residual=kkt,
        at_boundary=at_boundary,
        existence_ok=existence_check(g, stats.support).ok,
    )
