"""Two-stage take-up pipeline: per-group fits, centrality covariates, and
logistic regressions.

Stage one fits the sparse model to every group network (groups are disjoint
blocks, e.g. villages) and derives node covariates from the selected fit:
beta-centrality beta_hat + mu_hat/2, the leader indicator 1{beta_hat > 0},
degree, and eigenvector centrality.  Stage two regresses a binary outcome on
eight covariate combinations via maximum-likelihood logit fits.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph, eigenvector_centrality
from .likelihood import log1pexp, sigmoid
from .path import PathEntry, select, solution_path
from .solver import FitConfig

log = logging.getLogger(__name__)

_SEPARATION_LIMIT = 50.0

# Model index -> covariate columns; "leader_mu" is 1{beta_hat>0} + mu_hat/2.
TAKEUP_MODELS: tuple[tuple[str, ...], ...] = (
    ("degree",),
    ("eigenvector",),
    ("beta_star",),
    ("leader_mu",),
    ("degree", "beta_star"),
    ("degree", "leader_mu"),
    ("eigenvector", "beta_star"),
    ("eigenvector", "leader_mu"),
)

TERM_LABELS = {
    "degree": "Degree",
    "eigenvector": "Eigenvector",
    "beta_star": "Beta",
    "leader_mu": "Leader",
}


@dataclass(frozen=True)
class NodeRow:
    node_id: int
    group_id: str
    outcome: int | None
    degree: int
    eigenvector: float
    beta_hat: float
    mu_hat_group: float
    beta_star: float
    leader: int


@dataclass(frozen=True)
class LogitFit:
    coefficients: np.ndarray
    standard_errors: np.ndarray
    z_values: np.ndarray
    p_values: np.ndarray
    loglik: float
    converged: bool
    separation_flag: bool
    n_obs: int


def fit_by_group(
    graphs: dict[str, Graph],
    cfg: FitConfig | None = None,
    cap_fraction: float = 0.5,
    criterion: str = "bic",
    include_null: bool = False,
) -> dict[str, PathEntry]:
    """Run the solution path and BIC selection independently per group.

    The per-group sparsity cap is floor(cap_fraction * n).  Groups without
    edges are skipped with a warning.
    """
    if not 0.0 < cap_fraction <= 1.0:
        raise ValueError("cap_fraction must lie in (0, 1]")
    selected: dict[str, PathEntry] = {}
    for group in sorted(graphs):
        g = graphs[group]
        if g.d_plus == 0:
            log.warning("group %s has no edges; skipped", group)
            continue
        max_size = max(1, int(cap_fraction * g.n))
        path = solution_path(g, max_size=max_size, cfg=cfg)
        selected[group] = select(path, variant=criterion, include_null=include_null)
    return selected


def build_node_table(
    fits: dict[str, PathEntry],
    graphs: dict[str, Graph],
    outcomes: dict[str, dict[str, int]] | None = None,
) -> list[NodeRow]:
    """One row per node across all fitted groups.

    ``outcomes`` maps group -> node key -> binary outcome, where the node key
    is the graph label when a label sidecar is present and the integer id as
    a string otherwise.  Outcome keys that match no node are an error;
    nodes without an outcome get outcome None.
    """
    outcomes = outcomes or {}
    unknown_groups = set(outcomes) - set(fits)
    if unknown_groups:
        raise ValueError(f"outcomes reference unfitted groups: {sorted(unknown_groups)}")
    rows: list[NodeRow] = []
    for group in sorted(fits):
        g = graphs[group]
        entry = fits[group]
        params = entry.fit.params
        centrality = eigenvector_centrality(g) if g.d_plus else np.zeros(g.n)
        keys = list(g.labels) if g.labels is not None else [str(i) for i in range(g.n)]
        group_outcomes = dict(outcomes.get(group, {}))
        missing = set(group_outcomes) - set(keys)
        if missing:
            raise ValueError(
                f"outcomes for group {group} reference unknown nodes: {sorted(missing)}"
            )
        for i in range(g.n):
            beta_hat = float(params.beta[i])
            beta_star = beta_hat + params.mu / 2.0
            rows.append(
                NodeRow(
                    node_id=i,
                    group_id=group,
                    outcome=group_outcomes.get(keys[i]),
                    degree=int(g.degrees[i]),
                    eigenvector=float(centrality[i]),
                    beta_hat=beta_hat,
                    mu_hat_group=float(params.mu),
                    beta_star=beta_star,
                    leader=int(beta_hat > 0),
                )
            )
    return rows


def logistic_fit(design: np.ndarray, y: np.ndarray, tol: float = 1e-8,
                 max_iter: int = 100) -> LogitFit:
    """Maximum-likelihood logit via Newton-Raphson with backtracking.

    Standard errors come from the inverse observed information at the
    optimum.  Separation (an MLE at infinity) is flagged when the
    coefficients run past +-50 while the gradient still improves, or when
    the stopped fit reproduces the response exactly.
    """
    x = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if x.ndim != 2 or x.shape[0] != y.size:
        raise ValueError("design and response shapes disagree")
    n_obs, k = x.shape
    if n_obs < k:
        raise ValueError("fewer observations than parameters")
    if np.linalg.matrix_rank(x) < k:
        raise ValueError("design matrix is rank deficient")

    theta = np.zeros(k)

    def negloglik(t):
        eta = x @ t
        return float(np.sum(log1pexp(eta)) - y @ eta)

    f = negloglik(theta)
    converged = False
    separation = False
    for _ in range(max_iter):
        eta = x @ theta
        p = sigmoid(eta)
        grad = x.T @ (p - y)
        if np.linalg.norm(grad) <= tol:
            converged = True
            break
        if np.abs(theta).max() > _SEPARATION_LIMIT:
            separation = True
            break
        w = p * (1.0 - p)
        hess = (x * w[:, None]).T @ x
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step = -grad
        t = 1.0
        while t > 1e-18:
            cand = theta + t * step
            f_cand = negloglik(cand)
            if f_cand <= f + 1e-4 * t * float(grad @ step):
                theta, f = cand, f_cand
                break
            t *= 0.5
        else:
            break

    eta = x @ theta
    p = sigmoid(eta)
    # MLE at infinity: the fit reproduces the response exactly (complete
    # separation or a degenerate all-0/all-1 response).
    if np.abs(p - y).max() < 1e-6:
        separation = True
    w = p * (1.0 - p)
    hess = (x * w[:, None]).T @ x
    if separation:
        se = np.full(k, np.nan)
    else:
        try:
            se = np.sqrt(np.diag(np.linalg.inv(hess)))
        except np.linalg.LinAlgError:
            se = np.full(k, np.nan)
            separation = True
    with np.errstate(divide="ignore", invalid="ignore"):
        z = theta / se
    pvals = np.array([math.erfc(abs(v) / math.sqrt(2.0)) if np.isfinite(v) else np.nan
                      for v in z])
    return LogitFit(
        coefficients=theta,
        standard_errors=se,
        z_values=z,
        p_values=pvals,
        loglik=-f,
        converged=converged and not separation,
        separation_flag=separation,
        n_obs=n_obs,
    )


def _covariate(rows: list[NodeRow], name: str) -> np.ndarray:
    if name == "degree":
        return np.array([r.degree for r in rows], dtype=float)
    if name == "eigenvector":
        return np.array([r.eigenvector for r in rows])
    if name == "beta_star":
        return np.array([r.beta_star for r in rows])
    if name == "leader_mu":
        return np.array([r.leader + r.mu_hat_group / 2.0 for r in rows])
    raise ValueError(f"unknown covariate {name!r}")


@dataclass(frozen=True)
class TakeupModel:
    index: int
    terms: tuple[str, ...]
    fit: LogitFit


def run_takeup_models(rows: list[NodeRow]) -> list[TakeupModel]:
    """Fit the eight take-up specifications on the assembled node table.

    Rows without an outcome are dropped (count logged), matching how survey
    nonresponse is usually handled.
    """
    usable = [r for r in rows if r.outcome is not None]
    dropped = len(rows) - len(usable)
    if dropped:
        log.info("dropping %d rows without outcomes from the regressions", dropped)
    if not usable:
        raise ValueError("no rows with outcomes")
    y = np.array([r.outcome for r in usable], dtype=float)
    results = []
    for idx, terms in enumerate(TAKEUP_MODELS, start=1):
        cols = [np.ones(len(usable))] + [_covariate(usable, t) for t in terms]
        design = np.column_stack(cols)
        results.append(TakeupModel(index=idx, terms=terms, fit=logistic_fit(design, y)))
    return results


def takeup_table(models: list[TakeupModel]) -> list[dict]:
    """Long-form coefficient table (one row per model term, intercept included)."""
    out = []
    for model in models:
        names = ("intercept",) + model.terms
        for j, name in enumerate(names):
            out.append(
                {
                    "model": model.index,
                    "term": TERM_LABELS.get(name, name),
                    "estimate": float(model.fit.coefficients[j]),
                    "std_error": float(model.fit.standard_errors[j]),
                    "z_value": float(model.fit.z_values[j]),
                    "p_value": float(model.fit.p_values[j]),
                    "converged": model.fit.converged,
                    "separation": model.fit.separation_flag,
                    "n_obs": model.fit.n_obs,
                }
            )
    return out
